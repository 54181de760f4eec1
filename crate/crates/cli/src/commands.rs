use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use ndarray::Array3;

use trajopt_core::kernels::{
    bifpn_fuse, eca_channel_weights, eca_kernel_size, focal_loss, focal_loss_grad,
    normalize_fusion_weights, sigmoid, silu, EcaParams, FocalLossParams, FusionInputs,
    FUSION_EPSILON,
};
use trajopt_core::pso::{run, SegmentTimeObjective, SwarmConfig};
use trajopt_core::{plan, sample, Error as CoreError, Variant};

use crate::config::{ConfigFile, SyncModeName};
use crate::output::{convergence_csv, num, times_json, trajectory_csv, write_atomic};

/// Process exit codes.
pub mod exit {
    pub const CONFIG: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const KERNEL_CHECK: i32 = 3;
}

pub const MIN_COMPARE_SEEDS: usize = 20;

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Infeasible(anyhow::Error),
    KernelCheck(usize),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => exit::CONFIG,
            Self::Infeasible(_) => exit::INFEASIBLE,
            Self::KernelCheck(_) => exit::KERNEL_CHECK,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "configuration error: {e:#}"),
            Self::Infeasible(e) => write!(f, "no feasible solution: {e:#}"),
            Self::KernelCheck(n) => write!(f, "{n} kernel check(s) failed"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Config(e)
    }
}

fn classify(e: CoreError) -> Failure {
    match e {
        CoreError::NoFeasibleSolution | CoreError::InfeasibleAfterSync { .. } => {
            Failure::Infeasible(e.into())
        }
        other => Failure::Config(other.into()),
    }
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub dt: f64,
    pub sync: Option<SyncModeName>,
    pub seeds: usize,
    pub workers: Option<usize>,
}

fn prepare_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

pub fn cmd_plan(m: &RunManifest) -> Result<(), Failure> {
    if !(m.dt.is_finite() && m.dt > 0.0) {
        return Err(Failure::Config(anyhow!("--dt must be positive, got {}", m.dt)));
    }
    let config = ConfigFile::load(&m.config)?;
    let problem = config.problem(m.sync)?;
    let swarm = config.swarm(m.seed, m.workers)?;
    prepare_out_dir(&m.out)?;

    let outcome = plan(&problem, &swarm).map_err(classify)?;
    let samples = sample(&outcome.trajectory, m.dt).map_err(classify)?;

    write_atomic(&m.out.join("trajectory.csv"), &trajectory_csv(&samples))?;
    write_atomic(&m.out.join("times.json"), &times_json(&outcome.trajectory.times))?;
    write_atomic(&m.out.join("convergence.csv"), &convergence_csv(&outcome.histories[0]))?;
    if outcome.histories.len() > 1 {
        for (j, history) in outcome.histories.iter().enumerate() {
            write_atomic(
                &m.out.join(format!("convergence_joint{j}.csv")),
                &convergence_csv(history),
            )?;
        }
    }
    let t = outcome.trajectory.times;
    println!(
        "segment times {:.6} {:.6} {:.6} s, total {:.6} s -> {}",
        t.t1(),
        t.t2(),
        t.t3(),
        t.total(),
        m.out.display()
    );
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSummary {
    pub median_standard: f64,
    pub median_improved: f64,
    pub median_ratio: f64,
}

pub fn cmd_compare_pso(m: &RunManifest) -> Result<CompareSummary, Failure> {
    if m.seeds < MIN_COMPARE_SEEDS {
        return Err(Failure::Config(anyhow!(
            "--seeds must be at least {MIN_COMPARE_SEEDS}, got {}",
            m.seeds
        )));
    }
    let config = ConfigFile::load(&m.config)?;
    let problem = config.problem(Some(SyncModeName::Shared))?;
    let base = config.swarm(m.seed, m.workers)?;
    prepare_out_dir(&m.out)?;
    let objective = SegmentTimeObjective {
        problem: &problem,
        penalty_coefficient: base.penalty_coefficient,
    };

    let mut compare = String::from("seed,variant,iterations_to_1pct,final_fitness\n");
    let mut history = String::from("seed,variant,iteration,gbest_fitness\n");
    let mut iterations = [Vec::new(), Vec::new()];
    for i in 0..m.seeds as u64 {
        let seed = base.seed.wrapping_add(i);
        for (slot, (variant, name)) in [(Variant::Standard, "standard"), (Variant::Improved, "improved")]
            .into_iter()
            .enumerate()
        {
            let cfg = SwarmConfig {
                seed,
                variant,
                ..base.clone()
            };
            let result = run(&cfg, &objective).map_err(classify)?;
            let its = result.iterations_to_within(0.01);
            iterations[slot].push(its as f64);
            let _ = writeln!(compare, "{seed},{name},{its},{}", num(result.best_fitness));
            for h in &result.history {
                let _ = writeln!(history, "{seed},{name},{},{}", h.iteration, num(h.gbest_fitness));
            }
        }
    }
    let median_standard = median(&mut iterations[0]);
    let median_improved = median(&mut iterations[1]);
    let summary = CompareSummary {
        median_standard,
        median_improved,
        median_ratio: median_improved / median_standard,
    };
    let json = format!(
        "{{\n  \"seeds\": {},\n  \"median_iterations_standard\": {},\n  \"median_iterations_improved\": {},\n  \"median_ratio\": {}\n}}\n",
        m.seeds,
        num(summary.median_standard),
        num(summary.median_improved),
        num(summary.median_ratio)
    );
    write_atomic(&m.out.join("compare.csv"), &compare)?;
    write_atomic(&m.out.join("compare_history.csv"), &history)?;
    write_atomic(&m.out.join("summary.json"), &json)?;
    println!(
        "median iterations to 1%: standard {median_standard}, improved {median_improved}, ratio {:.4}",
        summary.median_ratio
    );
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct KernelCheck {
    pub name: &'static str,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
}

impl KernelCheck {
    pub fn passed(&self) -> bool {
        (self.actual - self.expected).abs() <= self.tolerance
    }
}

fn check(name: &'static str, expected: f64, actual: trajopt_core::Result<f64>, tolerance: f64) -> KernelCheck {
    KernelCheck {
        name,
        expected,
        actual: actual.unwrap_or(f64::NAN),
        tolerance,
    }
}

/// Evaluates the reference examples of every closed-form kernel.
pub fn kernel_checks() -> Vec<KernelCheck> {
    let eca = EcaParams::default();
    let focal = FocalLossParams::default();
    let size = |c| eca_kernel_size(c, &eca).map(|k| k as f64);
    let ln3 = 3f64.ln();
    let weights = eca_channel_weights(&[0.0, ln3, -ln3], &[1.0]);
    let weight = |i: usize| weights.clone().map(|w| w[i]);
    let fused = bifpn_fuse(&FusionInputs::new(
        [2.0, 1.0, 1.0],
        [scalar_map(4.0), scalar_map(0.0), scalar_map(0.0)],
    ))
    .map(|z| z[(1, 0, 0)]);
    let y = 2.0 / (4.0 + FUSION_EPSILON) * 4.0;
    let grad_fd = {
        let h = 1e-6;
        (focal_loss(0.5 + h, &focal).unwrap_or(f64::NAN) - focal_loss(0.5 - h, &focal).unwrap_or(f64::NAN))
            / (2.0 * h)
    };

    vec![
        check("eca_kernel_size(128)", 5.0, size(128), 0.0),
        check("eca_kernel_size(512)", 7.0, size(512), 0.0),
        check("eca_kernel_size(2)", 1.0, size(2), 0.0),
        check("eca_weight[0] (zero input)", 0.5, weight(0), 1e-15),
        check("eca_weight[1] (ln 3)", 0.75, weight(1), 1e-15),
        check("eca_weight[2] (-ln 3)", 0.25, weight(2), 1e-15),
        check(
            "fusion w' (w = 1,1,1)",
            1.0 / 3.0001,
            normalize_fusion_weights(&[1.0; 3], FUSION_EPSILON).map(|w| w[0]),
            1e-15,
        ),
        check(
            "fusion sum(w') (w = 2,1,1)",
            4.0 / (4.0 + FUSION_EPSILON),
            normalize_fusion_weights(&[2.0, 1.0, 1.0], FUSION_EPSILON).map(|w| w.iter().sum()),
            1e-12,
        ),
        check("fusion SiLU(y) (w = 2,1,1; x = 4,0,0)", y * sigmoid(y), fused, 1e-12),
        check("silu(0)", 0.0, Ok(silu(0.0)), 0.0),
        check("focal_loss(1.0)", 0.0, focal_loss(1.0, &focal), 0.0),
        check("focal_loss(0.5)", 0.25 * 0.25 * 2f64.ln(), focal_loss(0.5, &focal), 1e-9),
        check(
            "focal_loss gamma=0 (p = 0.3)",
            -0.25 * 0.3f64.ln(),
            focal_loss(0.3, &FocalLossParams { alpha_t: 0.25, gamma: 0.0 }),
            1e-15,
        ),
        check(
            "focal_loss'(0.5) vs central difference",
            grad_fd,
            focal_loss_grad(0.5, &focal),
            1e-6 * grad_fd.abs(),
        ),
    ]
}

pub fn cmd_kernels() -> Result<(), Failure> {
    let checks = kernel_checks();
    println!("{:<42} {:>24} {:>24}  result", "check", "expected", "actual");
    let mut failed = 0;
    for c in &checks {
        let ok = c.passed();
        failed += usize::from(!ok);
        println!(
            "{:<42} {:>24} {:>24}  {}",
            c.name,
            num(c.expected),
            num(c.actual),
            if ok { "pass" } else { "FAIL" }
        );
    }
    if failed > 0 {
        return Err(Failure::KernelCheck(failed));
    }
    Ok(())
}

fn scalar_map(v: f64) -> Array3<f64> {
    Array3::from_elem((1, 1, 1), v)
}
