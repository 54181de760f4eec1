//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trajopt_core::kernels::{
    eca_kernel_size, focal_loss, focal_loss_grad, normalize_fusion_weights, EcaParams,
    FocalLossParams, FUSION_EPSILON,
};
use trajopt_core::poly353::{assemble_system, Segment};
use trajopt_core::pso::{inertia_weight, init_swarm, learning_factors, run, SegmentTimeObjective};
use trajopt_core::*;

const SEGMENTS: [Segment; 3] = [Segment::First, Segment::Middle, Segment::Last];
const CLI_SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn random_instance(rng: &mut ChaCha8Rng) -> (JointWaypoints, SegmentTimes, BoundaryConditions) {
    let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.2..3.2));
    let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.1..6.0));
    let b: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    (
        JointWaypoints::from(q),
        SegmentTimes::new(t[0], t[1], t[2]).unwrap(),
        BoundaryConditions {
            v_start: b[0],
            a_start: b[1],
            v_end: b[2],
            a_end: b[3],
        },
    )
}

fn interpolation_exactness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_res, mut worst_knot, mut worst_c2) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (wp, times, bc) = random_instance(&mut rng);
        let traj = match solve_coefficients(&wp, &times, &bc) {
            Ok(t) => t,
            Err(e) => return verdict(false, format!("solve failed: {e}")),
        };
        let (_, b) = assemble_system(&wp, &times, &bc);
        worst_res = worst_res.max(traj.residual() / b.amax().max(1.0));
        let q = wp.as_array();
        let knots = [0.0, times.t1(), times.t1() + times.t2(), times.total()];
        for (k, &t) in knots.iter().enumerate() {
            worst_knot = worst_knot.max((traj.evaluate(t).unwrap().q - q[k]).abs());
        }
        for pair in SEGMENTS.windows(2) {
            let l = traj.evaluate_local(pair[0], traj.segment_duration(pair[0]));
            let r = traj.evaluate_local(pair[1], 0.0);
            worst_c2 = worst_c2.max((l.0 - r.0).abs()).max((l.1 - r.1).abs()).max((l.2 - r.2).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst_res <= 1e-9 && worst_knot <= 1e-9 && worst_c2 <= 1e-9 && within(elapsed, 10),
        format!(
            "1000 instances: relative residual {worst_res:.2e}, knot error {worst_knot:.2e}, junction jump {worst_c2:.2e}, {elapsed:.2?}"
        ),
    )
}

fn random_feasible_problem(rng: &mut ChaCha8Rng) -> PlanningProblem {
    loop {
        let joints = rng.random_range(1..=3);
        let specs = (0..joints)
            .map(|_| {
                let mut q = [rng.random_range(-2.0..2.0); 4];
                for k in 1..4 {
                    q[k] = q[k - 1] + rng.random_range(-1.5..1.5);
                }
                let limits =
                    KinematicLimits::new(rng.random_range(0.3..3.5), rng.random_range(0.5..7.0)).unwrap();
                JointSpec::rest_to_rest(q, limits)
            })
            .collect();
        let problem =
            PlanningProblem::new(specs, Bounds::uniform(3, 0.1, 6.0).unwrap(), SyncMode::Shared).unwrap();
        if problem.is_feasible(&SegmentTimes::new(6.0, 6.0, 6.0).unwrap()) {
            return problem;
        }
    }
}

fn dense_peaks(traj: &JointTrajectory353, per_segment: usize) -> (f64, f64) {
    let (mut v, mut a) = (0.0f64, 0.0f64);
    for seg in SEGMENTS {
        let d = traj.segment_duration(seg);
        for i in 0..per_segment {
            let (_, vi, ai) = traj.evaluate_local(seg, d * i as f64 / (per_segment - 1) as f64);
            v = v.max(vi.abs());
            a = a.max(ai.abs());
        }
    }
    (v, a)
}

fn constraint_soundness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..100 {
        let problem = random_feasible_problem(&mut rng);
        let cfg = SwarmConfig { seed: case, ..SwarmConfig::default() };
        let outcome = match plan(&problem, &cfg) {
            Ok(o) => o,
            Err(e) => return verdict(false, format!("instance {case}: {e}")),
        };
        for (traj, joint) in outcome.trajectory.per_joint.iter().zip(problem.joints()) {
            let (v, a) = dense_peaks(traj, 10_000);
            worst = worst.max(v - joint.limits.v_max()).max(a - joint.limits.a_max());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-6 && within(elapsed, 60),
        format!("100 instances: worst dense-sampled excess over a limit {worst:.2e}, {elapsed:.2?}"),
    )
}

fn schedule_correctness() -> Verdict {
    let cfg = SwarmConfig::default();
    let n_max = cfg.max_iterations;
    let (c1_end, c2_end) = learning_factors(n_max, &cfg);
    let sum_spread = (1..=n_max)
        .map(|n| {
            let (c1, c2) = learning_factors(n, &cfg);
            (c1 + c2 - (cfg.c11 + cfg.c21)).abs()
        })
        .fold(0.0, f64::max);
    let pass = inertia_weight(1, &cfg) == 0.86
        && inertia_weight(n_max, &cfg) == 0.44
        && c1_end == 1.3
        && c2_end == 1.3
        && sum_spread <= 1e-12;
    verdict(
        pass,
        format!(
            "omega(1) = {}, omega(N) = {}, c1(N) = {c1_end}, c2(N) = {c2_end}, max |c1 + c2 - 2.6| = {sum_spread:.1e}",
            inertia_weight(1, &cfg),
            inertia_weight(n_max, &cfg)
        ),
    )
}

fn grid_oracle(problem: &PlanningProblem) -> f64 {
    let grid: Vec<f64> = (0..30).map(|i| 0.1 + 5.9 * i as f64 / 29.0).collect();
    let mut best = f64::INFINITY;
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                if a + b + c < best && problem.is_feasible(&SegmentTimes::new(a, b, c).unwrap()) {
                    best = a + b + c;
                }
            }
        }
    }
    best
}

fn optimizer_quality() -> Verdict {
    let start = Instant::now();
    let problem = reference_instance();
    let oracle = grid_oracle(&problem);
    let mut worst = 0.0f64;
    let mut passed = 0;
    for seed in 0..10 {
        let cfg = SwarmConfig { seed: CLI_SEED + seed, ..SwarmConfig::default() };
        match plan(&problem, &cfg) {
            Ok(o) => {
                let total = o.trajectory.total_duration();
                worst = worst.max(total);
                passed += usize::from(total <= oracle * 1.02);
            }
            Err(e) => return verdict(false, format!("seed {seed}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    verdict(
        passed == 10 && within(elapsed, 120),
        format!(
            "grid optimum {oracle:.5} s, worst swarm total {worst:.5} s ({:+.2}%), {passed}/10 seeds within 2%, {elapsed:.2?}",
            100.0 * (worst / oracle - 1.0)
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn convergence_speed() -> Verdict {
    let problem = reference_instance();
    let objective = SegmentTimeObjective {
        problem: &problem,
        penalty_coefficient: SwarmConfig::default().penalty_coefficient,
    };
    let mut its = [Vec::new(), Vec::new()];
    for i in 0..20 {
        for (slot, variant) in [Variant::Standard, Variant::Improved].into_iter().enumerate() {
            let cfg = SwarmConfig { seed: CLI_SEED + i, variant, ..SwarmConfig::default() };
            let result = run(&cfg, &objective).unwrap();
            its[slot].push(result.iterations_to_within(0.01) as f64);
        }
    }
    let [standard, improved] = its.map(median);
    let ratio = improved / standard;
    verdict(
        ratio <= 0.7,
        format!("20 seeds: median iterations to 1% standard {standard}, improved {improved}, ratio {ratio:.3} (need <= 0.7)"),
    )
}

fn chaos_determinism_and_range() -> Verdict {
    let mut escaped = 0usize;
    for seed in 0..100 {
        let cfg = ChaosConfig { seed, ..ChaosConfig::default() };
        let mut logistic = chaos::LogisticMap::seeded(&cfg, 1);
        let mut tent = chaos::TentMap::seeded(&cfg, 1);
        for _ in 0..100_000 {
            for row in [logistic.next_row(), tent.next_row()] {
                match row {
                    Ok(r) if r[0] > 0.0 && r[0] < 1.0 => {}
                    _ => escaped += 1,
                }
            }
        }
    }

    let problem = reference_instance();
    let objective = SegmentTimeObjective { problem: &problem, penalty_coefficient: 1e3 };
    let cfg = SwarmConfig { seed: 77, max_iterations: 30, ..SwarmConfig::default() };
    let bits = |state: &pso::SwarmState| -> Vec<u64> {
        state
            .particles
            .iter()
            .flat_map(|p| p.position.iter().chain(&p.velocity).map(|x| x.to_bits()))
            .collect()
    };
    let same_init = bits(&init_swarm(&cfg, &objective).unwrap()) == bits(&init_swarm(&cfg, &objective).unwrap());
    let runs: Vec<RunResult> = [Some(1), Some(3), None]
        .into_iter()
        .map(|workers| run(&SwarmConfig { workers, ..cfg.clone() }, &objective).unwrap())
        .collect();
    let key = |r: &RunResult| -> Vec<u64> {
        r.best_position
            .iter()
            .chain(r.history.iter().map(|h| &h.gbest_fitness))
            .map(|x| x.to_bits())
            .collect()
    };
    let same_runs = runs.windows(2).all(|w| key(&w[0]) == key(&w[1]));
    verdict(
        escaped == 0 && same_init && same_runs,
        format!(
            "2e7 iterates, {escaped} outside (0, 1); identical seeds give identical swarms: init {same_init}, runs across thread counts {same_runs}"
        ),
    )
}

fn kernel_formulas() -> Verdict {
    let eca = EcaParams::default();
    let k128 = eca_kernel_size(128, &eca).unwrap();
    let k512 = eca_kernel_size(512, &eca).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut fusion_ok = true;
    for _ in 0..1000 {
        let w: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..10.0));
        let n = normalize_fusion_weights(&w, FUSION_EPSILON).unwrap();
        let total: f64 = w.iter().sum();
        fusion_ok &= n.iter().all(|&x| x >= 0.0);
        fusion_ok &= (n.iter().sum::<f64>() - total / (total + FUSION_EPSILON)).abs() <= 1e-12;
    }

    let p = FocalLossParams::default();
    let focal_half = focal_loss(0.5, &p).unwrap();
    let focal_ok = (focal_half - 0.25 * 0.25 * 2f64.ln()).abs() <= 1e-9;

    let mut worst_rel = 0.0f64;
    for i in 1..100 {
        let x = i as f64 / 100.0;
        let h = 1e-6 * x.min(1.0 - x);
        let fd = (focal_loss(x + h, &p).unwrap() - focal_loss(x - h, &p).unwrap()) / (2.0 * h);
        let g = focal_loss_grad(x, &p).unwrap();
        worst_rel = worst_rel.max((g - fd).abs() / g.abs().max(1e-12));
    }
    verdict(
        k128 == 5 && k512 == 7 && fusion_ok && focal_ok && worst_rel <= 1e-6,
        format!(
            "eca(128) = {k128}, eca(512) = {k512}, fusion weights ok {fusion_ok}, focal(0.5) = {focal_half:.12}, worst gradient error {worst_rel:.1e}"
        ),
    )
}

fn trajopt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_trajopt")).args(args).output().expect("spawn trajopt")
}

fn plan_cli(config: &Path, out: &Path) -> Option<i32> {
    trajopt(&["plan", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status
        .code()
}

fn cli_contract() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let reference: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/reference.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut problems = Vec::new();

    if plan_cli(&reference, &a) != Some(0) || plan_cli(&reference, &b) != Some(0) {
        problems.push("bundled config did not exit 0".to_string());
    }
    let expect_header = |file: &str, header: &str| {
        std::fs::read_to_string(a.join(file))
            .map(|s| s.starts_with(header))
            .unwrap_or(false)
    };
    if !expect_header("trajectory.csv", "t,joint,q,v,a\n") {
        problems.push("trajectory.csv schema".into());
    }
    if !expect_header("convergence.csv", "iteration,gbest_fitness,omega,c1,c2,perturbed\n") {
        problems.push("convergence.csv schema".into());
    }
    let times_ok = std::fs::read_to_string(a.join("times.json"))
        .ok()
        .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
        .is_some_and(|v| ["t1", "t2", "t3", "total"].iter().all(|k| v[k].is_f64()));
    if !times_ok {
        problems.push("times.json schema".into());
    }
    for f in ["trajectory.csv", "times.json", "convergence.csv"] {
        if std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok() {
            problems.push(format!("{f} differs between same-seed runs"));
        }
    }

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"joints": [{"waypoints": [0, 1, 2, 3], "limits": {"v_max": 0, "a_max": 1}}]}"#,
    )
    .unwrap();
    let code_bad = plan_cli(&bad, &dir.path().join("c"));
    let infeasible = dir.path().join("infeasible.json");
    std::fs::write(
        &infeasible,
        r#"{"joints": [{"waypoints": [0, 20, 40, 50], "limits": {"v_max": 1, "a_max": 1}}],
            "bounds": {"t_min": 0.1, "t_max": 0.2}, "swarm": {"m": 8, "N": 10}}"#,
    )
    .unwrap();
    let code_infeasible = plan_cli(&infeasible, &dir.path().join("d"));
    let code_kernels = trajopt(&["kernels"]).status.code();
    if code_bad != Some(1) {
        problems.push(format!("v_max = 0 exited {code_bad:?}"));
    }
    if code_infeasible != Some(2) {
        problems.push(format!("infeasible instance exited {code_infeasible:?}"));
    }
    if code_kernels != Some(0) {
        problems.push(format!("kernels exited {code_kernels:?}"));
    }

    let pass = problems.is_empty();
    verdict(
        pass,
        if pass {
            "artifacts and schemas present, reruns bit-identical, exit codes 0/1/2 as specified, kernel check exits 0 (no code 3)".into()
        } else {
            problems.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("interpolation exactness", interpolation_exactness),
        ("constraint soundness", constraint_soundness),
        ("schedule correctness", schedule_correctness),
        ("optimizer quality vs grid oracle", optimizer_quality),
        ("convergence speed (improved vs standard)", convergence_speed),
        ("chaos determinism and range", chaos_determinism_and_range),
        ("kernel formula suite", kernel_formulas),
        ("CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let v = check();
        failed += usize::from(!v.pass);
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
