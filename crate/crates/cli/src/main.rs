mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, RunManifest};
use config::SyncModeName;

#[derive(Parser)]
#[command(name = "trajopt", version, about = "Time-optimal 3-5-3 joint trajectory planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize segment times and write the sampled trajectory.
    Plan(PlanArgs),
    /// Run the standard and improved swarms over a range of seeds.
    ComparePso(CompareArgs),
    /// Check the vision kernels against their reference values.
    Kernels,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "SECONDS", default_value_t = 0.01)]
    dt: f64,
    #[arg(long, value_enum)]
    sync: Option<SyncArg>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "N", default_value_t = 20)]
    seeds: usize,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SyncArg {
    Shared,
    PerJointMax,
}

impl From<SyncArg> for SyncModeName {
    fn from(s: SyncArg) -> Self {
        match s {
            SyncArg::Shared => SyncModeName::Shared,
            SyncArg::PerJointMax => SyncModeName::PerJointMax,
        }
    }
}

/// `TRAJOPT_THREADS` caps the fitness-evaluation pool.
fn workers_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("TRAJOPT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Config(anyhow::anyhow!(
                "TRAJOPT_THREADS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn manifest(common: Common, dt: f64, sync: Option<SyncArg>, seeds: usize) -> Result<RunManifest, Failure> {
    Ok(RunManifest {
        config: common.config,
        out: common.out,
        seed: common.seed,
        dt,
        sync: sync.map(Into::into),
        seeds,
        workers: workers_from_env()?,
    })
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Plan(a) => commands::cmd_plan(&manifest(a.common, a.dt, a.sync, 0)?),
        Command::ComparePso(a) => {
            commands::cmd_compare_pso(&manifest(a.common, 0.01, None, a.seeds)?).map(|_| ())
        }
        Command::Kernels => commands::cmd_kernels(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::exit::CONFIG as u8 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
