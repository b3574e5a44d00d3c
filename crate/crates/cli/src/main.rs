use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lodo_cli::runner::{reduce_experiment, render_reduction, render_report, render_validation, validate};
use lodo_cli::sweep::run_sweep;
use lodo_cli::{CliError, ExperimentConfig, Overrides};

/// Low-dimensional moment-matching observers: validate, reduce, simulate.
///
/// Exit codes: 0 success, 1 i/o error, 2 configuration error, 3 plant or
/// generator assumption violated, 4 observer not certified, 5 numerical
/// failure, 6 a post-condition check of a completed run failed.
#[derive(Parser)]
#[command(name = "lodo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trace, bound and report.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Check the configuration and the plant and generator assumptions.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run every `*.toml` in a directory on worker threads.
    Sweep {
        dir: PathBuf,
        #[command(flatten)]
        flags: Flags,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Build the reduced model only.
    Reduce {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Add every plant and observer state to the trace CSV.
    #[arg(long)]
    full_state: bool,
    /// Fit ω₀, evaluate the error bound and write bound.csv.
    #[arg(long)]
    bound: bool,
}

impl From<&Flags> for Overrides {
    fn from(f: &Flags) -> Self {
        Overrides {
            seed: f.seed,
            h: f.h,
            out_dir: f.out_dir.clone(),
            full_state: f.full_state,
            bound: f.bound,
        }
    }
}

fn load(path: &Path, flags: &Flags) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(&flags.into());
    cfg.check()?;
    Ok(cfg)
}

/// Exit code of a completed command; the sweep reports its worst run.
fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, flags } => {
            let cfg = load(&config, &flags)?;
            match lodo_cli::runner::run_experiment(&cfg) {
                Ok(report) => {
                    print!("{}", render_report(&report));
                    Ok(0)
                }
                Err(e @ CliError::CheckFailed(_)) => {
                    if let Ok(text) = std::fs::read_to_string(cfg.output.dir.join(lodo_cli::runner::REPORT_TXT)) {
                        print!("{text}");
                    }
                    Err(e)
                }
                Err(e) => Err(e),
            }
        }
        Command::Validate { config, flags } => {
            let cfg = load(&config, &flags)?;
            let (_, _, v) = validate(&cfg)?;
            print!("{}", render_validation(&v));
            if v.passes() {
                println!("assumptions hold");
                Ok(0)
            } else {
                let mut failures = v.sa1.failures();
                failures.extend(v.sa2.failures());
                Err(CliError::Assumption(failures.join("; ")))
            }
        }
        Command::Reduce { config, flags } => {
            let cfg = load(&config, &flags)?;
            let report = reduce_experiment(&cfg)?;
            print!("{}", render_validation(&report.validation));
            print!("{}", render_reduction(&report.reduction));
            Ok(0)
        }
        Command::Sweep { dir, flags, threads } => {
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let entries = run_sweep(&dir, &(&flags).into(), threads)?;
            let mut worst = 0;
            for e in &entries {
                println!("{:>2}  {}  {}", e.exit_code, e.config.display(), e.message);
                worst = worst.max(e.exit_code);
            }
            Ok(worst)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("lodo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
