//! Batch experiment runner for the `randfield` toolkit.
//!
//! Exit codes: 0 success, 1 config or argument validation failure,
//! 2 runtime or capacity failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use randfield::cli::{parse_config, run_experiment, ExperimentKind};
use randfield::error::Error;

#[derive(Parser)]
#[command(
    name = "randfield",
    about = "Simulation and verification experiments for stationary 2-parameter random fields",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Realize a field window and write it as CSV.
    Simulate(RunArgs),
    /// Scaling and series variance estimators with cross-validation.
    Sigma2(RunArgs),
    /// Normalized partial sums against the normal law across scales.
    Clt(RunArgs),
    /// Sheet-process covariance against the Brownian sheet target.
    Fdd(RunArgs),
    /// Tail sums, condition series and conditional-norm diagnostics.
    Projective(RunArgs),
    /// Product/sum two-martingale counterexample statistics.
    Counterexample(RunArgs),
    /// Exact finite-space checks: commuting, distributions, moment ratios.
    Oracle(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (section.key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides run.seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores); overrides run.workers.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write per-replicate raw samples where the experiment has them.
    #[arg(long)]
    raw: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::Simulate(a) => (ExperimentKind::Simulate, a),
            Command::Sigma2(a) => (ExperimentKind::Sigma2, a),
            Command::Clt(a) => (ExperimentKind::Clt, a),
            Command::Fdd(a) => (ExperimentKind::Fdd, a),
            Command::Projective(a) => (ExperimentKind::Projective, a),
            Command::Counterexample(a) => (ExperimentKind::Counterexample, a),
            Command::Oracle(a) => (ExperimentKind::Oracle, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version print to stdout and succeed; argument
            // mistakes are validation failures.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (kind, args) = cli.command.split();
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text, kind)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
        config.echo.insert("run.seed".into(), seed.to_string());
    }
    if let Some(out) = args.out {
        config
            .echo
            .insert("output.dir".into(), out.display().to_string());
        config.out_dir = out;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
        config
            .echo
            .insert("run.workers".into(), workers.to_string());
    }
    if args.raw {
        config.raw = true;
        config.echo.insert("output.raw".into(), "true".into());
    }
    let report = run_experiment(&config)?;
    println!(
        "{}: wrote summary.json and {} table(s) under {}",
        kind.name(),
        report.outputs.len(),
        config.out_dir.display()
    );
    Ok(())
}
