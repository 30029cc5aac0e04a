//! `sepoc`: analytic and numeric optimal control of separable network
//! dynamics from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ExperimentConfig, Overrides};
use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "sepoc", version, about = "Optimal control of separable network dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the controlled system under a given control.
    Simulate(Args),
    /// Sample Phi and Phi_h along the rescaled flow.
    RescaleCurve(Args),
    /// Solve a problem analytically via its reference problem.
    SolveRef(Args),
    /// Solve a problem numerically and compare with the analytic solution.
    SolveOcp(Args),
    /// List stationary points of a maximum-objective problem.
    EnumerateSps(Args),
    /// Compare analytic and numeric solutions over a parameter range.
    Sweep(Args),
    /// Run the invariant checks; exits 0 iff all pass.
    Validate(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; a `.json` sidecar is written next to it. Stdout if unset.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(flatten)]
    overrides: Overrides,
}

impl Command {
    fn parts(&self) -> (&'static str, &Args) {
        match self {
            Command::Simulate(a) => ("simulate", a),
            Command::RescaleCurve(a) => ("rescale-curve", a),
            Command::SolveRef(a) => ("solve-ref", a),
            Command::SolveOcp(a) => ("solve-ocp", a),
            Command::EnumerateSps(a) => ("enumerate-sps", a),
            Command::Sweep(a) => ("sweep", a),
            Command::Validate(a) => ("validate", a),
        }
    }
}

fn load(args: &Args) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&args.overrides)?;
    if let Some(out) = &args.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(t) = args.threads {
        cfg.threads = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: &Command) -> Result<()> {
    let (name, args) = command.parts();
    let cfg = load(args)?;
    if let Some(threads) = cfg.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    log::debug!("{name}: {cfg:?}");

    let outcome = match command {
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::RescaleCurve(_) => commands::rescale_curve(&cfg),
        Command::SolveRef(_) => commands::solve_ref(&cfg),
        Command::SolveOcp(_) => commands::solve_ocp(&cfg),
        Command::EnumerateSps(_) => commands::enumerate(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Validate(_) => commands::validate(&cfg),
    }?;

    let mut sidecar = json!({ "command": name, "config": cfg });
    if let serde_json::Value::Object(extra) = outcome.extra {
        sidecar.as_object_mut().expect("object").extend(extra);
    }
    output::emit(&outcome.table, cfg.output.format, cfg.output.path.as_deref(), &sidecar)?;
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.command.parts().1.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sepoc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
