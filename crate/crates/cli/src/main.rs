//! Command-line front end for openqmap experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use openqmap::runner::{list_experiments, run, validate, ExperimentConfig, ExperimentKind, RunOptions};
use openqmap::LabError;

#[derive(Parser)]
#[command(name = "openqmap", version, about = "Open hyperbolic maps, quantizations and fractal uncertainty experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV and JSON outputs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for independent sweep points.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config.
    Run(RunArgs),
    /// Check a config and print diagnostics.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the experiment catalog.
    List,
    Classical(RunArgs),
    Splitting(RunArgs),
    Pressure(RunArgs),
    Dimension(RunArgs),
    Porosity(RunArgs),
    Spectrum(RunArgs),
    Fup(RunArgs),
    Numerology(RunArgs),
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn fail(err: &LabError) -> ExitCode {
    eprintln!("error: {err}");
    let validation = err.is_validation() || matches!(err, LabError::Io(_) | LabError::Json(_));
    ExitCode::from(if validation { EXIT_VALIDATION } else { EXIT_NUMERICAL })
}

fn execute(args: &RunArgs, kind: Option<ExperimentKind>) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(k) = kind {
        match cfg.kind {
            Some(existing) if existing != k => {
                return fail(&LabError::Config(format!(
                    "kind: config names `{}` but the subcommand is `{}`",
                    existing.name(),
                    k.name()
                )))
            }
            _ => cfg.kind = Some(k),
        }
    }
    let opts = RunOptions {
        workers: Some(args.workers),
        seed: args.seed,
        out_dir: args.out_dir.clone(),
    };
    match run(&cfg, &opts) {
        Ok(manifest) => {
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            for o in &manifest.outputs {
                println!("{o}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(a) => execute(&a, None),
        Command::Validate { config } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let d = validate(&cfg);
            for w in &d.warnings {
                println!("warning: {w}");
            }
            for (k, m) in &d.errors {
                println!("error: {k}: {m}");
            }
            if d.is_ok() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            }
        }
        Command::List => {
            for e in list_experiments() {
                println!("{:<11} {}  [{}]", e.kind.name(), e.summary, e.anchor);
            }
            ExitCode::SUCCESS
        }
        Command::Classical(a) => execute(&a, Some(ExperimentKind::Classical)),
        Command::Splitting(a) => execute(&a, Some(ExperimentKind::Splitting)),
        Command::Pressure(a) => execute(&a, Some(ExperimentKind::Pressure)),
        Command::Dimension(a) => execute(&a, Some(ExperimentKind::Dimension)),
        Command::Porosity(a) => execute(&a, Some(ExperimentKind::Porosity)),
        Command::Spectrum(a) => execute(&a, Some(ExperimentKind::Spectrum)),
        Command::Fup(a) => execute(&a, Some(ExperimentKind::Fup)),
        Command::Numerology(a) => execute(&a, Some(ExperimentKind::Numerology)),
    }
}
