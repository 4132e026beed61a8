use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dicke_mirror::config::{parse_config, Experiment, RunConfig};
use dicke_mirror::error::{ConfigError, ConfigErrorKind};
use dicke_mirror::runner::run_experiment;
use dicke_mirror::validation::run_invariant_suite;
use dicke_mirror::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dicke-mirror",
    version,
    about = "Collective emission bursts and surface potentials of inverted atoms near a mirror",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-resolved collective emission intensity
    Emission(RunArgs),
    /// Population-weighted resonant surface potential U(t)
    Potential(RunArgs),
    /// Two-atom collective-decay fidelity over an x-z grid
    FidelityMap(RunArgs),
    /// Burst peak and width power laws over an atom-number sweep
    Scaling(RunArgs),
    /// Run the built-in physics invariant suite
    Validate,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (flat `key = value` text)
    #[arg(long)]
    config: PathBuf,

    /// Output directory, created if missing
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Worker threads for sweeps and maps (default: one per core)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate => Ok(validate()),
        Command::Emission(args) => run(Experiment::Emission, &args),
        Command::Potential(args) => run(Experiment::Potential, &args),
        Command::FidelityMap(args) => run(Experiment::FidelityMap, &args),
        Command::Scaling(args) => run(Experiment::Scaling, &args),
    }
}

fn validate() -> ExitCode {
    let reports = run_invariant_suite();
    let mut failures = 0usize;
    for r in &reports {
        let tag = if r.passed { " pass " } else { " FAIL " };
        println!("[{tag}] {}: {}", r.name, r.detail);
        if !r.passed {
            failures += 1;
        }
    }
    if failures == 0 {
        println!("[ done ] {} checks passed", reports.len());
        ExitCode::SUCCESS
    } else {
        println!("[ done ] {failures} of {} checks FAILED", reports.len());
        ExitCode::from(2)
    }
}

fn run(requested: Experiment, args: &RunArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config, requested)?;
    println!(
        "[config] {}: experiment '{}', N = {}",
        args.config.display(),
        cfg.experiment.name(),
        cfg.n_atoms
    );
    let started = Instant::now();
    let out = run_experiment(&cfg, &args.out, args.threads)?;
    for w in &out.warnings {
        println!("[ warn ] {w}");
    }
    for f in &out.files {
        println!("[ write] {}", f.display());
    }
    println!(
        "[ done ] {} finished in {:.3} s",
        cfg.experiment.name(),
        started.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &PathBuf, requested: Experiment) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(ConfigError::global(ConfigErrorKind::InvalidValue {
            key: "--config".to_string(),
            detail: format!("cannot read {}: {e}", path.display()),
        }))
    })?;
    let cfg = parse_config(&text)?;
    if cfg.experiment != requested {
        return Err(Error::Config(ConfigError::global(
            ConfigErrorKind::InvalidValue {
                key: "experiment".to_string(),
                detail: format!(
                    "config requests '{}' but the '{}' subcommand was invoked",
                    cfg.experiment.name(),
                    requested.name()
                ),
            },
        )));
    }
    Ok(cfg)
}
