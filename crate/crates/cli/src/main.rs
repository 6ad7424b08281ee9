use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use burnfront::experiment::{evaluate_bounds, run_experiment, Bundle, ExperimentSpec, Preset, RunOptions};
use burnfront::Error;
use clap::{Args, Parser, Subcommand};
use log::{error, info};

#[derive(Parser)]
#[command(name = "burnfront", version, about = "Bulk burning rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every simulation of an experiment and write the report bundle.
    Run(Common),
    /// Evaluate the analytic bounds only; no simulations.
    Bounds(Common),
    /// Solve the periodic cell problems of a `homogenize` experiment.
    Cell(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    spec: PathBuf,
    /// Output directory; defaults to `out/<experiment name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Run even when the grid violates the resolution policy.
    #[arg(long)]
    allow_underresolved: bool,
}

enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => Failure::Config(e.into()),
        other => Failure::Run(other.into()),
    }
}

fn execute(cmd: Command) -> Result<Bundle, Failure> {
    let (common, bounds_only, cell_only) = match cmd {
        Command::Run(c) => (c, false, false),
        Command::Bounds(c) => (c, true, false),
        Command::Cell(c) => (c, false, true),
    };
    let spec = ExperimentSpec::from_path(&common.spec).map_err(classify)?;
    if cell_only && spec.experiment.preset != Preset::Homogenize {
        return Err(Failure::Config(anyhow::anyhow!(
            "`cell` needs preset = \"homogenize\", got {}",
            spec.experiment.preset.name()
        )));
    }
    let opts = RunOptions { threads: common.threads, allow_underresolved: common.allow_underresolved };
    let bundle = if bounds_only { evaluate_bounds(&spec, &opts) } else { run_experiment(&spec, &opts) }.map_err(classify)?;
    let out = common.out.unwrap_or_else(|| PathBuf::from("out").join(spec.name()));
    bundle
        .write(&out)
        .with_context(|| format!("writing {}", out.display()))
        .map_err(Failure::Run)?;
    info!("wrote {}", out.display());
    Ok(bundle)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(bundle) => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = bundle.write_summary(&mut stdout) {
                error!("{e}");
                return ExitCode::from(1);
            }
            if bundle.complete {
                ExitCode::SUCCESS
            } else {
                error!("some points failed; bundle is partial");
                ExitCode::from(1)
            }
        }
        Err(Failure::Config(e)) => {
            error!("{e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
