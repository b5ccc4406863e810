use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use diffuse_cli::config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "diffuse", version, about = "Diffusion index forecasting with PCA, ridge and random projections")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Monte Carlo MSFE over a grid of designs.
    Mc(Common),
    /// Rolling-window forecasts on a FRED-style panel.
    Empirical(Common),
    /// Shrinkage profiles and checks for a prescribed spectrum.
    Diagnose(Common),
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the replication count (draws for `diagnose`).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; all cores by default.
    #[arg(long, env = "DIFFUSE_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args) = match &cli.command {
        Sub::Mc(a) => ("mc", a),
        Sub::Empirical(a) => ("empirical", a),
        Sub::Diagnose(a) => ("diagnose", a),
    };
    match run(expected, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(expected: &str, args: &Common) -> anyhow::Result<bool> {
    let mut cfg = RunConfig::load(&args.config)?;
    anyhow::ensure!(cfg.command.name() == expected, "{} holds a {} configuration, not {expected}", args.config.display(), cfg.command.name());
    cfg.apply(&Overrides { seed: args.seed, reps: args.reps })?;
    let outcome = diffuse_cli::execute(&cfg, &args.out_dir, args.threads)?;
    for e in &outcome.errors {
        eprintln!("{}: {}", e.scope, e.message);
    }
    eprintln!("wrote {} files to {}", outcome.outputs.len() + 1, args.out_dir.display());
    Ok(outcome.is_complete())
}
