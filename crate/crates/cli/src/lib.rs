//! Command-line driver: Monte Carlo designs, rolling-window studies on
//! FRED-style data and spectral diagnostics, all configured by JSON files
//! and written to an output directory with a run manifest.

pub mod config;
pub mod diagnose;
pub mod empirical;
pub mod mc;
pub mod output;

use std::path::Path;

use anyhow::{Context, Result};

use config::{Command, RunConfig};
use output::{config_digest, Manifest, OutputDir, RunError, MANIFEST_FILE};

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub outputs: Vec<String>,
    pub errors: Vec<RunError>,
}

impl RunOutcome {
    pub fn is_complete(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Runs `cfg` on a dedicated pool of `threads` workers (all cores when
/// `None`). Results do not depend on the thread count.
pub fn execute(cfg: &RunConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunOutcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().context("starting worker pool")?;
    pool.install(|| execute_here(cfg, out_dir))
}

fn execute_here(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut out = OutputDir::create(out_dir)?;
    let digest = config_digest(cfg);
    let errors = match &cfg.command {
        Command::Mc(c) => mc::run(c, &digest, &mut out)?,
        Command::Empirical(c) => empirical::run(c, &digest, &mut out)?,
        Command::Diagnose(c) => diagnose::run(c, &digest, &mut out)?,
    };
    let outputs = out.written().to_vec();
    out.write_json(MANIFEST_FILE, &Manifest::new(cfg, &outputs, &errors))?;
    Ok(RunOutcome { outputs, errors })
}
