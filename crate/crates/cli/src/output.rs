//! Output directory handling and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// A failure confined to part of a run, such as one Monte Carlo cell or one
/// target variable. The rest of the run still completes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunError {
    pub scope: String,
    pub message: String,
}

impl RunError {
    pub fn new(scope: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self { scope: scope.into(), message: err.to_string() }
    }
}

/// Short digest of the canonical JSON form of a configuration. Every output
/// row carries it so that files from different runs cannot be mixed up.
pub fn config_digest(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("configurations serialize");
    hex::encode(&Sha256::digest(&canonical)[..8])
}

/// Output directory that remembers the files written into it.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes a CSV assembled by `fill`.
    pub fn write_csv(&mut self, name: &str, fill: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        fill(&mut w)?;
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write(name, &bytes)
    }

    /// Writes through a core writer that takes any `io::Write`.
    pub fn write_with(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> diffuse_core::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub manifest_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub master_seed: u64,
    pub config_digest: String,
    /// The resolved configuration; loading this manifest as a config reruns it.
    pub config: &'a RunConfig,
    pub outputs: Vec<String>,
    /// `complete` or `partial`.
    pub status: &'static str,
    pub errors: &'a [RunError],
}

impl<'a> Manifest<'a> {
    pub fn new(cfg: &'a RunConfig, outputs: &[String], errors: &'a [RunError]) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            command: cfg.command.name(),
            master_seed: cfg.command.master_seed(),
            config_digest: config_digest(cfg),
            config: cfg,
            outputs: outputs.to_vec(),
            status: if errors.is_empty() { "complete" } else { "partial" },
            errors,
        }
    }
}

/// Formats a float for CSV output; non-finite values become empty cells.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}
