//! Run configuration files.
//!
//! A configuration is a JSON object with a `schema_version`, a `command`
//! (`mc`, `empirical` or `diagnose`) and the command's parameters. A run
//! manifest written by a previous run is also accepted: its `config` field
//! is used. Seeds are mandatory.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use diffuse_core::simulation::{DgpConfig, McGrid, McMethod};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Mc(McConfig),
    Empirical(EmpiricalConfig),
    Diagnose(DiagnoseConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mc(_) => "mc",
            Command::Empirical(_) => "empirical",
            Command::Diagnose(_) => "diagnose",
        }
    }

    pub fn master_seed(&self) -> u64 {
        match self {
            Command::Mc(c) => c.master_seed,
            Command::Empirical(c) => c.master_seed,
            Command::Diagnose(c) => c.master_seed,
        }
    }
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
}

impl RunConfig {
    /// Reads a configuration or a run manifest. Relative data paths are
    /// resolved against the file's directory and stored as absolute paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(inner) = value.get("config").filter(|_| value.get("manifest_version").is_some()) {
            value = inner.clone();
        }
        let mut cfg: RunConfig = serde_json::from_value(value).with_context(|| format!("invalid configuration in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        match &mut self.command {
            Command::Mc(c) => {
                if let Some(s) = o.seed {
                    c.master_seed = s;
                }
                if let Some(r) = o.reps {
                    c.reps = r;
                }
            }
            Command::Empirical(c) => {
                if let Some(s) = o.seed {
                    c.master_seed = s;
                }
                ensure!(o.reps.is_none(), "--reps only applies to the mc command");
            }
            Command::Diagnose(c) => {
                if let Some(s) = o.seed {
                    c.master_seed = s;
                }
                if let Some(r) = o.reps {
                    c.draws = r;
                }
            }
        }
        self.validate()
    }

    fn resolve_paths(&mut self, base: &Path) -> Result<()> {
        let fix = |p: &mut PathBuf| -> Result<()> {
            let joined = if p.is_absolute() { p.clone() } else { base.join(&*p) };
            *p = joined.canonicalize().with_context(|| format!("data file {} does not exist", joined.display()))?;
            Ok(())
        };
        if let Command::Empirical(c) = &mut self.command {
            fix(&mut c.data)?;
            if let Some(f) = &mut c.frequency_experiment {
                if let Some(q) = &mut f.quarterly_data {
                    fix(q)?;
                }
                if let Some(m) = &mut f.mapping {
                    fix(m)?;
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.schema_version == CONFIG_SCHEMA_VERSION, "unsupported config schema version {}", self.schema_version);
        match &self.command {
            Command::Mc(c) => c.validate(),
            Command::Empirical(c) => c.validate(),
            Command::Diagnose(c) => c.validate(),
        }
    }
}

/// One `(N, T, alpha, rho)` cell of the Monte Carlo design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub n: usize,
    pub t: usize,
    pub alpha: f64,
    #[serde(default)]
    pub rho: f64,
}

/// Cartesian product of cell parameters. Without `t`, cells use `T = N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    pub n: Vec<usize>,
    #[serde(default)]
    pub t: Option<Vec<usize>>,
    pub alpha: Vec<f64>,
    #[serde(default = "zero_rho")]
    pub rho: Vec<f64>,
}

fn zero_rho() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub master_seed: u64,
    pub reps: usize,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub grid: Option<CellGrid>,
    #[serde(default = "default_r")]
    pub r: usize,
    /// Defaults to ones.
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    /// Defaults to `r`.
    #[serde(default)]
    pub noise_var: Option<f64>,
    #[serde(default = "one")]
    pub h: usize,
    #[serde(default = "default_mc_methods")]
    pub methods: Vec<McMethod>,
    #[serde(default = "default_ridge_grid")]
    pub ridge_grid: GeometricGrid,
    #[serde(default = "default_mc_dimension")]
    pub max_dimension: usize,
    #[serde(default = "default_mc_draws")]
    pub rp_draws: usize,
    /// Also write per-replication squared errors.
    #[serde(default)]
    pub retain_errors: bool,
}

fn default_r() -> usize {
    2
}

fn one() -> usize {
    1
}

fn default_mc_methods() -> Vec<McMethod> {
    McMethod::ALL.to_vec()
}

fn default_ridge_grid() -> GeometricGrid {
    GeometricGrid { lo: McGrid::RIDGE_RANGE.0, hi: McGrid::RIDGE_RANGE.1, points: McGrid::RIDGE_POINTS }
}

fn default_mc_dimension() -> usize {
    McGrid::MAX_DIMENSION
}

fn default_mc_draws() -> usize {
    McGrid::RP_DRAWS
}

impl McConfig {
    /// Explicit cells followed by the expanded grid, in declaration order.
    pub fn all_cells(&self) -> Vec<CellSpec> {
        let mut cells = self.cells.clone();
        if let Some(g) = &self.grid {
            for &alpha in &g.alpha {
                for &rho in &g.rho {
                    for &n in &g.n {
                        match &g.t {
                            None => cells.push(CellSpec { n, t: n, alpha, rho }),
                            Some(ts) => cells.extend(ts.iter().map(|&t| CellSpec { n, t, alpha, rho })),
                        }
                    }
                }
            }
        }
        cells
    }

    /// DGP of cell `index`; each cell draws from its own seed.
    pub fn dgp(&self, index: usize, cell: &CellSpec) -> DgpConfig {
        DgpConfig {
            n: cell.n,
            t: cell.t,
            r: self.r,
            alpha: cell.alpha,
            rho: cell.rho,
            gamma: self.gamma.clone().unwrap_or_else(|| vec![1.0; self.r]),
            noise_var: self.noise_var.unwrap_or(self.r as f64),
            h: self.h,
            reps: self.reps,
            master_seed: diffuse_core::rng::derive_seed(self.master_seed, &[index as u64]),
        }
    }

    pub fn mc_grid(&self, dgp: &DgpConfig) -> McGrid {
        let top = dgp.n.min(dgp.training_rows().saturating_sub(1)).min(self.max_dimension).max(1);
        McGrid {
            ridge_k: diffuse_core::simulation::geometric_grid(self.ridge_grid.lo, self.ridge_grid.hi, self.ridge_grid.points),
            rp_k: (1..=top).collect(),
            pca_r: (1..=top).collect(),
            rp_draws: self.rp_draws,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.reps >= 1, "reps must be at least 1");
        ensure!(!self.all_cells().is_empty(), "no Monte Carlo cells configured");
        ensure!(!self.methods.is_empty(), "no methods configured");
        ensure!(self.ridge_grid.points >= 1 && self.ridge_grid.lo > 0.0 && self.ridge_grid.hi >= self.ridge_grid.lo, "invalid ridge grid");
        ensure!(self.max_dimension >= 1 && self.rp_draws >= 1, "max_dimension and rp_draws must be positive");
        for (i, c) in self.all_cells().iter().enumerate() {
            self.dgp(i, c).validate().with_context(|| format!("cell {i}"))?;
        }
        Ok(())
    }
}

/// Forecasting rules compared in the rolling-window study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpiricalMethod {
    Pca,
    Ridge,
    Rp,
}

impl EmpiricalMethod {
    pub fn label(self) -> &'static str {
        match self {
            EmpiricalMethod::Pca => "pca",
            EmpiricalMethod::Ridge => "ridge",
            EmpiricalMethod::Rp => "rp",
        }
    }
}

/// Log ridge penalties `start, start + step, ...` (`points` values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPenaltyGrid {
    pub start: f64,
    pub step: f64,
    pub points: usize,
}

impl LogPenaltyGrid {
    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.start + self.step * i as f64).collect()
    }
}

impl Default for LogPenaltyGrid {
    /// `-14.7, -14.4, ..., 15.0`.
    fn default() -> Self {
        Self { start: -14.7, step: 0.3, points: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConfig {
    pub master_seed: u64,
    /// Monthly FRED-MD style CSV.
    pub data: PathBuf,
    /// Variables to forecast; all series when absent.
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    #[serde(default = "one")]
    pub h: usize,
    /// First forecast origin, `YYYY-MM`.
    pub forecast_start: String,
    /// First evaluated origin, `YYYY-MM`.
    pub evaluation_start: String,
    /// Last period whose realization is used, `YYYY-MM`; end of sample when absent.
    #[serde(default)]
    pub evaluation_end: Option<String>,
    /// Window lengths as multiples of the nominal predictor count.
    #[serde(default = "default_multiples")]
    pub window_multiples: Vec<f64>,
    #[serde(default = "default_empirical_methods")]
    pub methods: Vec<EmpiricalMethod>,
    #[serde(default = "default_empirical_dimension")]
    pub max_dimension: usize,
    #[serde(default = "default_empirical_draws")]
    pub rp_draws: usize,
    #[serde(default)]
    pub ridge_log_penalty: LogPenaltyGrid,
    /// Monthly versus quarterly comparison on the common variable subset.
    #[serde(default)]
    pub frequency_experiment: Option<FrequencyExperiment>,
}

pub const DEFAULT_MULTIPLES: [f64; 7] = [1.0 / 3.0, 0.5, 2.0 / 3.0, 5.0 / 6.0, 1.0, 7.0 / 6.0, 4.0 / 3.0];

fn default_multiples() -> Vec<f64> {
    DEFAULT_MULTIPLES.to_vec()
}

fn default_empirical_methods() -> Vec<EmpiricalMethod> {
    vec![EmpiricalMethod::Pca, EmpiricalMethod::Ridge, EmpiricalMethod::Rp]
}

fn default_empirical_dimension() -> usize {
    50
}

fn default_empirical_draws() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyExperiment {
    /// FRED-QD style CSV; the monthly data aggregated to quarters when absent.
    #[serde(default)]
    pub quarterly_data: Option<PathBuf>,
    /// Variable mapping table; the shipped 102-variable table when absent.
    #[serde(default)]
    pub mapping: Option<PathBuf>,
    #[serde(default = "default_window_years")]
    pub window_years: usize,
    #[serde(default = "three")]
    pub monthly_h: usize,
    #[serde(default = "one")]
    pub quarterly_h: usize,
}

fn default_window_years() -> usize {
    10
}

fn three() -> usize {
    3
}

impl EmpiricalConfig {
    fn validate(&self) -> Result<()> {
        ensure!(self.h >= 1, "horizon must be at least 1");
        ensure!(!self.window_multiples.is_empty() || self.frequency_experiment.is_some(), "no windows configured");
        ensure!(self.window_multiples.iter().all(|m| *m > 0.0 && m.is_finite()), "window multiples must be positive");
        ensure!(!self.methods.is_empty(), "no methods configured");
        ensure!(self.max_dimension >= 1 && self.rp_draws >= 1, "max_dimension and rp_draws must be positive");
        ensure!(self.ridge_log_penalty.points >= 1, "ridge grid is empty");
        for d in [Some(&self.forecast_start), Some(&self.evaluation_start), self.evaluation_end.as_ref()].into_iter().flatten() {
            parse_month(d)?;
        }
        ensure!(parse_month(&self.forecast_start)? <= parse_month(&self.evaluation_start)?, "evaluation must not start before forecasting");
        if !self.data.exists() {
            bail!("data file {} does not exist", self.data.display());
        }
        if let Some(f) = &self.frequency_experiment {
            ensure!(f.window_years >= 1 && f.monthly_h >= 1 && f.quarterly_h >= 1, "invalid frequency experiment settings");
        }
        Ok(())
    }
}

/// Parses `YYYY-MM` into a month index.
pub fn parse_month(text: &str) -> Result<diffuse_core::ingest::Date> {
    let (y, m) = text.split_once('-').with_context(|| format!("expected YYYY-MM, got {text:?}"))?;
    let date = diffuse_core::ingest::Date::new(y.parse()?, m.parse()?, 1)?;
    Ok(date)
}

/// Spectral diagnostics for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseConfig {
    pub master_seed: u64,
    pub t: usize,
    pub n: usize,
    /// The `min(T, N)` singular values of `X / sqrt(NT)`, positive and nonincreasing.
    pub singular_values: Vec<f64>,
    pub k: usize,
    pub draws: usize,
    #[serde(default)]
    pub pca_r: Option<usize>,
    /// Ridge parameter of the profile; defaults to `k`.
    #[serde(default)]
    pub ridge_k: Option<f64>,
}

impl DiagnoseConfig {
    fn validate(&self) -> Result<()> {
        let m = self.t.min(self.n);
        ensure!(self.singular_values.len() == m, "need exactly min(T, N) = {m} singular values");
        ensure!(self.singular_values.windows(2).all(|w| w[0] >= w[1]) && self.singular_values.iter().all(|d| *d > 0.0), "singular values must be positive and nonincreasing");
        ensure!(self.k >= 1 && self.k <= self.singular_values.len(), "k must lie in 1..={}", self.singular_values.len());
        ensure!(self.draws >= 2, "at least two draws are needed for standard errors");
        ensure!(self.n <= self.t, "diagnostics need N <= T");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_mc_config() {
        let cfg: RunConfig = serde_json::from_str(r#"{"schema_version":1,"command":"mc","master_seed":7,"reps":3,"cells":[{"n":10,"t":10,"alpha":1.0}]}"#).unwrap();
        cfg.validate().unwrap();
        let Command::Mc(mc) = &cfg.command else { panic!() };
        assert_eq!(mc.methods.len(), 4);
        assert_eq!(mc.dgp(0, &mc.cells[0]).noise_var, 2.0);
    }

    #[test]
    fn seeds_are_mandatory() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"schema_version":1,"command":"mc","reps":3,"cells":[]}"#).is_err());
    }

    #[test]
    fn grid_expansion_order() {
        let g = CellGrid { n: vec![100, 200], t: None, alpha: vec![0.5, 1.0], rho: vec![0.0] };
        let mc = McConfig { grid: Some(g), ..serde_json::from_str(r#"{"master_seed":1,"reps":1}"#).unwrap() };
        let cells = mc.all_cells();
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[1].n, cells[1].t, cells[1].alpha), (200, 200, 0.5));
    }

    #[test]
    fn ridge_log_grid_has_100_points() {
        let v = LogPenaltyGrid::default().values();
        assert_eq!(v.len(), 100);
        assert!((v[0] + 14.7).abs() < 1e-12 && (v[99] - 15.0).abs() < 1e-9);
    }
}
