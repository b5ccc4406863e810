//! Monte Carlo study under the weak-loading factor model.
//!
//! Data are generated as `x_t = Lambda f_t + e_t` and
//! `y_{t+h} = f_t' gamma + eps_{t+h}` with standard normal factors,
//! loadings `sqrt(N^alpha / N) Z` and idiosyncratic errors that are either
//! iid or unit-variance AR(1) in time, both scaled to variance `noise_var`.
//! Forecasts are scored against the conditional mean `f_T' gamma`.
//!
//! Every replication draws from the stream `(master_seed, [rep, 0])` in the
//! fixed order factors, loadings, idiosyncratic errors, target noise.
//! Random-projection draws of replication `rep` use the base seed
//! `derive_seed(master_seed, [rep, 1])`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forecasters::{SpectralForecaster, TrainingSet};
use crate::ingest::{Date, Frequency, RawDataset, Series};
use crate::rng::{self, StreamRng};
use crate::spectra::PanelMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub n: usize,
    /// Last period index; factors exist for `t = 0..=T`.
    pub t: usize,
    pub r: usize,
    pub alpha: f64,
    /// AR(1) coefficient of the idiosyncratic errors; 0 gives iid errors.
    pub rho: f64,
    pub gamma: Vec<f64>,
    /// Variance of both the idiosyncratic errors and the target noise.
    pub noise_var: f64,
    pub h: usize,
    pub reps: usize,
    pub master_seed: u64,
}

impl DgpConfig {
    /// Two factors, unit coefficients, noise variance equal to the number of factors.
    pub fn new(n: usize, t: usize, alpha: f64, rho: f64, reps: usize, master_seed: u64) -> Self {
        Self { n, t, r: 2, alpha, rho, gamma: vec![1.0; 2], noise_var: 2.0, h: 1, reps, master_seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::arg(m));
        if self.n < 1 || self.r < 1 || self.reps < 1 || self.h < 1 {
            return bad(format!("n, r, reps and h must be positive (n={}, r={}, reps={}, h={})", self.n, self.r, self.reps, self.h));
        }
        if self.t < self.h + 1 {
            return bad(format!("T = {} leaves fewer than two estimation rows at horizon {}", self.t, self.h));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.rho.abs() < 1.0) {
            return bad(format!("|rho| must be below 1, got {}", self.rho));
        }
        if self.gamma.len() != self.r || self.gamma.iter().any(|g| !g.is_finite()) {
            return bad(format!("gamma must hold {} finite coefficients", self.r));
        }
        if !(self.noise_var >= 0.0) || !self.noise_var.is_finite() {
            return bad(format!("noise variance must be finite and nonnegative, got {}", self.noise_var));
        }
        Ok(())
    }

    /// Number of estimation rows, `T - h + 1`.
    pub fn training_rows(&self) -> usize {
        self.t + 1 - self.h
    }
}

/// All random components of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpDraw {
    /// `(T + 1) x r` factors.
    pub factors: DMatrix<f64>,
    /// `N x r` loadings.
    pub loadings: DMatrix<f64>,
    /// `(T + 1) x N` idiosyncratic errors.
    pub idiosyncratic: DMatrix<f64>,
    /// Target noise `eps_{t+h}` for `t = 0..=T-h`.
    pub target_noise: DVector<f64>,
}

fn normal(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn simulate_components(cfg: &DgpConfig, rep: usize) -> Result<DgpDraw> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.master_seed, &[rep as u64, 0]);
    let periods = cfg.t + 1;
    let factors = rng::standard_normal_matrix(&mut rng, periods, cfg.r);
    let loading_scale = ((cfg.n as f64).powf(cfg.alpha) / cfg.n as f64).sqrt();
    let loadings = rng::standard_normal_matrix(&mut rng, cfg.n, cfg.r) * loading_scale;
    let sd = cfg.noise_var.sqrt();
    let innovation_sd = (1.0 - cfg.rho * cfg.rho).sqrt();
    let mut idiosyncratic = DMatrix::zeros(periods, cfg.n);
    for t in 0..periods {
        for i in 0..cfg.n {
            let z = normal(&mut rng);
            idiosyncratic[(t, i)] = if t == 0 { z } else { cfg.rho * idiosyncratic[(t - 1, i)] + innovation_sd * z };
        }
    }
    idiosyncratic *= sd;
    let rows = cfg.training_rows();
    let target_noise = DVector::from_iterator(rows, (0..rows).map(|_| sd * normal(&mut rng)));
    Ok(DgpDraw { factors, loadings, idiosyncratic, target_noise })
}

/// Training sample and conditional-mean target `f_T' gamma` of replication `rep`.
pub fn simulate_panel(cfg: &DgpConfig, rep: usize) -> Result<(TrainingSet, f64)> {
    let draw = simulate_components(cfg, rep)?;
    let gamma = DVector::from_column_slice(&cfg.gamma);
    let x_all = &draw.factors * draw.loadings.transpose() + &draw.idiosyncratic;
    let rows = cfg.training_rows();
    let signal = &draw.factors * &gamma;
    let y = DVector::from_iterator(rows, (0..rows).map(|t| signal[t] + draw.target_noise[t]));
    let x = PanelMatrix::new(x_all.rows(0, rows).into_owned())?;
    let x_new = x_all.row(cfg.t).transpose();
    Ok((TrainingSet::new(x, y, cfg.h, x_new)?, signal[cfg.t]))
}

/// `n` points spaced evenly in logs from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McGrid {
    pub ridge_k: Vec<f64>,
    pub rp_k: Vec<usize>,
    pub pca_r: Vec<usize>,
    pub rp_draws: usize,
}

impl McGrid {
    pub const RIDGE_POINTS: usize = 40;
    pub const RIDGE_RANGE: (f64, f64) = (1e-2, 1e6);
    pub const MAX_DIMENSION: usize = 60;
    pub const RP_DRAWS: usize = 100;

    /// Geometric ridge grid on `[1e-2, 1e6]` with 40 points and integer grids
    /// `1..=min(N, rows - 1, 60)` for the subspace dimension and factor count.
    pub fn default_for(cfg: &DgpConfig) -> Self {
        let top = cfg.n.min(cfg.training_rows() - 1).clamp(1, Self::MAX_DIMENSION);
        Self {
            ridge_k: geometric_grid(Self::RIDGE_RANGE.0, Self::RIDGE_RANGE.1, Self::RIDGE_POINTS),
            rp_k: (1..=top).collect(),
            pca_r: (1..=top).collect(),
            rp_draws: Self::RP_DRAWS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ridge_k.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::arg("ridge grid must hold positive finite values"));
        }
        let contiguous = |g: &[usize]| g.iter().enumerate().all(|(i, &v)| v == i + 1);
        if !contiguous(&self.rp_k) || !contiguous(&self.pca_r) {
            return Err(Error::arg("subspace and factor grids must be 1..=max"));
        }
        if self.rp_draws < 1 {
            return Err(Error::arg("random projection needs at least one draw"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McMethod {
    /// PCA with the nominal number of factors `r` of the configuration.
    Pca,
    /// PCA with the factor count tuned ex post over the factor grid.
    #[serde(rename = "pca_k")]
    PcaTuned,
    Ridge,
    #[serde(rename = "rp")]
    RandomProjection,
}

impl McMethod {
    pub const ALL: [McMethod; 4] = [McMethod::Pca, McMethod::PcaTuned, McMethod::Ridge, McMethod::RandomProjection];

    pub fn label(self) -> &'static str {
        match self {
            McMethod::Pca => "pca",
            McMethod::PcaTuned => "pca_k",
            McMethod::Ridge => "ridge",
            McMethod::RandomProjection => "rp",
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.label() == label).ok_or_else(|| Error::arg(format!("unknown method {label:?}")))
    }

    fn candidates(self, cfg: &DgpConfig, grid: &McGrid) -> Vec<f64> {
        match self {
            McMethod::Pca => vec![cfg.r as f64],
            McMethod::PcaTuned => grid.pca_r.iter().map(|&r| r as f64).collect(),
            McMethod::Ridge => grid.ridge_k.clone(),
            McMethod::RandomProjection => grid.rp_k.iter().map(|&k| k as f64).collect(),
        }
    }
}

/// Result of ex-post tuning over a candidate grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub index: usize,
    pub value: f64,
    pub msfe: f64,
}

/// Candidate with the smallest mean squared error; exact ties go to the
/// smallest candidate value. `errors[c]` holds the per-replication squared
/// errors of candidate `c`.
pub fn expost_tune(candidates: &[f64], errors: &[Vec<f64>]) -> Result<Tuned> {
    if candidates.is_empty() {
        return Err(Error::arg("empty candidate grid"));
    }
    if errors.len() != candidates.len() {
        return Err(Error::arg(format!("{} error columns for {} candidates", errors.len(), candidates.len())));
    }
    let reps = errors[0].len();
    if reps == 0 || errors.iter().any(|e| e.len() != reps) {
        return Err(Error::arg("every candidate needs the same positive number of replications"));
    }
    let mut best: Option<Tuned> = None;
    for (index, (&value, e)) in candidates.iter().zip(errors).enumerate() {
        let msfe = e.iter().sum::<f64>() / reps as f64;
        let better = match best {
            None => true,
            Some(b) => msfe < b.msfe || (msfe == b.msfe && value < b.value),
        };
        if better {
            best = Some(Tuned { index, value, msfe });
        }
    }
    Ok(best.expect("nonempty grid"))
}

/// Ex-post optimal number of factors over `1..=max_r`.
pub fn pca_k_tune(max_r: usize, errors: &[Vec<f64>]) -> Result<usize> {
    let candidates: Vec<f64> = (1..=max_r).map(|r| r as f64).collect();
    Ok(expost_tune(&candidates, errors)?.value as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: McMethod,
    pub grid: Vec<f64>,
    pub msfe: Vec<f64>,
    pub std_err: Vec<f64>,
    pub best: Tuned,
    pub best_std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub config: DgpConfig,
    pub grid: McGrid,
    pub reps: usize,
    pub methods: Vec<MethodSummary>,
    /// Singular projected designs that were redrawn, over all replications.
    pub regenerated_draws: usize,
    /// `squared_errors[method][candidate][rep]`, kept on request.
    pub squared_errors: Option<Vec<Vec<Vec<f64>>>>,
}

impl McResult {
    pub fn summary(&self, method: McMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn best_msfe(&self, method: McMethod) -> Option<f64> {
        self.summary(method).map(|s| s.best.msfe)
    }
}

struct RepOutcome {
    errors: Vec<Vec<f64>>,
    regenerated: usize,
}

fn run_rep(cfg: &DgpConfig, methods: &[McMethod], grid: &McGrid, rep: usize) -> Result<RepOutcome> {
    let (ts, truth) = simulate_panel(cfg, rep)?;
    let sf = SpectralForecaster::new(&ts)?;
    let mut regenerated = 0;
    let mut errors = Vec::with_capacity(methods.len());
    for &m in methods {
        let forecasts = match m {
            McMethod::Pca => vec![sf.pca(cfg.r)?],
            McMethod::PcaTuned => sf.pca_path(grid.pca_r.len())?,
            McMethod::Ridge => sf.ridge_path(&grid.ridge_k)?,
            McMethod::RandomProjection => {
                let seed = rng::derive_seed(cfg.master_seed, &[rep as u64, 1]);
                let path = sf.rp_path(grid.rp_k.len(), grid.rp_draws, seed)?;
                regenerated += path.regenerated;
                path.mean
            }
        };
        errors.push(forecasts.into_iter().map(|f| (f - truth).powi(2)).collect());
    }
    Ok(RepOutcome { errors, regenerated })
}

/// Runs every replication, scores each method at every grid point against
/// the conditional mean and tunes hyperparameters ex post. Replications run
/// in parallel and are reduced in replication order. The first failing
/// replication (in replication order) aborts the run.
pub fn run_monte_carlo(cfg: &DgpConfig, methods: &[McMethod], grid: &McGrid, retain_errors: bool) -> Result<McResult> {
    cfg.validate()?;
    grid.validate()?;
    if methods.is_empty() {
        return Err(Error::arg("no methods requested"));
    }
    let outcomes: Vec<Result<RepOutcome>> = (0..cfg.reps).into_par_iter().map(|rep| run_rep(cfg, methods, grid, rep)).collect();
    let mut per_rep = Vec::with_capacity(cfg.reps);
    for (rep, o) in outcomes.into_iter().enumerate() {
        per_rep.push(o.map_err(|e| Error::Replication { rep, source: Box::new(e) })?);
    }
    let regenerated_draws = per_rep.iter().map(|o| o.regenerated).sum();
    let n = cfg.reps as f64;
    let mut all_errors = Vec::with_capacity(methods.len());
    let mut summaries = Vec::with_capacity(methods.len());
    for (mi, &m) in methods.iter().enumerate() {
        let candidates = m.candidates(cfg, grid);
        let errors: Vec<Vec<f64>> = (0..candidates.len()).map(|c| per_rep.iter().map(|o| o.errors[mi][c]).collect()).collect();
        let msfe: Vec<f64> = errors.iter().map(|e| e.iter().sum::<f64>() / n).collect();
        let std_err: Vec<f64> = errors
            .iter()
            .zip(&msfe)
            .map(|(e, &mean)| if cfg.reps < 2 { 0.0 } else { (e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt() })
            .collect();
        let best = expost_tune(&candidates, &errors)?;
        summaries.push(MethodSummary { method: m, best_std_err: std_err[best.index], grid: candidates, msfe, std_err, best });
        all_errors.push(errors);
    }
    Ok(McResult {
        config: cfg.clone(),
        grid: grid.clone(),
        reps: cfg.reps,
        methods: summaries,
        regenerated_draws,
        squared_errors: retain_errors.then_some(all_errors),
    })
}

/// Ex-post optimal MSFE of each method relative to PCA with the nominal factor count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub n: usize,
    pub t: usize,
    pub alpha: f64,
    pub rho: f64,
    pub msfe: BTreeMap<String, f64>,
    pub relative: BTreeMap<String, f64>,
}

/// Relative MSFEs over a set of configurations, each run on its default grid.
pub fn rate_scan(cfgs: &[DgpConfig], methods: &[McMethod]) -> Result<Vec<RateCell>> {
    let mut with_base: Vec<McMethod> = methods.to_vec();
    if !with_base.contains(&McMethod::Pca) {
        with_base.insert(0, McMethod::Pca);
    }
    cfgs.iter()
        .map(|cfg| {
            let res = run_monte_carlo(cfg, &with_base, &McGrid::default_for(cfg), false)?;
            let base = res.best_msfe(McMethod::Pca).expect("baseline included");
            let msfe: BTreeMap<String, f64> = res.methods.iter().map(|s| (s.method.label().to_string(), s.best.msfe)).collect();
            let relative = msfe.iter().map(|(k, v)| (k.clone(), v / base)).collect();
            Ok(RateCell { n: cfg.n, t: cfg.t, alpha: cfg.alpha, rho: cfg.rho, msfe, relative })
        })
        .collect()
}

/// Parameters of a synthetic monthly panel in FRED-MD layout.
///
/// Stationary series follow `z_it = lambda_i' f_t + e_it` with AR(1)
/// factors and idiosyncratic terms; loadings scale as `sqrt(N^alpha / N)`.
/// Raw levels are obtained by inverting transformation codes cycling
/// through 1, 2 and 5, so transforming the file recovers `z` (log-difference
/// series are scaled by `growth_scale`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMacroConfig {
    pub n_series: usize,
    pub start_year: i32,
    pub start_month: u32,
    pub months: usize,
    pub factors: usize,
    pub factor_ar: f64,
    pub alpha: f64,
    pub idio_ar: f64,
    pub idio_sd: f64,
    pub growth_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticMacroConfig {
    fn default() -> Self {
        Self {
            n_series: 128,
            start_year: 2000,
            start_month: 1,
            months: 264,
            factors: 4,
            factor_ar: 0.8,
            alpha: 0.6,
            idio_ar: 0.3,
            idio_sd: 1.0,
            growth_scale: 0.01,
            seed: 20240101,
        }
    }
}

/// Series `i` belongs to group `i % 8 + 1`.
const SYNTHETIC_GROUPS: usize = 8;

/// Transformation codes assigned cyclically to synthetic series.
pub const SYNTHETIC_TCODES: [u8; 3] = [1, 2, 5];

pub fn synthetic_macro_panel(cfg: &SyntheticMacroConfig) -> Result<RawDataset> {
    if cfg.n_series < 2 || cfg.months < 2 || cfg.factors < 1 {
        return Err(Error::arg("synthetic panel needs at least two series, two months and one factor"));
    }
    if !(cfg.factor_ar.abs() < 1.0 && cfg.idio_ar.abs() < 1.0) || !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
        return Err(Error::arg("synthetic panel needs stationary AR coefficients and alpha in (0, 1]"));
    }
    let mut rng = rng::stream(cfg.seed, &[]);
    let (n, t_len, r) = (cfg.n_series, cfg.months, cfg.factors);
    let ar = |rng: &mut StreamRng, phi: f64, len: usize, sd: f64| -> Vec<f64> {
        let mut v = Vec::with_capacity(len);
        let mut prev = normal(rng);
        v.push(prev * sd);
        for _ in 1..len {
            prev = phi * prev + (1.0 - phi * phi).sqrt() * normal(rng);
            v.push(prev * sd);
        }
        v
    };
    let factors: Vec<Vec<f64>> = (0..r).map(|_| ar(&mut rng, cfg.factor_ar, t_len, 1.0)).collect();
    let scale = ((n as f64).powf(cfg.alpha) / n as f64).sqrt();
    let start = Date::new(cfg.start_year, cfg.start_month, 1)?.month_index();
    let dates: Vec<Date> = (0..t_len as i64).map(|i| Date::from_month_index(start + i)).collect();
    let mut series = Vec::with_capacity(n);
    for i in 0..n {
        let loadings: Vec<f64> = (0..r).map(|_| normal(&mut rng) * scale).collect();
        let idio = ar(&mut rng, cfg.idio_ar, t_len, cfg.idio_sd);
        let z: Vec<f64> = (0..t_len).map(|t| (0..r).map(|j| loadings[j] * factors[j][t]).sum::<f64>() + idio[t]).collect();
        let tcode = SYNTHETIC_TCODES[i % SYNTHETIC_TCODES.len()];
        let values = match tcode {
            1 => z,
            2 => z.iter().scan(0.0, |level, dz| {
                *level += dz;
                Some(*level)
            }).collect(),
            _ => z.iter().scan(0.0, |log_level, dz| {
                *log_level += cfg.growth_scale * dz;
                Some(100.0 * log_level.exp())
            }).collect(),
        };
        series.push(Series {
            name: format!("S{:03}", i + 1),
            tcode,
            group: Some((i % SYNTHETIC_GROUPS) as u8 + 1),
            factor: None,
            values: values.into_iter().map(Some).collect(),
        });
    }
    RawDataset::new(Frequency::Monthly, dates, series)
}
