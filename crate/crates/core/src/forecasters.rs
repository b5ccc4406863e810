//! PCA, ridge and random-projection forecasts.
//!
//! Two families of entry points live here:
//!
//! - one-shot forecasts ([`pca_forecast`], [`ridge_forecast`],
//!   [`rp_forecast`], [`partialled_forecast`]) that follow the textbook
//!   construction of each method directly;
//! - path evaluators ([`SpectralForecaster`], [`AugmentedForecaster`]) that
//!   compute forecasts for a whole hyperparameter grid from one SVD. The
//!   Monte Carlo study and the rolling-window evaluation use these.
//!
//! The random-projection path draws `R` in the rotated coordinates `V'R`,
//! which has the same distribution as `R`. Columns are nested across
//! subspace dimensions, so one draw serves every `k` on the grid.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{forward_substitute, ols_forecast, prefix_qr_factor, spd_solve, FullRankQr};
use crate::rng::{self, StreamRng};
use crate::spectra::{mc_matrix_mean, scaled_svd, PanelMatrix, ScaledSvd};
use crate::{Error, Result};

/// A forecasting rule together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ForecastMethod {
    Pca { r: usize },
    Ridge { k: f64 },
    RandomProjection { k: usize, draws: usize, seed: u64 },
}

impl ForecastMethod {
    pub fn validate(&self, n_predictors: usize) -> Result<()> {
        match *self {
            ForecastMethod::Pca { r } if r < 1 => Err(Error::arg("PCA needs at least one factor")),
            ForecastMethod::Ridge { k } if !(k > 0.0) => Err(Error::arg(format!("ridge k must be positive, got {k}"))),
            ForecastMethod::RandomProjection { k, draws, .. } if k < 1 || k > n_predictors || draws < 1 => Err(Error::arg(
                format!("random projection needs 1 <= k <= {n_predictors} and draws >= 1, got k = {k}, draws = {draws}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Estimation sample of a direct `h`-step forecast: rows of `x` are the
/// predictors at `t = 0..T-h`, `y` holds `y_{t+h}`, `x_new` is `x_T`.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    x: PanelMatrix,
    y: DVector<f64>,
    h: usize,
    x_new: DVector<f64>,
}

impl TrainingSet {
    pub fn new(x: PanelMatrix, y: DVector<f64>, h: usize, x_new: DVector<f64>) -> Result<Self> {
        if y.len() != x.n_rows() {
            return Err(Error::data(format!("{} targets for {} predictor rows", y.len(), x.n_rows())));
        }
        if x_new.len() != x.n_cols() {
            return Err(Error::data(format!("new predictor vector has length {}, panel has {} columns", x_new.len(), x.n_cols())));
        }
        if h < 1 {
            return Err(Error::arg("forecast horizon must be at least 1"));
        }
        if y.iter().chain(x_new.iter()).any(|v| !v.is_finite()) {
            return Err(Error::data("targets and new predictors must be finite"));
        }
        Ok(Self { x, y, h, x_new })
    }

    pub fn x(&self) -> &PanelMatrix {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn x_new(&self) -> &DVector<f64> {
        &self.x_new
    }

    /// Number of predictors `N`.
    pub fn n(&self) -> usize {
        self.x.n_cols()
    }

    /// Number of estimation rows, used as `T` in the `N T / k` penalty.
    pub fn t(&self) -> usize {
        self.x.n_rows()
    }

    fn penalty(&self, k: f64) -> f64 {
        (self.n() * self.t()) as f64 / k
    }
}

fn check_factor_count(svd: &ScaledSvd, r: usize) -> Result<()> {
    if r < 1 || r > svd.m() {
        return Err(Error::arg(format!("number of factors must lie in 1..={}, got {r}", svd.m())));
    }
    let rank = svd.numerical_rank();
    if r > rank {
        return Err(Error::Rank { requested: r, rank });
    }
    Ok(())
}

/// Estimated factors `sqrt(T) U_r` and the new-period factor `D_r^{-1} V_r' x_new / sqrt(N)`.
fn factor_estimates(svd: &ScaledSvd, x_new: &DVector<f64>, r: usize, t: usize, n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let f = svd.u().columns(0, r) * (t as f64).sqrt();
    let mut f_new = svd.v().columns(0, r).tr_mul(x_new) / (n as f64).sqrt();
    for i in 0..r {
        f_new[i] /= svd.d()[i];
    }
    (f, f_new)
}

/// Principal components forecast with `r` factors.
///
/// The factors are estimated from the training rows only; `x_new` enters
/// through the estimated loadings.
pub fn pca_forecast(ts: &TrainingSet, r: usize) -> Result<f64> {
    let svd = scaled_svd(ts.x())?;
    check_factor_count(&svd, r)?;
    let (f, f_new) = factor_estimates(&svd, ts.x_new(), r, ts.t(), ts.n());
    ols_forecast(&f, ts.y(), &f_new)
}

/// Ridge forecast `x_new' (X'X + (N T / k) I)^{-1} X' y`.
///
/// Uses the primal system when `N <= T` and the dual `T x T` system otherwise.
pub fn ridge_forecast(ts: &TrainingSet, k: f64) -> Result<f64> {
    if ts.n() <= ts.t() {
        ridge_forecast_primal(ts, k)
    } else {
        ridge_forecast_dual(ts, k)
    }
}

fn check_ridge_k(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::arg(format!("ridge parameter k must be positive and finite, got {k}")));
    }
    Ok(())
}

pub fn ridge_forecast_primal(ts: &TrainingSet, k: f64) -> Result<f64> {
    Ok(ts.x_new().dot(&ridge_coefficients_primal(ts.x().values(), ts.y(), ts.penalty_checked(k)?)?))
}

pub fn ridge_forecast_dual(ts: &TrainingSet, k: f64) -> Result<f64> {
    Ok(ts.x_new().dot(&ridge_coefficients_dual(ts.x().values(), ts.y(), ts.penalty_checked(k)?)?))
}

impl TrainingSet {
    fn penalty_checked(&self, k: f64) -> Result<f64> {
        check_ridge_k(k)?;
        Ok(self.penalty(k))
    }
}

fn ridge_coefficients_primal(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = x.ncols();
    let gram = x.tr_mul(x) + DMatrix::<f64>::identity(n, n) * lambda;
    spd_solve(&gram, &x.tr_mul(y))
}

fn ridge_coefficients_dual(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let t = x.nrows();
    let gram = x * x.transpose() + DMatrix::<f64>::identity(t, t) * lambda;
    Ok(x.tr_mul(&spd_solve(&gram, y)?))
}

fn ridge_coefficients(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if x.ncols() <= x.nrows() {
        ridge_coefficients_primal(x, y, lambda)
    } else {
        ridge_coefficients_dual(x, y, lambda)
    }
}

/// Least squares forecast in the projected model `y = X R theta + xi`.
pub fn rp_forecast_single(ts: &TrainingSet, proj: &DMatrix<f64>) -> Result<f64> {
    if proj.nrows() != ts.n() || proj.ncols() < 1 {
        return Err(Error::arg(format!("projection must be {}xk with k >= 1, got {}x{}", ts.n(), proj.nrows(), proj.ncols())));
    }
    let xr = ts.x().values() * proj;
    ols_forecast(&xr, ts.y(), &proj.tr_mul(ts.x_new()))
}

/// The `draw`-th standard normal `n x k` projection for `seed` (first attempt).
pub fn projection_draw(n: usize, k: usize, seed: u64, draw: usize) -> DMatrix<f64> {
    rng::standard_normal_matrix(&mut rng::stream(seed, &[draw as u64, 0]), n, k)
}

/// Averaged random-projection forecast with its Monte Carlo error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RpForecast {
    pub mean: f64,
    pub std_err: f64,
    pub regenerated: usize,
}

/// Mean of [`rp_forecast_single`] over `draws` independent Gaussian projections.
pub fn rp_forecast(ts: &TrainingSet, k: usize, draws: usize, seed: u64) -> Result<f64> {
    rp_forecast_detailed(ts, k, draws, seed).map(|f| f.mean)
}

pub fn rp_forecast_detailed(ts: &TrainingSet, k: usize, draws: usize, seed: u64) -> Result<RpForecast> {
    ForecastMethod::RandomProjection { k, draws, seed }.validate(ts.n())?;
    let n = ts.n();
    let est = mc_matrix_mean(1, 1, draws, seed, "projected design XR", |rng| {
        let proj = rng::standard_normal_matrix(rng, n, k);
        rp_forecast_single(ts, &proj).ok().map(|f| DMatrix::from_element(1, 1, f))
    })?;
    Ok(RpForecast { mean: est.mean[(0, 0)], std_err: est.std_err[(0, 0)], regenerated: est.regenerated })
}

/// Dispatches to the forecaster named by `method`.
pub fn forecast(ts: &TrainingSet, method: &ForecastMethod) -> Result<f64> {
    method.validate(ts.n())?;
    match *method {
        ForecastMethod::Pca { r } => pca_forecast(ts, r),
        ForecastMethod::Ridge { k } => ridge_forecast(ts, k),
        ForecastMethod::RandomProjection { k, draws, seed } => rp_forecast(ts, k, draws, seed),
    }
}

/// Forecast from `y_{t+h} = w_t' b_w + x_t' b_x + e` where the control block
/// `w` is always included and never penalized. `x` enters through `method`:
///
/// - PCA: OLS of `y` on `[W, F]` with factors `F` extracted from `X` alone;
/// - ridge: only `b_x` is penalized, solved by partialling `W` out of `y`
///   and `X` and then recovering `b_w`;
/// - random projection: per draw, OLS of `y` on `[W, X R]`, averaged.
///
/// An empty control block (zero columns) reduces to the plain forecasts.
pub fn partialled_forecast(w_block: &DMatrix<f64>, w_new: &DVector<f64>, ts: &TrainingSet, method: &ForecastMethod) -> Result<f64> {
    check_controls(w_block, w_new, ts)?;
    method.validate(ts.n())?;
    if w_block.ncols() == 0 {
        return forecast(ts, method);
    }
    let w_qr = FullRankQr::new(w_block).map_err(|e| Error::SingularDesign(format!("control block: {e}")))?;
    match *method {
        ForecastMethod::Pca { r } => {
            let svd = scaled_svd(ts.x())?;
            check_factor_count(&svd, r)?;
            let (f, f_new) = factor_estimates(&svd, ts.x_new(), r, ts.t(), ts.n());
            ols_forecast(&hstack(w_block, &f), ts.y(), &vstack(w_new, &f_new))
        }
        ForecastMethod::Ridge { k } => {
            let lambda = ts.penalty_checked(k)?;
            let annihilate = |a: &DMatrix<f64>| a - &w_qr.q * w_qr.q.tr_mul(a);
            let x_tilde = annihilate(ts.x().values());
            let y_tilde = ts.y() - &w_qr.q * w_qr.q.tr_mul(ts.y());
            let beta_x = ridge_coefficients(&x_tilde, &y_tilde, lambda)?;
            let beta_w = w_qr.coefficients(&(ts.y() - ts.x().values() * &beta_x));
            Ok(w_new.dot(&beta_w) + ts.x_new().dot(&beta_x))
        }
        ForecastMethod::RandomProjection { k, draws, seed } => partialled_rp_detailed(w_block, w_new, ts, k, draws, seed).map(|f| f.mean),
    }
}

/// Random-projection forecast with controls, averaged over draws of `R`.
pub fn partialled_rp_detailed(w_block: &DMatrix<f64>, w_new: &DVector<f64>, ts: &TrainingSet, k: usize, draws: usize, seed: u64) -> Result<RpForecast> {
    check_controls(w_block, w_new, ts)?;
    ForecastMethod::RandomProjection { k, draws, seed }.validate(ts.n())?;
    let n = ts.n();
    let est = mc_matrix_mean(1, 1, draws, seed, "projected design [W, XR]", |rng| {
        let proj = rng::standard_normal_matrix(rng, n, k);
        let design = hstack(w_block, &(ts.x().values() * &proj));
        ols_forecast(&design, ts.y(), &vstack(w_new, &proj.tr_mul(ts.x_new())))
            .ok()
            .map(|f| DMatrix::from_element(1, 1, f))
    })?;
    Ok(RpForecast { mean: est.mean[(0, 0)], std_err: est.std_err[(0, 0)], regenerated: est.regenerated })
}

fn check_controls(w_block: &DMatrix<f64>, w_new: &DVector<f64>, ts: &TrainingSet) -> Result<()> {
    if w_block.nrows() != ts.t() {
        return Err(Error::data(format!("control block has {} rows, training set has {}", w_block.nrows(), ts.t())));
    }
    if w_new.len() != w_block.ncols() {
        return Err(Error::data(format!("new control vector has length {}, block has {} columns", w_new.len(), w_block.ncols())));
    }
    if w_block.iter().chain(w_new.iter()).any(|v| !v.is_finite()) {
        return Err(Error::data("control block must be finite"));
    }
    Ok(())
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn vstack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Random-projection forecasts for every subspace dimension `1..=max_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpPath {
    /// `mean[k - 1]` is the averaged forecast with subspace dimension `k`.
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub regenerated: usize,
}

/// Forecasts for whole hyperparameter grids computed from one scaled SVD.
///
/// With `Z = X / sqrt(NT) = U D V'`, `c = U'y`, `g = V'x_new` and
/// `s = sqrt(NT)`, the PCA and ridge forecasts are
/// `sum_i w_i c_i g_i / (s d_i)` with the weights of
/// [`crate::spectra::pca_shrinkage`] and [`crate::spectra::ridge_shrinkage`].
#[derive(Debug, Clone)]
pub struct SpectralForecaster {
    svd: ScaledSvd,
    uy: DVector<f64>,
    vx: DVector<f64>,
    /// Norm of the part of `x_new` orthogonal to the columns of `V`.
    outside_norm: f64,
}

impl SpectralForecaster {
    pub fn new(ts: &TrainingSet) -> Result<Self> {
        Self::from_parts(ts.x(), ts.y(), ts.x_new())
    }

    fn from_parts(x: &PanelMatrix, y: &DVector<f64>, x_new: &DVector<f64>) -> Result<Self> {
        let svd = scaled_svd(x)?;
        let uy = svd.u().tr_mul(y);
        let vx = svd.v().tr_mul(x_new);
        let outside_norm = if svd.m() == x.n_cols() { 0.0 } else { (x_new - svd.v() * &vx).norm() };
        Ok(Self { svd, uy, vx, outside_norm })
    }

    pub fn svd(&self) -> &ScaledSvd {
        &self.svd
    }

    /// PCA forecasts for `r = 1..=max_r`.
    pub fn pca_path(&self, max_r: usize) -> Result<Vec<f64>> {
        check_factor_count(&self.svd, max_r)?;
        let s = self.svd.scale();
        let mut acc = 0.0;
        Ok((0..max_r)
            .map(|i| {
                acc += self.uy[i] * self.vx[i] / (s * self.svd.d()[i]);
                acc
            })
            .collect())
    }

    pub fn pca(&self, r: usize) -> Result<f64> {
        Ok(*self.pca_path(r)?.last().expect("r >= 1"))
    }

    pub fn ridge(&self, k: f64) -> Result<f64> {
        check_ridge_k(k)?;
        let s = self.svd.scale();
        Ok(self
            .svd
            .d()
            .iter()
            .zip(self.uy.iter().zip(self.vx.iter()))
            .map(|(&d, (&c, &g))| c * g * k * d / (s * (k * d * d + 1.0)))
            .sum())
    }

    pub fn ridge_path(&self, ks: &[f64]) -> Result<Vec<f64>> {
        ks.iter().map(|&k| self.ridge(k)).collect()
    }

    /// Forecast with arbitrary spectral weights, `sum_i w_i c_i g_i / (s d_i)`.
    /// Directions with `d_i = 0` contribute nothing.
    pub fn weighted(&self, weights: &[f64]) -> f64 {
        let s = self.svd.scale();
        weights
            .iter()
            .zip(self.svd.d().iter())
            .zip(self.uy.iter().zip(self.vx.iter()))
            .filter(|((_, &d), _)| d > 0.0)
            .map(|((&w, &d), (&c, &g))| w * c * g / (s * d))
            .sum()
    }

    /// Random-projection forecasts for `k = 1..=max_k`, averaged over `draws`
    /// projections whose leading `k` columns are shared across dimensions.
    pub fn rp_path(&self, max_k: usize, draws: usize, seed: u64) -> Result<RpPath> {
        if max_k < 1 || draws < 1 {
            return Err(Error::arg("random projection path needs max_k >= 1 and draws >= 1"));
        }
        let rank = self.svd.numerical_rank();
        if max_k > rank {
            return Err(Error::Rank { requested: max_k, rank });
        }
        let est = mc_matrix_mean(max_k, 1, draws, seed, "spectral projected design", |rng| {
            self.rp_draw(max_k, rng).map(|v| DMatrix::from_vec(max_k, 1, v))
        })?;
        Ok(RpPath {
            mean: est.mean.iter().copied().collect(),
            std_err: est.std_err.iter().copied().collect(),
            regenerated: est.regenerated,
        })
    }

    fn rp_draw(&self, max_k: usize, rng: &mut StreamRng) -> Option<Vec<f64>> {
        nested_projection_draw(self.svd.d().as_slice(), &self.uy, &self.vx, self.outside_norm, max_k, rng)
            .map(|v| v.into_iter().map(|f| f / self.svd.scale()).collect())
    }
}

/// One draw of the nested projection forecasts in spectral coordinates:
/// with `B = diag(d) Rt`, `G = B'B = L L'`, `b = B'c` and `a = Rt'g + rho * e`,
/// returns `a_k' G_k^{-1} b_k` for every leading block `k`.
fn nested_projection_draw(d: &[f64], uy: &DVector<f64>, vx: &DVector<f64>, outside: f64, max_k: usize, rng: &mut StreamRng) -> Option<Vec<f64>> {
    let m = d.len();
    let rt = rng::standard_normal_matrix(rng, m, max_k);
    let extra = rng::standard_normal_matrix(rng, max_k, 1);
    let mut b_mat = rt.clone();
    for (mut row, &di) in b_mat.row_iter_mut().zip(d) {
        row *= di;
    }
    let (l, ok) = prefix_qr_factor(&b_mat);
    if ok < max_k {
        return None;
    }
    let b = b_mat.tr_mul(uy);
    let a = rt.tr_mul(vx) + extra.column(0) * outside;
    let z = forward_substitute(&l, b.as_slice(), max_k);
    let q = forward_substitute(&l, a.as_slice(), max_k);
    let mut acc = 0.0;
    Some(z.iter().zip(&q).map(|(zi, qi)| {
        acc += zi * qi;
        acc
    }).collect())
}

/// Grid evaluator for the model with an always-included control block.
///
/// Ridge and random projections act on `M_W X`, the predictors with the
/// control block partialled out; PCA extracts factors from `X` itself and
/// regresses `y` on `[W, F]`.
#[derive(Debug, Clone)]
pub struct AugmentedForecaster {
    base: f64,
    partialled: SpectralForecaster,
    factors: SpectralForecaster,
    controls: Option<FullRankQr>,
    /// `(W'W)^{-1} w_new` expressed as `R^{-T} w_new` for the thin QR of `W`.
    control_direction: DVector<f64>,
    t: usize,
    n: usize,
    y: DVector<f64>,
    x_new: DVector<f64>,
}

impl AugmentedForecaster {
    pub fn new(w_block: &DMatrix<f64>, w_new: &DVector<f64>, ts: &TrainingSet) -> Result<Self> {
        check_controls(w_block, w_new, ts)?;
        let factors = SpectralForecaster::new(ts)?;
        if w_block.ncols() == 0 {
            return Ok(Self {
                base: 0.0,
                partialled: factors.clone(),
                factors,
                controls: None,
                control_direction: DVector::zeros(0),
                t: ts.t(),
                n: ts.n(),
                y: ts.y().clone(),
                x_new: ts.x_new().clone(),
            });
        }
        let qr = FullRankQr::new(w_block).map_err(|e| Error::SingularDesign(format!("control block: {e}")))?;
        let base = w_new.dot(&qr.coefficients(ts.y()));
        let c = qr.solve_r_transpose(w_new);
        let x = ts.x().values();
        let qtx = qr.q.tr_mul(x);
        let x_tilde = x - &qr.q * &qtx;
        let x_new_tilde = ts.x_new() - qtx.tr_mul(&c);
        let partialled = SpectralForecaster::from_parts(&PanelMatrix::new(x_tilde)?, ts.y(), &x_new_tilde)?;
        Ok(Self {
            base,
            partialled,
            factors,
            controls: Some(qr),
            control_direction: c,
            t: ts.t(),
            n: ts.n(),
            y: ts.y().clone(),
            x_new: ts.x_new().clone(),
        })
    }

    /// Forecast from the control block alone.
    pub fn base(&self) -> f64 {
        self.base
    }

    /// Largest grid size supported by the partialled panel's numerical rank.
    pub fn partialled_rank(&self) -> usize {
        self.partialled.svd().numerical_rank()
    }

    pub fn factor_rank(&self) -> usize {
        self.factors.svd().numerical_rank()
    }

    pub fn ridge_path(&self, ks: &[f64]) -> Result<Vec<f64>> {
        Ok(self.partialled.ridge_path(ks)?.into_iter().map(|f| self.base + f).collect())
    }

    /// Ridge forecasts indexed by the raw penalty `lambda` added to `X'X`.
    pub fn ridge_path_by_penalty(&self, lambdas: &[f64]) -> Result<Vec<f64>> {
        let nt = (self.n * self.t) as f64;
        let ks: Vec<f64> = lambdas.iter().map(|&l| nt / l).collect();
        self.ridge_path(&ks)
    }

    pub fn rp_path(&self, max_k: usize, draws: usize, seed: u64) -> Result<RpPath> {
        let mut path = self.partialled.rp_path(max_k, draws, seed)?;
        for m in &mut path.mean {
            *m += self.base;
        }
        Ok(path)
    }

    /// PCA forecasts for `r = 1..=max_r` with the control block included.
    pub fn pca_path(&self, max_r: usize) -> Result<Vec<f64>> {
        let path = self.pca_path_prefix(max_r)?;
        if path.len() < max_r {
            return Err(Error::SingularDesign(format!("factor {} is collinear with the control block", path.len() + 1)));
        }
        Ok(path)
    }

    /// Like [`Self::pca_path`] but stops before the first factor that is
    /// collinear with the control block, so the result may be shorter than
    /// `max_r`.
    pub fn pca_path_prefix(&self, max_r: usize) -> Result<Vec<f64>> {
        let Some(qr) = &self.controls else {
            return self.factors.pca_path(max_r);
        };
        let svd = self.factors.svd();
        check_factor_count(svd, max_r)?;
        let (f, f_new) = factor_estimates(svd, &self.x_new, max_r, self.t, self.n);
        let qtf = qr.q.tr_mul(&f);
        let f_tilde = &f - &qr.q * &qtf;
        let a = f_new - qtf.tr_mul(&self.control_direction);
        let b = f_tilde.tr_mul(&self.y);
        let (l, ok) = prefix_qr_factor(&f_tilde);
        let usable = ok.min(max_r);
        let z = forward_substitute(&l, b.as_slice(), usable);
        let q = forward_substitute(&l, a.as_slice(), usable);
        let mut acc = self.base;
        Ok(z.iter().zip(&q).map(|(zi, qi)| {
            acc += zi * qi;
            acc
        }).collect())
    }
}
