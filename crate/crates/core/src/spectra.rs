//! Scaled singular value decomposition of a predictor panel and the shrinkage
//! profiles the three forecasters apply to its spectrum.
//!
//! For a `T x N` panel `X` the decomposition is taken of `Z = X / sqrt(N T)`.
//! Only the thin factors (`m = min(T, N)` columns) are kept. Writing
//! `Z = U D V'`, every forecast in [`crate::forecasters`] can be written as
//! `sum_i w_i (u_i' y)(v_i' x_new) / (sqrt(NT) d_i)` plus, for random
//! projections, off-diagonal terms whose expectation vanishes. The weights
//! `w_i` are the shrinkage profile:
//!
//! | method | weight on direction `i` |
//! |--------|-------------------------|
//! | PCA(r) | `1{i <= r}` |
//! | ridge(k) | `d_i^2 / (d_i^2 + 1/k)` |
//! | RP(k) | `d_i^2 [E_R R (R' D^2 R)^{-1} R']_ii` |
//!
//! The random projection weights have no closed form; [`rp_shrinkage_mc`]
//! estimates them by Monte Carlo and [`rp_weight_bounds`] gives the analytic
//! sandwich they must satisfy.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{forward_substitute, prefix_qr_factor};
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Draws regenerated for a single Monte Carlo index before giving up.
pub const MAX_DRAW_RETRIES: usize = 100;

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-12;

const DRAW_CHUNK: usize = 1024;

/// A `T x N` predictor panel (rows are time periods, columns are series).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelMatrix {
    values: DMatrix<f64>,
}

impl PanelMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 || values.ncols() < 1 {
            return Err(Error::data(format!(
                "panel must have at least 2 rows and 1 column, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::data(format!("non-finite entry at row {r}, column {c}")));
        }
        Ok(Self { values })
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::data(format!("expected {} values for a {rows}x{cols} panel, got {}", rows * cols, data.len())));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    /// `sqrt(N T)`, the factor that maps `X` to `Z`.
    pub fn scale(&self) -> f64 {
        ((self.n_rows() * self.n_cols()) as f64).sqrt()
    }
}

/// Thin SVD `Z = U diag(d) V'` of the rescaled panel.
#[derive(Debug, Clone)]
pub struct ScaledSvd {
    u: DMatrix<f64>,
    d: DVector<f64>,
    v: DMatrix<f64>,
    scale: f64,
}

impl ScaledSvd {
    /// Left singular vectors, `T x m`.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Singular values of `Z`, nonincreasing.
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    /// Right singular vectors, `N x m`.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }

    /// `sqrt(N T)` of the source panel.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of singular values above `RANK_TOL * d_1`.
    pub fn numerical_rank(&self) -> usize {
        let d1 = self.d.get(0).copied().unwrap_or(0.0);
        if d1 <= 0.0 {
            return 0;
        }
        self.d.iter().take_while(|&&di| di > RANK_TOL * d1).count()
    }

    /// `U diag(d) V'`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut ud = self.u.clone();
        for (j, mut col) in ud.column_iter_mut().enumerate() {
            col *= self.d[j];
        }
        ud * self.v.transpose()
    }

    /// Builds a decomposition from explicit factors, applying the same sign
    /// convention as [`scaled_svd`]. Intended for constructing test instances
    /// with a prescribed spectrum.
    pub fn from_parts(u: DMatrix<f64>, d: DVector<f64>, v: DMatrix<f64>, scale: f64) -> Result<Self> {
        let m = d.len();
        if u.ncols() != m || v.ncols() != m {
            return Err(Error::arg("u, d and v must agree on the number of components"));
        }
        if d.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || d.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::arg("singular values must be finite, nonnegative and nonincreasing"));
        }
        let mut svd = Self { u, d, v, scale };
        svd.apply_sign_convention();
        Ok(svd)
    }

    fn apply_sign_convention(&mut self) {
        for j in 0..self.m() {
            let col = self.v.column(j);
            let mut best = 0;
            for i in 1..col.len() {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            if col[best] < 0.0 {
                self.v.column_mut(j).neg_mut();
                self.u.column_mut(j).neg_mut();
            }
        }
    }
}

/// Thin SVD of `X / sqrt(N T)` with singular values sorted nonincreasing and
/// the largest-magnitude entry of each right singular vector made nonnegative.
pub fn scaled_svd(x: &PanelMatrix) -> Result<ScaledSvd> {
    let scale = x.scale();
    let z = x.values() / scale;
    let m = x.n_rows().min(x.n_cols());
    let svd = nalgebra::linalg::SVD::try_new(z, true, true, f64::EPSILON, 1000 + 200 * m)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V'");
    let sv = svd.singular_values;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let d = DVector::from_iterator(m, order.iter().map(|&j| sv[j].max(0.0)));
    let u = DMatrix::from_fn(u.nrows(), m, |i, j| u[(i, order[j])]);
    let v = DMatrix::from_fn(v_t.ncols(), m, |i, j| v_t[(order[j], i)]);

    let mut out = ScaledSvd { u, d, v, scale };
    out.apply_sign_convention();
    Ok(out)
}

/// Which forecaster a shrinkage profile describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ProfileMethod {
    Pca { r: usize },
    Ridge { k: f64 },
    RandomProjection { k: usize, draws: usize, seed: u64 },
}

/// Weights applied to each spectral direction of `Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkageProfile {
    pub method: ProfileMethod,
    pub weights: Vec<f64>,
}

/// Hard thresholding: keep the leading `r` directions.
pub fn pca_shrinkage(svd: &ScaledSvd, r: usize) -> Result<ShrinkageProfile> {
    let m = svd.m();
    if r < 1 || r > m {
        return Err(Error::arg(format!("number of factors must lie in 1..={m}, got {r}")));
    }
    let weights = (0..m).map(|i| if i < r { 1.0 } else { 0.0 }).collect();
    Ok(ShrinkageProfile { method: ProfileMethod::Pca { r }, weights })
}

/// Soft thresholding by the ridge penalty `N T / k`: `w_i = d_i^2 / (d_i^2 + 1/k)`.
pub fn ridge_shrinkage(svd: &ScaledSvd, k: f64) -> Result<ShrinkageProfile> {
    if !(k > 0.0) {
        return Err(Error::arg(format!("ridge parameter k must be positive, got {k}")));
    }
    let weights = svd.d().iter().map(|&d| ridge_weight(d, k)).collect();
    Ok(ShrinkageProfile { method: ProfileMethod::Ridge { k }, weights })
}

#[inline]
pub(crate) fn ridge_weight(d: f64, k: f64) -> f64 {
    let d2 = d * d;
    // d^2 / (d^2 + 1/k) written to stay exact as k -> infinity
    k * d2 / (k * d2 + 1.0)
}

/// Monte Carlo estimate of a matrix-valued expectation.
#[derive(Debug, Clone)]
pub struct McMatrixEstimate {
    pub mean: DMatrix<f64>,
    pub std_err: DMatrix<f64>,
    pub draws: usize,
    /// Singular draws that had to be regenerated.
    pub regenerated: usize,
}

/// Running mean and variance per matrix entry, accumulated in draw order.
struct EntryAccumulator {
    n: usize,
    mean: DMatrix<f64>,
    m2: DMatrix<f64>,
}

impl EntryAccumulator {
    fn new(rows: usize, cols: usize) -> Self {
        Self { n: 0, mean: DMatrix::zeros(rows, cols), m2: DMatrix::zeros(rows, cols) }
    }

    fn push(&mut self, x: &DMatrix<f64>) {
        self.n += 1;
        let n = self.n as f64;
        for ((mu, m2), &xi) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x.iter()) {
            let delta = xi - *mu;
            *mu += delta / n;
            *m2 += delta * (xi - *mu);
        }
    }

    fn finish(self, regenerated: usize) -> McMatrixEstimate {
        let n = self.n as f64;
        let std_err = self.m2.map(|m2| if self.n > 1 { (m2 / (n - 1.0) / n).sqrt() } else { f64::NAN });
        McMatrixEstimate { mean: self.mean, std_err, draws: self.n, regenerated }
    }
}

/// Averages `draw_fn` over `draws` indices. Each index gets its own random
/// stream `(seed, index, attempt)`; a `None` result is regenerated from the
/// next attempt up to [`MAX_DRAW_RETRIES`] times. Draws are evaluated in
/// parallel chunks and reduced in index order, so the result is bitwise
/// independent of the worker count.
pub(crate) fn mc_matrix_mean<F>(
    rows: usize,
    cols: usize,
    draws: usize,
    seed: u64,
    context: &str,
    draw_fn: F,
) -> Result<McMatrixEstimate>
where
    F: Fn(&mut StreamRng) -> Option<DMatrix<f64>> + Sync,
{
    let mut acc = EntryAccumulator::new(rows, cols);
    let mut regenerated = 0;
    let mut start = 0;
    while start < draws {
        let end = (start + DRAW_CHUNK).min(draws);
        let chunk: Vec<Result<(DMatrix<f64>, usize)>> = (start..end)
            .into_par_iter()
            .map(|ix| {
                for attempt in 0..=MAX_DRAW_RETRIES {
                    let mut rng = rng::stream(seed, &[ix as u64, attempt as u64]);
                    if let Some(x) = draw_fn(&mut rng) {
                        return Ok((x, attempt));
                    }
                }
                Err(Error::RetriesExhausted { attempts: MAX_DRAW_RETRIES, context: format!("{context}, draw {ix}") })
            })
            .collect();
        for item in chunk {
            let (x, retries) = item?;
            regenerated += retries;
            acc.push(&x);
        }
        start = end;
    }
    Ok(acc.finish(regenerated))
}

/// One draw of `R (R' D^2 R)^{-1} R'` for diagonal `D = diag(d)` and an
/// `m x k` standard normal `R`; `None` when `R' D^2 R` is numerically singular.
fn projected_inverse_draw(d: &[f64], k: usize, rng: &mut StreamRng) -> Option<DMatrix<f64>> {
    let m = d.len();
    let r = rng::standard_normal_matrix(rng, m, k);
    let mut dr = r.clone();
    for (mut row, &di) in dr.row_iter_mut().zip(d) {
        row *= di;
    }
    let (l, ok) = prefix_qr_factor(&dr);
    if ok < k {
        return None;
    }
    // Q = L^{-1} R', so R (R'D^2R)^{-1} R' = Q'Q
    let mut q = DMatrix::<f64>::zeros(k, m);
    for i in 0..m {
        let row: Vec<f64> = r.row(i).iter().copied().collect();
        let z = forward_substitute(&l, &row, k);
        for (p, zp) in z.into_iter().enumerate() {
            q[(p, i)] = zp;
        }
    }
    Some(q.tr_mul(&q))
}

fn check_draws(draws: usize, min: usize) -> Result<()> {
    if draws < min {
        return Err(Error::arg(format!("at least {min} Monte Carlo draws required, got {draws}")));
    }
    Ok(())
}

/// Monte Carlo estimate of `E_R[R (R' D^2 R)^{-1} R']` for `D = diag(d)` and
/// an `m x k` standard normal `R`.
///
/// Requires `1 <= k <= m` and at least `k` strictly positive entries in `d`.
pub fn rp_projection_expectation(d: &[f64], k: usize, draws: usize, seed: u64) -> Result<McMatrixEstimate> {
    let m = d.len();
    if k < 1 || k > m {
        return Err(Error::arg(format!("subspace dimension must lie in 1..={m}, got {k}")));
    }
    if d.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::arg("spectrum must be finite and nonnegative"));
    }
    let d1 = d.iter().copied().fold(0.0_f64, f64::max);
    let positive = d.iter().filter(|&&x| x > RANK_TOL * d1).count();
    if positive < k {
        return Err(Error::Rank { requested: k, rank: positive });
    }
    check_draws(draws, 2)?;
    mc_matrix_mean(m, m, draws, seed, "R'D^2R", |rng| projected_inverse_draw(d, k, rng))
}

/// Monte Carlo random-projection weights with their standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct RpShrinkageEstimate {
    pub profile: ShrinkageProfile,
    pub std_errors: Vec<f64>,
    pub regenerated: usize,
}

/// Implicit random-projection shrinkage `w_i = d_i^2 [E_R R (R'D^2R)^{-1} R']_ii`,
/// estimated over `draws` Gaussian projections.
pub fn rp_shrinkage_mc(svd: &ScaledSvd, k: usize, draws: usize, seed: u64) -> Result<RpShrinkageEstimate> {
    let m = svd.m();
    if k < 1 || k + 3 > m {
        return Err(Error::arg(format!("subspace dimension must lie in 1..={} for m = {m}", m.saturating_sub(3))));
    }
    check_draws(draws, 100)?;
    rp_shrinkage_unchecked(svd.d().as_slice(), k, draws, seed)
}

/// Same estimator as [`rp_shrinkage_mc`] without the `k <= m - 3` and draw
/// count requirements (needed for the square case `k = m`).
pub fn rp_shrinkage_unchecked(d: &[f64], k: usize, draws: usize, seed: u64) -> Result<RpShrinkageEstimate> {
    let d_owned = d.to_vec();
    let m = d.len();
    if k < 1 || k > m {
        return Err(Error::arg(format!("subspace dimension must lie in 1..={m}, got {k}")));
    }
    let est = mc_matrix_mean(m, 1, draws, seed, "R'D^2R", |rng| {
        projected_inverse_draw(&d_owned, k, rng)
            .map(|p| DMatrix::from_fn(m, 1, |i, _| d_owned[i] * d_owned[i] * p[(i, i)]))
    })?;
    Ok(RpShrinkageEstimate {
        profile: ShrinkageProfile {
            method: ProfileMethod::RandomProjection { k, draws, seed },
            weights: est.mean.iter().copied().collect(),
        },
        std_errors: est.std_err.iter().copied().collect(),
        regenerated: est.regenerated,
    })
}

/// Analytic bounds on a random-projection weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Lower and upper bounds on `w_i` for squared singular values `d_squared`
/// (nonincreasing, all positive) and subspace dimension `k < m - 2`:
///
/// `1 - 1/(1 + (k-2) d_i / sum_{j != i} d_j) <= w_i <= 1 - 1/(1 + (d_i/d_m) k/(m-k-2))`.
///
/// `i` is zero-based. For `k <= 2` the lower bound is 0: it rests on
/// `E[(r'r)^{-1}] = 1/(k-2)`, which diverges there.
pub fn rp_weight_bounds(d_squared: &[f64], k: usize, i: usize) -> Result<WeightBounds> {
    let m = d_squared.len();
    if k + 2 >= m {
        return Err(Error::arg(format!("bounds need k < m - 2, got k = {k}, m = {m}")));
    }
    validate_squared_spectrum(d_squared, i)?;
    let lower = lower_weight_bound(d_squared, k, i);
    let ratio = d_squared[i] / d_squared[m - 1];
    let upper = 1.0 - 1.0 / (1.0 + ratio * k as f64 / (m - k - 2) as f64);
    Ok(WeightBounds { lower, upper })
}

/// Bounds valid for every `1 <= k <= m`: the analytic pair where it is
/// defined, otherwise the lower bound with the trivial upper bound 1 (each
/// weight is a diagonal entry of an orthogonal projection).
pub fn rp_weight_bounds_extended(d_squared: &[f64], k: usize, i: usize) -> Result<WeightBounds> {
    let m = d_squared.len();
    if k + 2 < m {
        return rp_weight_bounds(d_squared, k, i);
    }
    if k < 1 || k > m {
        return Err(Error::arg(format!("subspace dimension must lie in 1..={m}, got {k}")));
    }
    validate_squared_spectrum(d_squared, i)?;
    Ok(WeightBounds { lower: lower_weight_bound(d_squared, k, i), upper: 1.0 })
}

fn validate_squared_spectrum(d_squared: &[f64], i: usize) -> Result<()> {
    if i >= d_squared.len() {
        return Err(Error::arg(format!("index {i} out of range for spectrum of length {}", d_squared.len())));
    }
    if d_squared.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::arg("squared spectrum must be finite and strictly positive"));
    }
    if d_squared.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::arg("squared spectrum must be nonincreasing"));
    }
    Ok(())
}

fn lower_weight_bound(d_squared: &[f64], k: usize, i: usize) -> f64 {
    if k <= 2 {
        return 0.0;
    }
    let rest: f64 = d_squared.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).sum();
    1.0 - 1.0 / (1.0 + (k - 2) as f64 * d_squared[i] / rest)
}

/// Largest off-diagonal entry of the Monte Carlo estimate of
/// `E_R[R (R'D^2R)^{-1} R']`, which is zero in expectation.
#[derive(Debug, Clone, Serialize)]
pub struct OffDiagonalCheck {
    pub max_abs: f64,
    pub std_err_at_max: f64,
    /// Largest `|estimate| / SE` over all off-diagonal entries.
    pub max_z: f64,
    pub passed: bool,
}

/// Verifies that every off-diagonal entry is within `4` standard errors of 0.
pub fn offdiag_nullity_check(svd: &ScaledSvd, k: usize, draws: usize, seed: u64) -> Result<OffDiagonalCheck> {
    let est = rp_projection_expectation(svd.d().as_slice(), k, draws, seed)?;
    Ok(offdiag_summary(&est, 4.0))
}

pub(crate) fn offdiag_summary(est: &McMatrixEstimate, z_limit: f64) -> OffDiagonalCheck {
    let m = est.mean.nrows();
    let (mut max_abs, mut se_at_max, mut max_z) = (0.0_f64, 0.0, 0.0_f64);
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let x = est.mean[(i, j)].abs();
            let se = est.std_err[(i, j)];
            if x >= max_abs {
                max_abs = x;
                se_at_max = se;
            }
            let z = if se > 0.0 { x / se } else if x == 0.0 { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(z);
        }
    }
    OffDiagonalCheck { max_abs, std_err_at_max: se_at_max, max_z, passed: max_z <= z_limit }
}

/// Comparison of `E_R[R (R'Z'ZR)^{-1} R']` estimated directly against
/// `V E_R[R (R'D'DR)^{-1} R'] V'`.
#[derive(Debug, Clone)]
pub struct ExpectationSwitchCheck {
    pub direct: McMatrixEstimate,
    /// `V E[.] V'` and the entrywise standard errors of that rotated estimate.
    pub rotated_mean: DMatrix<f64>,
    pub rotated_std_err: DMatrix<f64>,
    /// Largest `|direct - rotated| / sqrt(SE_direct^2 + SE_rotated^2)`.
    pub max_z: f64,
    pub passed: bool,
}

/// Checks the expectation switch identity entrywise within 4 combined
/// standard errors. Both sides use independent streams derived from `seed`.
/// Requires `N <= T` so that `V` is square.
pub fn expectation_switch_check(x: &PanelMatrix, k: usize, draws: usize, seed: u64) -> Result<ExpectationSwitchCheck> {
    let n = x.n_cols();
    if n > x.n_rows() {
        return Err(Error::arg("expectation switch check needs N <= T so that V is square"));
    }
    let svd = scaled_svd(x)?;
    if svd.numerical_rank() < k || k < 1 {
        return Err(Error::Rank { requested: k, rank: svd.numerical_rank() });
    }
    check_draws(draws, 2)?;
    let z = x.values() / svd.scale();
    let direct = mc_matrix_mean(n, n, draws, rng::derive_seed(seed, &[0]), "R'Z'ZR", |rng| {
        let r = rng::standard_normal_matrix(rng, n, k);
        let (l, ok) = prefix_qr_factor(&(&z * &r));
        if ok < k {
            return None;
        }
        let mut q = DMatrix::<f64>::zeros(k, n);
        for i in 0..n {
            let row: Vec<f64> = r.row(i).iter().copied().collect();
            for (p, zp) in forward_substitute(&l, &row, k).into_iter().enumerate() {
                q[(p, i)] = zp;
            }
        }
        Some(q.tr_mul(&q))
    })?;
    let d: Vec<f64> = svd.d().iter().copied().collect();
    let v = svd.v().clone();
    let rotated = mc_matrix_mean(n, n, draws, rng::derive_seed(seed, &[1]), "R'D^2R", |rng| {
        projected_inverse_draw(&d, k, rng).map(|p| &v * p * v.transpose())
    })?;
    let mut max_z = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let diff = (direct.mean[(i, j)] - rotated.mean[(i, j)]).abs();
            let se = direct.std_err[(i, j)].hypot(rotated.std_err[(i, j)]);
            let z = if se > 0.0 { diff / se } else if diff <= 1e-12 { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(z);
        }
    }
    Ok(ExpectationSwitchCheck {
        rotated_mean: rotated.mean,
        rotated_std_err: rotated.std_err,
        direct,
        max_z,
        passed: max_z <= 4.0,
    })
}
