//! Small dense helpers shared by the forecasters and the Monte Carlo kernels.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative pivot tolerance used to declare a Gram matrix singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Lower Cholesky factor of the leading block of a symmetric matrix.
///
/// Factorisation proceeds column by column and stops at the first pivot that
/// falls below `PIVOT_TOL` times the largest diagonal entry. The returned count
/// is the size of the leading block that was factored successfully; the
/// leading `j x j` block of the factor is the Cholesky factor of the leading
/// `j x j` block of `g` for every `j` up to that count.
pub fn prefix_cholesky(g: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let n = g.nrows();
    debug_assert_eq!(n, g.ncols());
    let mut l = DMatrix::<f64>::zeros(n, n);
    let max_diag = (0..n).map(|i| g[(i, i)]).fold(0.0_f64, f64::max);
    if !(max_diag > 0.0) || !max_diag.is_finite() {
        return (l, 0);
    }
    let tol = PIVOT_TOL * max_diag;
    for j in 0..n {
        let mut pivot = g[(j, j)];
        for p in 0..j {
            pivot -= l[(j, p)] * l[(j, p)];
        }
        if !(pivot > tol) || !pivot.is_finite() {
            return (l, j);
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    (l, n)
}

/// Lower-triangular `L` with `L L' = A'A`, taken from a QR factorization of
/// `A` so that the condition number is not squared.
///
/// As with [`prefix_cholesky`], the leading `j x j` block of `L` factors the
/// Gram matrix of the first `j` columns. The count stops at the first column
/// whose residual norm falls below `1e-10` times the largest column norm.
pub fn prefix_qr_factor(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (rows, cols) = a.shape();
    let scale = (0..cols).map(|j| a.column(j).norm()).fold(0.0_f64, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return (DMatrix::zeros(cols, cols), 0);
    }
    let r = a.clone().qr().r();
    let usable = rows.min(cols);
    let ok = (0..usable).take_while(|&j| r[(j, j)].abs() > 1e-10 * scale).count();
    let mut upper = DMatrix::zeros(cols, cols);
    upper.rows_mut(0, usable).copy_from(&r.rows(0, usable));
    (upper.transpose(), ok)
}

/// Solves `L z = b` for the leading `n x n` block of a lower-triangular `L`.
pub fn forward_substitute(l: &DMatrix<f64>, b: &[f64], n: usize) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= l[(i, p)] * z[p];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Solves `L' z = b` for a lower-triangular `L`.
pub fn backward_substitute_transposed(l: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in (i + 1)..n {
            s -= l[(p, i)] * z[p];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Solves a symmetric positive definite system, failing if it is numerically singular.
pub fn spd_solve(g: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (l, ok) = prefix_cholesky(g);
    if ok < g.nrows() {
        return Err(Error::SingularDesign(format!(
            "Gram matrix of order {} lost positive definiteness at pivot {}",
            g.nrows(),
            ok + 1
        )));
    }
    let z = forward_substitute(&l, b.as_slice(), g.nrows());
    Ok(DVector::from_vec(backward_substitute_transposed(&l, &z)))
}

/// Thin QR of a design matrix that must have full column rank.
#[derive(Debug, Clone)]
pub struct FullRankQr {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl FullRankQr {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = a.shape();
        if cols > rows {
            return Err(Error::SingularDesign(format!("{cols} regressors but only {rows} observations")));
        }
        let qr = a.clone().qr();
        let r = qr.r();
        let q = qr.q();
        let scale = (0..cols).map(|j| a.column(j).norm()).fold(0.0_f64, f64::max);
        for j in 0..cols {
            if !(r[(j, j)].abs() > 1e-10 * scale) {
                return Err(Error::SingularDesign(format!("column {} is numerically dependent on earlier columns", j + 1)));
            }
        }
        Ok(Self { q, r })
    }

    /// Least squares coefficients of `y` on the factored design.
    pub fn coefficients(&self, y: &DVector<f64>) -> DVector<f64> {
        let qty = self.q.tr_mul(y);
        self.r
            .solve_upper_triangular(&qty)
            .expect("diagonal of R was checked to be nonzero")
    }

    /// Solves `R' c = v`.
    pub fn solve_r_transpose(&self, v: &DVector<f64>) -> DVector<f64> {
        self.r
            .tr_solve_upper_triangular(v)
            .expect("diagonal of R was checked to be nonzero")
    }
}

/// Least squares forecast `x_new' (A'A)^{-1} A' y`.
pub fn ols_forecast(a: &DMatrix<f64>, y: &DVector<f64>, x_new: &DVector<f64>) -> Result<f64> {
    let qr = FullRankQr::new(a)?;
    Ok(x_new.dot(&qr.coefficients(y)))
}
