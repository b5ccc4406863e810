//! The `diagnose` command: shrinkage profiles and Monte Carlo checks for a
//! panel with a prescribed spectrum.

use anyhow::Result;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use diffuse_core::rng::{derive_seed, standard_normal_matrix, stream};
use diffuse_core::spectra::{
    expectation_switch_check, offdiag_nullity_check, pca_shrinkage, ridge_shrinkage, rp_shrinkage_unchecked, rp_weight_bounds_extended, scaled_svd, PanelMatrix,
};

use crate::config::DiagnoseConfig;
use crate::output::{num, OutputDir, RunError};

pub const PROFILES_FILE: &str = "profiles.csv";
pub const CHECKS_FILE: &str = "checks.json";

/// Monte Carlo estimates may sit this many standard errors outside the bounds.
pub const BOUND_SE_TOLERANCE: f64 = 4.0;

/// `X = sqrt(NT) U diag(d) V'` with Haar-distributed `U` (`T x N`) and `V`.
pub fn panel_with_spectrum(t: usize, n: usize, d: &[f64], seed: u64) -> Result<PanelMatrix> {
    let mut rng = stream(seed, &[0]);
    let orthonormal = |g: DMatrix<f64>| -> DMatrix<f64> {
        let cols = g.ncols();
        let qr = g.qr();
        // Fix column signs so the factor is Haar distributed.
        let signs = qr.r().diagonal().map(|x| if x < 0.0 { -1.0 } else { 1.0 });
        let mut q = qr.q().columns(0, cols).into_owned();
        for (j, s) in signs.iter().enumerate() {
            q.column_mut(j).scale_mut(*s);
        }
        q
    };
    let u = orthonormal(standard_normal_matrix(&mut rng, t, n));
    let v = orthonormal(standard_normal_matrix(&mut rng, n, n));
    let scale = ((n * t) as f64).sqrt();
    let x = u * DMatrix::from_diagonal(&DVector::from_column_slice(d)) * v.transpose() * scale;
    Ok(PanelMatrix::new(x)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub index: usize,
    pub d: f64,
    pub pca: f64,
    pub ridge: f64,
    pub rp: f64,
    pub rp_std_err: f64,
    pub lower: f64,
    pub upper: f64,
    /// `analytic` when both bounds apply, `extended` when only the trivial upper bound does.
    pub bound_kind: &'static str,
    pub within_bounds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    pub offdiag_max_abs: f64,
    pub offdiag_max_z: f64,
    pub offdiag_passed: bool,
    pub expectation_switch_max_z: f64,
    pub expectation_switch_passed: bool,
    pub bounds_passed: bool,
    pub regenerated_draws: usize,
    pub passed: bool,
}

pub fn diagnose(cfg: &DiagnoseConfig) -> Result<(Vec<ProfileRow>, Checks)> {
    let x = panel_with_spectrum(cfg.t, cfg.n, &cfg.singular_values, cfg.master_seed)?;
    let svd = scaled_svd(&x)?;
    let d: Vec<f64> = svd.d().iter().copied().collect();
    let pca = pca_shrinkage(&svd, cfg.pca_r.unwrap_or(cfg.k))?;
    let ridge = ridge_shrinkage(&svd, cfg.ridge_k.unwrap_or(cfg.k as f64))?;
    let rp = rp_shrinkage_unchecked(&d, cfg.k, cfg.draws, derive_seed(cfg.master_seed, &[1]))?;
    let d2: Vec<f64> = d.iter().map(|v| v * v).collect();
    let m = d.len();
    let mut rows = Vec::with_capacity(m);
    for (i, &di) in d.iter().enumerate() {
        let b = rp_weight_bounds_extended(&d2, cfg.k, i)?;
        let (w, se) = (rp.profile.weights[i], rp.std_errors[i]);
        rows.push(ProfileRow {
            index: i + 1,
            d: di,
            pca: pca.weights[i],
            ridge: ridge.weights[i],
            rp: w,
            rp_std_err: se,
            lower: b.lower,
            upper: b.upper,
            bound_kind: if cfg.k + 2 < m { "analytic" } else { "extended" },
            within_bounds: w >= b.lower - BOUND_SE_TOLERANCE * se && w <= b.upper + BOUND_SE_TOLERANCE * se,
        });
    }
    let off = offdiag_nullity_check(&svd, cfg.k, cfg.draws, derive_seed(cfg.master_seed, &[2]))?;
    let switch = expectation_switch_check(&x, cfg.k, cfg.draws, derive_seed(cfg.master_seed, &[3]))?;
    let bounds_passed = rows.iter().all(|r| r.within_bounds);
    let checks = Checks {
        offdiag_max_abs: off.max_abs,
        offdiag_max_z: off.max_z,
        offdiag_passed: off.passed,
        expectation_switch_max_z: switch.max_z,
        expectation_switch_passed: switch.passed,
        bounds_passed,
        regenerated_draws: rp.regenerated + switch.direct.regenerated,
        passed: off.passed && switch.passed && bounds_passed,
    };
    Ok((rows, checks))
}

pub fn run(cfg: &DiagnoseConfig, digest: &str, out: &mut OutputDir) -> Result<Vec<RunError>> {
    let (rows, checks) = diagnose(cfg)?;
    out.write_csv(PROFILES_FILE, |w| {
        w.write_record(["config_digest", "master_seed", "index", "d", "pca", "ridge", "rp", "rp_std_err", "lower", "upper", "bound_kind", "within_bounds"])?;
        for r in &rows {
            w.write_record([
                digest.to_string(),
                cfg.master_seed.to_string(),
                r.index.to_string(),
                num(r.d),
                num(r.pca),
                num(r.ridge),
                num(r.rp),
                num(r.rp_std_err),
                num(r.lower),
                num(r.upper),
                r.bound_kind.to_string(),
                r.within_bounds.to_string(),
            ])?;
        }
        Ok(())
    })?;
    out.write_json(CHECKS_FILE, &checks)?;
    Ok(vec![])
}
