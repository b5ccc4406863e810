//! The `mc` command: Monte Carlo MSFE over a design of `(N, T, alpha, rho)` cells.

use anyhow::Result;

use diffuse_core::simulation::{run_monte_carlo, McResult};

use crate::config::{CellSpec, McConfig};
use crate::output::{num, OutputDir, RunError};

pub const RESULTS_FILE: &str = "mc_results.csv";
pub const GRID_FILE: &str = "mc_grid.csv";
pub const ERRORS_FILE: &str = "mc_squared_errors.csv";

/// Runs every cell in order; replications within a cell run in parallel.
/// A failing cell is reported and skipped.
pub fn run(cfg: &McConfig, digest: &str, out: &mut OutputDir) -> Result<Vec<RunError>> {
    let cells = cfg.all_cells();
    let mut results = Vec::with_capacity(cells.len());
    let mut errors = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let dgp = cfg.dgp(i, cell);
        match run_monte_carlo(&dgp, &cfg.methods, &cfg.mc_grid(&dgp), cfg.retain_errors) {
            Ok(r) => results.push((i, *cell, r)),
            Err(e) => errors.push(RunError::new(cell_scope(i, cell), e)),
        }
    }
    write_results(cfg, digest, &results, out)?;
    write_grid(cfg, digest, &results, out)?;
    if cfg.retain_errors {
        write_squared_errors(&results, out)?;
    }
    Ok(errors)
}

fn cell_scope(i: usize, c: &CellSpec) -> String {
    format!("cell {i} (n={}, t={}, alpha={}, rho={})", c.n, c.t, c.alpha, c.rho)
}

type CellResult = (usize, CellSpec, McResult);

fn cell_fields(i: usize, c: &CellSpec) -> Vec<String> {
    vec![i.to_string(), c.n.to_string(), c.t.to_string(), c.alpha.to_string(), c.rho.to_string()]
}

fn write_results(cfg: &McConfig, digest: &str, results: &[CellResult], out: &mut OutputDir) -> Result<()> {
    out.write_csv(RESULTS_FILE, |w| {
        w.write_record([
            "config_digest",
            "master_seed",
            "cell",
            "n",
            "t",
            "alpha",
            "rho",
            "cell_seed",
            "reps",
            "method",
            "msfe",
            "std_err",
            "best_value",
            "regenerated_draws",
        ])?;
        for (i, cell, r) in results {
            for s in &r.methods {
                let mut row = vec![digest.to_string(), cfg.master_seed.to_string()];
                row.extend(cell_fields(*i, cell));
                row.extend([
                    r.config.master_seed.to_string(),
                    r.reps.to_string(),
                    s.method.label().to_string(),
                    num(s.best.msfe),
                    num(s.best_std_err),
                    num(s.best.value),
                    r.regenerated_draws.to_string(),
                ]);
                w.write_record(&row)?;
            }
        }
        Ok(())
    })
}

fn write_grid(cfg: &McConfig, digest: &str, results: &[CellResult], out: &mut OutputDir) -> Result<()> {
    out.write_csv(GRID_FILE, |w| {
        w.write_record(["config_digest", "master_seed", "cell", "n", "t", "alpha", "rho", "method", "value", "msfe", "std_err", "selected"])?;
        for (i, cell, r) in results {
            for s in &r.methods {
                for (c, value) in s.grid.iter().enumerate() {
                    let mut row = vec![digest.to_string(), cfg.master_seed.to_string()];
                    row.extend(cell_fields(*i, cell));
                    row.extend([
                        s.method.label().to_string(),
                        num(*value),
                        num(s.msfe[c]),
                        num(s.std_err[c]),
                        (c == s.best.index).to_string(),
                    ]);
                    w.write_record(&row)?;
                }
            }
        }
        Ok(())
    })
}

fn write_squared_errors(results: &[CellResult], out: &mut OutputDir) -> Result<()> {
    out.write_csv(ERRORS_FILE, |w| {
        w.write_record(["cell", "method", "value", "rep", "squared_error"])?;
        for (i, _, r) in results {
            let Some(all) = &r.squared_errors else { continue };
            for (s, per_method) in r.methods.iter().zip(all) {
                for (value, per_rep) in s.grid.iter().zip(per_method) {
                    for (rep, e) in per_rep.iter().enumerate() {
                        w.write_record([i.to_string(), s.method.label().to_string(), num(*value), rep.to_string(), num(*e)])?;
                    }
                }
            }
        }
        Ok(())
    })
}
