//! The `empirical` command: rolling-window pseudo out-of-sample forecasts.
//!
//! At each origin every method produces a forecast for each point of its
//! hyperparameter grid. The hyperparameter used at origin `tau` is the one
//! with the smallest cumulative squared error over earlier origins whose
//! outcome is known by `tau`; ties go to the most regularized candidate,
//! which is also the choice at the first origins.

use std::collections::BTreeMap;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;

use diffuse_core::evaluation::{dm_shift, pair_key, win_rate, write_dm_shift_csv, write_win_rate_csv, EvaluationReport, LossPath, MethodTrack, ReportMetadata, WinRate};
use diffuse_core::forecasters::AugmentedForecaster;
use diffuse_core::ingest::{aggregate_to_quarterly, build_design, mapping_groups, match_md_qd_subset, parse_fred_csv, Date, Frequency, MappingTable, TransformedPanel, CONTROL_LAGS};
use diffuse_core::rng::derive_seed;

use crate::config::{parse_month, EmpiricalConfig, EmpiricalMethod, FrequencyExperiment};
use crate::output::{num, OutputDir, RunError};

/// Settings of one rolling-window pass over one panel.
#[derive(Debug, Clone)]
pub struct RollingSpec {
    pub h: usize,
    pub window_len: usize,
    /// First forecast origin (index into the panel dates).
    pub forecast_start: usize,
    /// First origin whose loss is evaluated.
    pub evaluation_start: usize,
    /// Last period whose realization is used; origins stop at `evaluation_end - h`.
    pub evaluation_end: usize,
    pub methods: Vec<EmpiricalMethod>,
    pub max_dimension: usize,
    pub rp_draws: usize,
    /// Log ridge penalties, any order.
    pub log_penalties: Vec<f64>,
}

impl RollingSpec {
    /// Candidate values of `method`, most regularized first.
    pub fn candidates(&self, method: EmpiricalMethod) -> Vec<f64> {
        match method {
            EmpiricalMethod::Pca | EmpiricalMethod::Rp => (1..=self.max_dimension).map(|k| k as f64).collect(),
            EmpiricalMethod::Ridge => {
                let mut v = self.log_penalties.clone();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            }
        }
    }

    fn origins(&self) -> std::ops::RangeInclusive<usize> {
        self.forecast_start..=self.evaluation_end.saturating_sub(self.h)
    }

    fn validate(&self, panel: &TransformedPanel) -> Result<()> {
        ensure!(self.evaluation_end < panel.len(), "evaluation end beyond the sample");
        ensure!(self.forecast_start + self.h <= self.evaluation_end, "no origin has an observed outcome");
        ensure!(self.evaluation_start >= self.forecast_start, "evaluation starts before forecasting");
        ensure!(self.evaluation_start + self.h <= self.evaluation_end, "no evaluated origin");
        Ok(())
    }
}

/// Per-method forecasts over the candidate grid at one origin, with the realized value.
type OriginForecasts = (Vec<Vec<Option<f64>>>, Option<f64>);

/// Forecasts of every grid point at one origin; `None` where the grid point
/// exceeds what the window supports.
fn origin_forecasts(panel: &TransformedPanel, target: &str, spec: &RollingSpec, origin: usize, seed: u64) -> Result<OriginForecasts> {
    let design = build_design(panel, target, spec.h, origin, spec.window_len)?;
    let ts = design.training_set()?;
    let aug = AugmentedForecaster::new(&design.w, &design.w_new, &ts)?;
    let cap = spec.max_dimension.min(design.n_rows().saturating_sub(CONTROL_LAGS + 2));
    let pad = |v: Vec<f64>, len: usize| -> Vec<Option<f64>> {
        let mut out: Vec<Option<f64>> = v.into_iter().map(Some).collect();
        out.resize(len, None);
        out
    };
    let mut per_method = Vec::with_capacity(spec.methods.len());
    for &m in &spec.methods {
        let len = spec.candidates(m).len();
        let f = match m {
            EmpiricalMethod::Pca => {
                let top = cap.min(aug.factor_rank());
                pad(if top == 0 { vec![] } else { aug.pca_path_prefix(top)? }, len)
            }
            EmpiricalMethod::Ridge => {
                let lambdas: Vec<f64> = spec.candidates(m).iter().map(|l| l.exp()).collect();
                pad(aug.ridge_path_by_penalty(&lambdas)?, len)
            }
            EmpiricalMethod::Rp => {
                let top = cap.min(aug.partialled_rank());
                pad(if top == 0 { vec![] } else { aug.rp_path(top, spec.rp_draws, derive_seed(seed, &[origin as u64]))?.mean }, len)
            }
        };
        per_method.push(f);
    }
    Ok((per_method, design.realized))
}

/// Rolling forecasts of one target. Returns one track per method over the
/// evaluated origins.
pub fn rolling_target(panel: &TransformedPanel, target: &str, spec: &RollingSpec, seed: u64) -> Result<Vec<MethodTrack>> {
    spec.validate(panel)?;
    let grids: Vec<Vec<f64>> = spec.methods.iter().map(|&m| spec.candidates(m)).collect();
    let mut cum: Vec<Vec<f64>> = grids.iter().map(|g| vec![0.0; g.len()]).collect();
    let mut history: Vec<OriginForecasts> = Vec::new();
    let mut errors: Vec<Vec<f64>> = vec![vec![]; spec.methods.len()];
    let mut chosen: Vec<Vec<f64>> = vec![vec![]; spec.methods.len()];
    for origin in spec.origins() {
        // The outcome of origin - h is realized at origin.
        if origin >= spec.forecast_start + spec.h {
            let (past, realized) = &history[origin - spec.h - spec.forecast_start];
            let y = realized.with_context(|| format!("{target} is missing at {}", panel.dates[origin]))?;
            for (mi, fs) in past.iter().enumerate() {
                for (c, f) in fs.iter().enumerate() {
                    cum[mi][c] += f.map_or(f64::INFINITY, |f| (f - y).powi(2));
                }
            }
        }
        let (now, realized) = origin_forecasts(panel, target, spec, origin, seed)?;
        if origin >= spec.evaluation_start {
            let y = realized.with_context(|| format!("{target} is missing at {}", panel.dates[origin + spec.h]))?;
            for (mi, fs) in now.iter().enumerate() {
                let best = fs
                    .iter()
                    .enumerate()
                    .filter_map(|(c, f)| f.map(|f| (c, f)))
                    .min_by(|a, b| cum[mi][a.0].total_cmp(&cum[mi][b.0]).then(a.0.cmp(&b.0)))
                    .with_context(|| format!("no feasible {} forecast at {}", spec.methods[mi].label(), panel.dates[origin]))?;
                errors[mi].push((best.1 - y).powi(2));
                chosen[mi].push(grids[mi][best.0]);
            }
        }
        history.push((now, realized));
    }
    spec.methods
        .iter()
        .zip(errors.into_iter().zip(chosen))
        .map(|(m, (e, hp))| Ok(MethodTrack { path: LossPath::from_start(target, m.label(), spec.evaluation_start, e)?, hyperparameters: hp }))
        .collect()
}

/// Runs `targets` in parallel. Results are collected in target order; a
/// failing target is reported and left out.
pub fn rolling_panel(panel: &TransformedPanel, targets: &[String], spec: &RollingSpec, seed: u64, scope: &str) -> (Vec<MethodTrack>, Vec<RunError>) {
    let results: Vec<Result<Vec<MethodTrack>>> = targets
        .par_iter()
        .map(|t| {
            let ti = panel.index_of(t).with_context(|| format!("target {t} not in panel"))?;
            rolling_target(panel, t, spec, derive_seed(seed, &[ti as u64]))
        })
        .collect();
    let mut tracks = Vec::new();
    let mut errors = Vec::new();
    for (t, r) in targets.iter().zip(results) {
        match r {
            Ok(ts) => tracks.extend(ts),
            Err(e) => errors.push(RunError::new(format!("{scope}, target {t}"), format!("{e:#}"))),
        }
    }
    (tracks, errors)
}

/// DM pairs of every method against PCA.
fn pairs(methods: &[EmpiricalMethod]) -> Vec<(String, String)> {
    if !methods.contains(&EmpiricalMethod::Pca) {
        return vec![];
    }
    methods.iter().filter(|&&m| m != EmpiricalMethod::Pca).map(|m| (m.label().to_string(), "pca".to_string())).collect()
}

/// Share of variables on which PCA beats each other method.
fn pca_win_rates(report: &EvaluationReport, methods: &[EmpiricalMethod]) -> Result<Vec<WinRate>> {
    let msfes: BTreeMap<String, BTreeMap<String, f64>> =
        report.variables.iter().map(|(v, r)| (v.clone(), r.methods.iter().map(|(m, x)| (m.clone(), x.msfe)).collect())).collect();
    pairs(methods).iter().map(|(m, _)| Ok(win_rate(&msfes, "pca", m)?)).collect()
}

fn write_losses(out: &mut OutputDir, name: &str, digest: &str, seed: u64, panel: &TransformedPanel, tracks: &[MethodTrack]) -> Result<()> {
    out.write_csv(name, |w| {
        w.write_record(["config_digest", "master_seed", "variable", "method", "origin", "squared_error", "hyperparameter"])?;
        for t in tracks {
            for ((time, e), hp) in t.path.times().iter().zip(t.path.squared_errors()).zip(&t.hyperparameters) {
                w.write_record([digest, &seed.to_string(), t.path.variable(), t.path.method(), &panel.dates[*time].label(), &num(*e), &num(*hp)])?;
            }
        }
        Ok(())
    })
}

fn write_report(out: &mut OutputDir, suffix: &str, report: &EvaluationReport) -> Result<()> {
    let mut json = report.to_json()?;
    json.push('\n');
    out.write(&format!("report_{suffix}.json"), json.as_bytes())?;
    out.write_with(&format!("msfe_{suffix}.csv"), |b| report.write_msfe_csv(b))?;
    out.write_with(&format!("dm_{suffix}.csv"), |b| report.write_dm_csv(b))?;
    Ok(())
}

/// First period dated at or after `month`.
fn first_on_or_after(panel: &TransformedPanel, month: Date) -> Result<usize> {
    panel.dates.iter().position(|d| d.month_index() >= month.month_index()).with_context(|| format!("{} is after the end of the sample", month.label()))
}

/// Last period dated at or before `month`.
fn last_on_or_before(panel: &TransformedPanel, month: Date) -> Result<usize> {
    panel.dates.iter().rposition(|d| d.month_index() <= month.month_index()).with_context(|| format!("{} is before the start of the sample", month.label()))
}

struct Dates {
    forecast_start: Date,
    evaluation_start: Date,
    evaluation_end: Option<Date>,
}

impl Dates {
    fn spec(&self, panel: &TransformedPanel, cfg: &EmpiricalConfig, h: usize, window_len: usize) -> Result<RollingSpec> {
        Ok(RollingSpec {
            h,
            window_len,
            forecast_start: first_on_or_after(panel, self.forecast_start)?,
            evaluation_start: first_on_or_after(panel, self.evaluation_start)?,
            evaluation_end: match self.evaluation_end {
                Some(d) => last_on_or_before(panel, d)?,
                None => panel.len() - 1,
            },
            methods: cfg.methods.clone(),
            max_dimension: cfg.max_dimension,
            rp_draws: cfg.rp_draws,
            log_penalties: cfg.ridge_log_penalty.values(),
        })
    }
}

fn metadata(panel: &TransformedPanel, spec: &RollingSpec, cfg: &EmpiricalConfig, failed: usize) -> ReportMetadata {
    let mut meta = ReportMetadata::new(spec.h, spec.window_len, panel.dates[spec.evaluation_start].label(), panel.dates[spec.evaluation_end].label());
    let notes = &mut meta.notes;
    notes.insert("forecast_start".into(), panel.dates[spec.forecast_start].label().into());
    notes.insert("failed_targets".into(), failed.into());
    notes.insert("max_dimension".into(), spec.max_dimension.into());
    notes.insert("rp_draws".into(), spec.rp_draws.into());
    notes.insert("ridge_log_penalty".into(), serde_json::to_value(cfg.ridge_log_penalty).expect("grid serializes"));
    notes.insert("nonpositive_logs".into(), panel.nonpositive_logs.into());
    meta
}

/// Nominal predictor count of a panel: the other series plus two target lags.
pub fn nominal_predictors(panel: &TransformedPanel) -> usize {
    panel.names.len() + 1
}

pub fn window_length(multiple: f64, nominal: usize) -> usize {
    ((multiple * nominal as f64).round() as usize).max(1)
}

pub fn run(cfg: &EmpiricalConfig, digest: &str, out: &mut OutputDir) -> Result<Vec<RunError>> {
    let bytes = std::fs::read(&cfg.data).with_context(|| format!("reading {}", cfg.data.display()))?;
    let raw = parse_fred_csv(&bytes, Frequency::Monthly)?;
    let panel = raw.transform()?;
    let targets = match &cfg.targets {
        Some(t) => t.clone(),
        None => panel.names.clone(),
    };
    for t in &targets {
        ensure!(panel.index_of(t).is_some(), "target {t} is not in {}", cfg.data.display());
    }
    let dates = Dates {
        forecast_start: parse_month(&cfg.forecast_start)?,
        evaluation_start: parse_month(&cfg.evaluation_start)?,
        evaluation_end: cfg.evaluation_end.as_deref().map(parse_month).transpose()?,
    };
    let groups: BTreeMap<String, u8> = panel.names.iter().zip(&panel.groups).filter_map(|(n, g)| g.map(|g| (n.clone(), g))).collect();
    let pairs = pairs(&cfg.methods);
    let mut errors = Vec::new();
    let mut reports: Vec<(usize, f64, EvaluationReport)> = Vec::new();
    let nominal = nominal_predictors(&panel);
    for &multiple in &cfg.window_multiples {
        let len = window_length(multiple, nominal);
        let scope = format!("window {len}");
        let spec = dates.spec(&panel, cfg, cfg.h, len)?;
        let (tracks, errs) = rolling_panel(&panel, &targets, &spec, derive_seed(cfg.master_seed, &[0, len as u64]), &scope);
        let failed = errs.len();
        errors.extend(errs);
        if tracks.is_empty() {
            errors.push(RunError::new(scope, "no target could be forecast"));
            continue;
        }
        let mut meta = metadata(&panel, &spec, cfg, failed);
        meta.window_multiple = Some(multiple);
        meta.notes.insert("nominal_predictors".into(), nominal.into());
        match EvaluationReport::build(meta, &tracks, &pairs, &groups) {
            Ok(report) => {
                write_report(out, &format!("T{len}"), &report)?;
                write_losses(out, &format!("losses_T{len}.csv"), digest, cfg.master_seed, &panel, &tracks)?;
                reports.push((len, multiple, report));
            }
            Err(e) => errors.push(RunError::new(scope, e)),
        }
    }
    if !reports.is_empty() {
        let mut rates = Vec::new();
        for (len, multiple, report) in &reports {
            for r in pca_win_rates(report, &cfg.methods)? {
                rates.push((format!("T={len} ({multiple:.4}N)"), r));
            }
        }
        out.write_with("win_rates.csv", |b| write_win_rate_csv(&rates, b))?;
    }
    if reports.len() >= 2 {
        let long = reports.iter().max_by_key(|r| r.0).expect("nonempty");
        let short = reports.iter().min_by_key(|r| r.0).expect("nonempty");
        for (a, b) in &pairs {
            match dm_shift(&long.2, &short.2, a, b) {
                Ok(shifts) => out.write_with(&format!("dm_shift_{}.csv", pair_key(a, b)), |buf| write_dm_shift_csv(&shifts, buf))?,
                Err(e) => errors.push(RunError::new(format!("dm shift {}", pair_key(a, b)), e)),
            }
        }
    }
    if let Some(freq) = &cfg.frequency_experiment {
        errors.extend(frequency_experiment(cfg, freq, &raw, &dates, digest, out)?);
    }
    Ok(errors)
}

/// Monthly versus quarterly forecasts of the common variable subset with
/// equal calendar windows. Both frequencies use the quarterly codes.
fn frequency_experiment(cfg: &EmpiricalConfig, freq: &FrequencyExperiment, md: &diffuse_core::ingest::RawDataset, dates: &Dates, digest: &str, out: &mut OutputDir) -> Result<Vec<RunError>> {
    let mapping = match &freq.mapping {
        Some(p) => MappingTable::parse(&std::fs::read(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => MappingTable::shipped(),
    };
    let qd = match &freq.quarterly_data {
        Some(p) => parse_fred_csv(&std::fs::read(p).with_context(|| format!("reading {}", p.display()))?, Frequency::Quarterly)?,
        None => aggregate_to_quarterly(md)?,
    };
    let subset = match_md_qd_subset(md, &qd, &mapping)?;
    if subset.pairs.is_empty() {
        bail!("no mapped variable is present in both datasets");
    }
    out.write_csv("frequency_subset.csv", |w| {
        w.write_record(["mnemonic", "id_m", "id_q", "group", "tcode_md", "tcode", "overridden"])?;
        for p in &subset.pairs {
            w.write_record([&p.mnemonic, &p.id_m.to_string(), &p.id_q.to_string(), &p.group.to_string(), &p.tcode_md.to_string(), &p.tcode.to_string(), &p.overridden().to_string()])?;
        }
        Ok(())
    })?;
    let monthly = subset.apply(md)?.transform()?;
    let quarterly = subset.apply(&qd)?.transform()?;
    let targets: Vec<String> = subset
        .pairs
        .iter()
        .map(|p| p.mnemonic.clone())
        .filter(|m| cfg.targets.as_ref().is_none_or(|t| t.contains(m)))
        .collect();
    let groups = mapping_groups(&mapping);
    let pairs = pairs(&cfg.methods);
    let mut errors = Vec::new();
    let mut reports = Vec::new();
    let runs = [("monthly", &monthly, freq.monthly_h, 12 * freq.window_years, 1u64), ("quarterly", &quarterly, freq.quarterly_h, 4 * freq.window_years, 2)];
    for (label, panel, h, len, tag) in runs {
        let spec = dates.spec(panel, cfg, h, len)?;
        let (tracks, errs) = rolling_panel(panel, &targets, &spec, derive_seed(cfg.master_seed, &[tag, len as u64]), label);
        let failed = errs.len();
        errors.extend(errs);
        if tracks.is_empty() {
            errors.push(RunError::new(label, "no target could be forecast"));
            continue;
        }
        let mut meta = metadata(panel, &spec, cfg, failed);
        meta.notes.insert("frequency".into(), label.into());
        meta.notes.insert("overridden_tcodes".into(), subset.overridden().into());
        match EvaluationReport::build(meta, &tracks, &pairs, &groups) {
            Ok(report) => {
                write_report(out, label, &report)?;
                write_losses(out, &format!("losses_{label}.csv"), digest, cfg.master_seed, panel, &tracks)?;
                reports.push((label, report));
            }
            Err(e) => errors.push(RunError::new(label, e)),
        }
    }
    let mut rates = Vec::new();
    for (label, report) in &reports {
        for r in pca_win_rates(report, &cfg.methods)? {
            rates.push((label.to_string(), r));
        }
    }
    if !rates.is_empty() {
        out.write_with("frequency_win_rates.csv", |b| write_win_rate_csv(&rates, b))?;
    }
    if let [(_, m), (_, q)] = reports.as_slice() {
        for (a, b) in &pairs {
            match dm_shift(m, q, a, b) {
                Ok(shifts) => out.write_with(&format!("dm_shift_frequency_{}.csv", pair_key(a, b)), |buf| write_dm_shift_csv(&shifts, buf))?,
                Err(e) => errors.push(RunError::new(format!("frequency dm shift {}", pair_key(a, b)), e)),
            }
        }
    }
    Ok(errors)
}
