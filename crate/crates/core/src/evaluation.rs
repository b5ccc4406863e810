//! Out-of-sample loss accounting: MSFE, Diebold-Mariano statistics, win rates
//! and serializable reports.
//!
//! Sign convention: every pairwise comparison is written `(a, b)` with `b`
//! the baseline. The loss differential is `d_t = loss_b_t - loss_a_t`, so a
//! positive DM statistic or a positive win margin favors method `a`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Version of the JSON and CSV report layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Long-run variance estimator used by [`dm_statistic`], recorded in reports.
pub const DM_VARIANCE_ESTIMATOR: &str = "bartlett kernel, truncation lag h-1, 1/n autocovariances, no small-sample correction";

/// FRED-MD variable groups, indexed from 1.
pub const FRED_MD_GROUPS: [&str; 8] = [
    "Output and income",
    "Labor market",
    "Housing",
    "Consumption, orders, and inventories",
    "Money and credit",
    "Interest and exchange rates",
    "Prices",
    "Stock market",
];

pub fn group_name(group: u8) -> Option<&'static str> {
    FRED_MD_GROUPS.get(usize::from(group).checked_sub(1)?).copied()
}

/// Squared forecast errors of one method on one variable over consecutive origins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPath {
    variable: String,
    method: String,
    times: Vec<usize>,
    squared_errors: Vec<f64>,
}

impl LossPath {
    pub fn new(variable: impl Into<String>, method: impl Into<String>, times: Vec<usize>, squared_errors: Vec<f64>) -> Result<Self> {
        if times.len() != squared_errors.len() {
            return Err(Error::data(format!("{} time indices for {} losses", times.len(), squared_errors.len())));
        }
        if times.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::data("loss path time indices must be consecutive"));
        }
        if squared_errors.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
            return Err(Error::data("squared errors must be finite and nonnegative"));
        }
        Ok(Self { variable: variable.into(), method: method.into(), times, squared_errors })
    }

    /// Path over `start, start + 1, ...`.
    pub fn from_start(variable: impl Into<String>, method: impl Into<String>, start: usize, squared_errors: Vec<f64>) -> Result<Self> {
        let times = (start..start + squared_errors.len()).collect();
        Self::new(variable, method, times, squared_errors)
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn squared_errors(&self) -> &[f64] {
        &self.squared_errors
    }

    pub fn len(&self) -> usize {
        self.squared_errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squared_errors.is_empty()
    }
}

pub fn msfe(path: &LossPath) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::data(format!("empty loss path for {}/{}", path.variable, path.method)));
    }
    Ok(path.squared_errors.iter().sum::<f64>() / path.len() as f64)
}

/// Minimum sample size accepted by [`dm_statistic`].
pub const DM_MIN_LEN: usize = 10;

/// Diebold-Mariano statistic; `statistic` is `None` when the long-run
/// variance of the differential is numerically zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmStatistic {
    pub statistic: Option<f64>,
    pub mean_differential: f64,
    pub long_run_variance: f64,
    pub n: usize,
}

impl DmStatistic {
    pub fn is_degenerate(&self) -> bool {
        self.statistic.is_none()
    }
}

/// Bartlett long-run variance with truncation lag `h - 1`:
/// `g_0 + 2 sum_{j=1}^{h-1} (1 - j/h) g_j` with `g_j = (1/n) sum_t (d_t - m)(d_{t-j} - m)`.
pub fn bartlett_long_run_variance(d: &[f64], h: usize) -> f64 {
    let n = d.len();
    if n == 0 {
        return 0.0;
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = d.iter().map(|x| x - mean).collect();
    let autocov = |j: usize| centered[j..].iter().zip(&centered).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let mut lrv = autocov(0);
    for j in 1..h.min(n) {
        lrv += 2.0 * (1.0 - j as f64 / h as f64) * autocov(j);
    }
    lrv
}

/// Diebold-Mariano statistic for `a` against baseline `b` at horizon `h`.
pub fn dm_statistic(loss_a: &LossPath, loss_b: &LossPath, h: usize) -> Result<DmStatistic> {
    if loss_a.times != loss_b.times {
        return Err(Error::data(format!("loss paths {}/{} and {}/{} are not aligned", loss_a.variable, loss_a.method, loss_b.variable, loss_b.method)));
    }
    if loss_a.len() < DM_MIN_LEN {
        return Err(Error::data(format!("DM statistic needs at least {DM_MIN_LEN} observations, got {}", loss_a.len())));
    }
    if h < 1 {
        return Err(Error::arg("horizon must be at least 1"));
    }
    let d: Vec<f64> = loss_b.squared_errors.iter().zip(&loss_a.squared_errors).map(|(b, a)| b - a).collect();
    Ok(dm_from_differential(&d, h))
}

fn dm_from_differential(d: &[f64], h: usize) -> DmStatistic {
    let n = d.len();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let lrv = bartlett_long_run_variance(d, h);
    let mean_sq = d.iter().map(|x| x * x).sum::<f64>() / nf;
    // below this level the variance is indistinguishable from summation rounding
    let floor = (nf * f64::EPSILON).powi(2) * mean_sq;
    let statistic = (lrv > floor).then(|| mean / (lrv / nf).sqrt());
    DmStatistic { statistic, mean_differential: mean, long_run_variance: lrv, n }
}

/// Share of variables on which `a` has strictly smaller MSFE than `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub method_a: String,
    pub method_b: String,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub variables: usize,
    pub win_pct: f64,
    pub tie_pct: f64,
}

/// `msfes` maps variable to method to MSFE; every variable must carry both methods.
pub fn win_rate(msfes: &BTreeMap<String, BTreeMap<String, f64>>, a: &str, b: &str) -> Result<WinRate> {
    if msfes.is_empty() {
        return Err(Error::data("win rate over an empty variable set"));
    }
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (var, methods) in msfes {
        let get = |m: &str| methods.get(m).copied().ok_or_else(|| Error::data(format!("variable {var} has no MSFE for {m}")));
        let (ma, mb) = (get(a)?, get(b)?);
        if ma < mb {
            wins += 1;
        } else if mb < ma {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    let n = msfes.len();
    Ok(WinRate {
        method_a: a.to_string(),
        method_b: b.to_string(),
        wins,
        losses,
        ties,
        variables: n,
        win_pct: 100.0 * wins as f64 / n as f64,
        tie_pct: 100.0 * ties as f64 / n as f64,
    })
}

/// Change in a pairwise DM statistic between two window sizes for one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmShift {
    pub variable: String,
    pub group: Option<u8>,
    pub long: Option<f64>,
    pub short: Option<f64>,
    /// `long - short`; absent when either statistic is degenerate.
    pub delta: Option<f64>,
}

/// Per-variable `DM(long) - DM(short)` for the pair `(a, b)`, ordered by
/// group (ungrouped last) and then by variable name.
pub fn dm_shift(report_long: &EvaluationReport, report_short: &EvaluationReport, a: &str, b: &str) -> Result<Vec<DmShift>> {
    let long_vars: Vec<&String> = report_long.variables.keys().collect();
    let short_vars: Vec<&String> = report_short.variables.keys().collect();
    if long_vars != short_vars {
        return Err(Error::data("reports cover different variable sets"));
    }
    let key = pair_key(a, b);
    let mut out = Vec::with_capacity(long_vars.len());
    for (var, long) in &report_long.variables {
        let short = &report_short.variables[var];
        let lookup = |v: &VariableReport| {
            v.dm.get(&key).map(|s| s.statistic).ok_or_else(|| Error::data(format!("variable {var} has no DM statistic for {key}")))
        };
        let (l, s) = (lookup(long)?, lookup(short)?);
        out.push(DmShift {
            variable: var.clone(),
            group: long.group,
            long: l,
            short: s,
            delta: l.zip(s).map(|(l, s)| l - s),
        });
    }
    out.sort_by(|x, y| (x.group.is_none(), x.group, &x.variable).cmp(&(y.group.is_none(), y.group, &y.variable)));
    Ok(out)
}

/// Key under which the DM statistic of `a` against `b` is stored.
pub fn pair_key(a: &str, b: &str) -> String {
    format!("{a}_vs_{b}")
}

/// Losses and selected hyperparameters of one method on one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodTrack {
    pub path: LossPath,
    /// Hyperparameter selected at each origin, aligned with the loss path.
    pub hyperparameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub msfe: f64,
    pub n: usize,
    pub hyperparameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableReport {
    pub group: Option<u8>,
    pub methods: BTreeMap<String, MethodMetrics>,
    pub dm: BTreeMap<String, DmStatistic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub horizon: usize,
    pub window_len: usize,
    pub window_multiple: Option<f64>,
    pub sample_start: String,
    pub sample_end: String,
    pub dm_variance_estimator: String,
    /// Free-form run details such as dropped series counts or grid definitions.
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl ReportMetadata {
    pub fn new(horizon: usize, window_len: usize, sample_start: impl Into<String>, sample_end: impl Into<String>) -> Self {
        Self {
            horizon,
            window_len,
            window_multiple: None,
            sample_start: sample_start.into(),
            sample_end: sample_end.into(),
            dm_variance_estimator: DM_VARIANCE_ESTIMATOR.to_string(),
            notes: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    pub variables: BTreeMap<String, VariableReport>,
    pub win_rates: Vec<WinRate>,
}

impl EvaluationReport {
    /// Builds a report from per-variable method tracks. Each `(a, b)` in
    /// `pairs` yields a DM statistic per variable and a win rate.
    pub fn build(metadata: ReportMetadata, tracks: &[MethodTrack], pairs: &[(String, String)], groups: &BTreeMap<String, u8>) -> Result<Self> {
        let mut by_var: BTreeMap<String, BTreeMap<String, &MethodTrack>> = BTreeMap::new();
        for track in tracks {
            if track.hyperparameters.len() != track.path.len() {
                return Err(Error::data(format!("hyperparameter track of {}/{} is misaligned", track.path.variable, track.path.method)));
            }
            let slot = by_var.entry(track.path.variable.clone()).or_default();
            if slot.insert(track.path.method.clone(), track).is_some() {
                return Err(Error::data(format!("duplicate track for {}/{}", track.path.variable, track.path.method)));
            }
        }
        let mut variables = BTreeMap::new();
        for (var, methods) in &by_var {
            let mut metrics = BTreeMap::new();
            for (m, t) in methods {
                metrics.insert(m.clone(), MethodMetrics { msfe: msfe(&t.path)?, n: t.path.len(), hyperparameters: t.hyperparameters.clone() });
            }
            let mut dm = BTreeMap::new();
            for (a, b) in pairs {
                let get = |m: &String| methods.get(m).ok_or_else(|| Error::data(format!("variable {var} has no track for {m}")));
                dm.insert(pair_key(a, b), dm_statistic(&get(a)?.path, &get(b)?.path, metadata.horizon)?);
            }
            variables.insert(var.clone(), VariableReport { group: groups.get(var).copied(), methods: metrics, dm });
        }
        let msfes: BTreeMap<String, BTreeMap<String, f64>> = variables
            .iter()
            .map(|(v, r)| (v.clone(), r.methods.iter().map(|(m, x)| (m.clone(), x.msfe)).collect()))
            .collect();
        let win_rates = pairs.iter().map(|(a, b)| win_rate(&msfes, a, b)).collect::<Result<_>>()?;
        Ok(Self { schema_version: SCHEMA_VERSION, metadata, variables, win_rates })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(format!("report serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text).map_err(|e| Error::parse(format!("report: {e}")))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::parse(format!("unsupported report schema version {}", report.schema_version)));
        }
        Ok(report)
    }

    /// Flat table with one row per variable and method:
    /// `schema_version,variable,group,method,msfe,n`.
    pub fn write_msfe_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        write_row(&mut w, &["schema_version", "variable", "group", "method", "msfe", "n"])?;
        for (var, r) in &self.variables {
            for (m, x) in &r.methods {
                write_row(&mut w, &[&SCHEMA_VERSION.to_string(), var, &opt(r.group), m, &x.msfe.to_string(), &x.n.to_string()])?;
            }
        }
        flush(w)
    }

    /// One row per variable and method pair:
    /// `schema_version,variable,group,method_a,method_b,dm,mean_differential,long_run_variance,n`.
    /// Degenerate statistics leave the `dm` cell empty.
    pub fn write_dm_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        write_row(&mut w, &["schema_version", "variable", "group", "pair", "dm", "mean_differential", "long_run_variance", "n"])?;
        for (var, r) in &self.variables {
            for (pair, s) in &r.dm {
                write_row(
                    &mut w,
                    &[&SCHEMA_VERSION.to_string(), var, &opt(r.group), pair, &opt(s.statistic), &s.mean_differential.to_string(), &s.long_run_variance.to_string(), &s.n.to_string()],
                )?;
            }
        }
        flush(w)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_row<W: Write>(w: &mut csv::Writer<W>, row: &[&str]) -> Result<()> {
    w.write_record(row).map_err(|e| Error::Data(format!("csv write: {e}")))
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::Data(format!("csv write: {e}")))
}

/// Rows `schema_version,label,method_a,method_b,wins,losses,ties,variables,win_pct,tie_pct`.
pub fn write_win_rate_csv<W: Write>(rates: &[(String, WinRate)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    write_row(&mut w, &["schema_version", "label", "method_a", "method_b", "wins", "losses", "ties", "variables", "win_pct", "tie_pct"])?;
    for (label, r) in rates {
        write_row(
            &mut w,
            &[
                &SCHEMA_VERSION.to_string(),
                label,
                &r.method_a,
                &r.method_b,
                &r.wins.to_string(),
                &r.losses.to_string(),
                &r.ties.to_string(),
                &r.variables.to_string(),
                &r.win_pct.to_string(),
                &r.tie_pct.to_string(),
            ],
        )?;
    }
    flush(w)
}

/// Rows `schema_version,variable,group,group_name,dm_long,dm_short,delta`.
pub fn write_dm_shift_csv<W: Write>(shifts: &[DmShift], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    write_row(&mut w, &["schema_version", "variable", "group", "group_name", "dm_long", "dm_short", "delta"])?;
    for s in shifts {
        let name = s.group.and_then(group_name).unwrap_or("");
        write_row(&mut w, &[&SCHEMA_VERSION.to_string(), &s.variable, &opt(s.group), name, &opt(s.long), &opt(s.short), &opt(s.delta)])?;
    }
    flush(w)
}
