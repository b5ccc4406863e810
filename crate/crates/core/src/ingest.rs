//! FRED-MD/FRED-QD style data: CSV parsing, transformation codes, monthly to
//! quarterly aggregation and the lagged design used for direct forecasts.
//!
//! Files follow the public layout: a header row `sasdate,<mnemonics...>`,
//! metadata rows whose first cell is `Transform:` (and `Factors:` in
//! quarterly files), then one row per period with dates such as `1/1/1959`.
//! A `Group:` metadata row with FRED-MD group numbers is also accepted.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::forecasters::TrainingSet;
use crate::spectra::PanelMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Monthly,
    Quarterly,
}

impl Frequency {
    pub fn months_per_period(self) -> i64 {
        match self {
            Frequency::Monthly => 1,
            Frequency::Quarterly => 3,
        }
    }
}

/// Calendar date of an observation. Only year and month matter for ordering
/// and contiguity; the day is kept for round trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Date {
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

impl Date {
    pub fn new(year: i32, month: u32, day: u32) -> Result<Self> {
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return Err(Error::parse(format!("invalid date {year}-{month}-{day}")));
        }
        Ok(Self { year, month, day })
    }

    pub fn month_index(&self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_month_index(idx: i64) -> Self {
        Self { year: idx.div_euclid(12) as i32, month: idx.rem_euclid(12) as u32 + 1, day: 1 }
    }

    /// Parses `M/D/YYYY` or `YYYY-MM-DD`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::parse(format!("unrecognized date {text:?}"));
        let parts: Vec<&str> = if text.contains('/') { text.split('/').collect() } else { text.split('-').collect() };
        if parts.len() != 3 {
            return Err(bad());
        }
        let num = |s: &str| s.trim().parse::<i64>().map_err(|_| bad());
        let (y, m, d) = if text.contains('/') { (num(parts[2])?, num(parts[0])?, num(parts[1])?) } else { (num(parts[0])?, num(parts[1])?, num(parts[2])?) };
        Self::new(i32::try_from(y).map_err(|_| bad())?, u32::try_from(m).map_err(|_| bad())?, u32::try_from(d).map_err(|_| bad())?)
    }

    /// `YYYY-MM`, used in reports.
    pub fn label(&self) -> String {
        format!("{:04}-{:02}", self.year, self.month)
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.month, self.day, self.year)
    }
}

/// One raw series with its metadata. `None` marks a missing observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub tcode: u8,
    pub group: Option<u8>,
    /// Raw cell of the quarterly `Factors:` row, if present.
    pub factor: Option<String>,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    frequency: Frequency,
    dates: Vec<Date>,
    series: Vec<Series>,
}

fn check_tcode(code: u8) -> Result<u8> {
    if (1..=7).contains(&code) {
        Ok(code)
    } else {
        Err(Error::data(format!("transformation code must lie in 1..=7, got {code}")))
    }
}

impl RawDataset {
    pub fn new(frequency: Frequency, dates: Vec<Date>, series: Vec<Series>) -> Result<Self> {
        let step = frequency.months_per_period();
        for w in dates.windows(2) {
            let gap = w[1].month_index() - w[0].month_index();
            if gap <= 0 {
                return Err(Error::data(format!("dates are not increasing at {}", w[1])));
            }
            if gap != step {
                return Err(Error::data(format!("dates are not contiguous between {} and {}", w[0], w[1])));
            }
        }
        let mut seen = HashSet::new();
        for s in &series {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::data(format!("duplicate series {}", s.name)));
            }
            if s.values.len() != dates.len() {
                return Err(Error::data(format!("series {} has {} values for {} dates", s.name, s.values.len(), dates.len())));
            }
            check_tcode(s.tcode)?;
            if s.group.is_some_and(|g| !(1..=8).contains(&g)) {
                return Err(Error::data(format!("series {} has group outside 1..=8", s.name)));
            }
        }
        Ok(Self { frequency, dates, series })
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn dates(&self) -> &[Date] {
        &self.dates
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn get(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.series.iter().map(|s| s.name.as_str()).collect()
    }

    /// Keeps the named series in the given order, replacing tcodes and groups.
    pub fn select(&self, picks: &[(String, u8, Option<u8>)]) -> Result<Self> {
        let series = picks
            .iter()
            .map(|(name, tcode, group)| {
                let s = self.get(name).ok_or_else(|| Error::data(format!("series {name} not in dataset")))?;
                Ok(Series { tcode: check_tcode(*tcode)?, group: *group, ..s.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.frequency, self.dates.clone(), series)
    }

    /// Rows whose date lies in `[from, to]` (inclusive, by month).
    pub fn slice_dates(&self, from: Date, to: Date) -> Result<Self> {
        let keep: Vec<usize> = (0..self.dates.len())
            .filter(|&i| (from.month_index()..=to.month_index()).contains(&self.dates[i].month_index()))
            .collect();
        let series = self
            .series
            .iter()
            .map(|s| Series { values: keep.iter().map(|&i| s.values[i]).collect(), ..s.clone() })
            .collect();
        Self::new(self.frequency, keep.iter().map(|&i| self.dates[i]).collect(), series)
    }

    /// Applies each series' transformation code.
    pub fn transform(&self) -> Result<TransformedPanel> {
        let mut values = Vec::with_capacity(self.series.len());
        let mut nonpositive_logs = 0;
        for s in &self.series {
            let t = apply_tcode(&s.values, s.tcode)?;
            nonpositive_logs += t.nonpositive_logs;
            values.push(t.values);
        }
        Ok(TransformedPanel {
            frequency: self.frequency,
            dates: self.dates.clone(),
            names: self.series.iter().map(|s| s.name.clone()).collect(),
            groups: self.series.iter().map(|s| s.group).collect(),
            values,
            nonpositive_logs,
        })
    }
}

fn metadata_label(cell: &str) -> Option<String> {
    let label = cell.trim().trim_end_matches(':').to_ascii_lowercase();
    matches!(label.as_str(), "transform" | "factors" | "group").then_some(label)
}

fn parse_cell(cell: Option<&str>) -> Option<f64> {
    let c = cell?.trim();
    if c.is_empty() {
        return None;
    }
    c.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_code(cell: &str, what: &str, name: &str, range: std::ops::RangeInclusive<u8>) -> Result<u8> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::parse(format!("{what} for {name}: {cell:?}")))?;
    if v.fract() != 0.0 || v < f64::from(*range.start()) || v > f64::from(*range.end()) {
        return Err(Error::parse(format!("{what} for {name} out of range: {cell:?}")));
    }
    Ok(v as u8)
}

/// Parses a FRED-MD or FRED-QD style CSV. Unparseable data cells become
/// missing; rows with an empty date cell are skipped.
pub fn parse_fred_csv(bytes: &[u8], frequency: Frequency) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| Error::parse("empty file"))?
        .map_err(|e| Error::parse(e.to_string()))?;
    let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(Error::parse("header must name every series"));
    }
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n) {
            return Err(Error::parse(format!("duplicate mnemonic {n}")));
        }
    }
    let mut tcodes: Option<Vec<u8>> = None;
    let mut factors: Option<Vec<String>> = None;
    let mut groups: Option<Vec<Option<u8>>> = None;
    let mut dates = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for rec in records {
        let rec = rec.map_err(|e| Error::parse(e.to_string()))?;
        let first = rec.get(0).unwrap_or("");
        let cell = |j: usize| rec.get(j + 1).unwrap_or("").trim();
        if let Some(label) = metadata_label(first) {
            match label.as_str() {
                "transform" => tcodes = Some((0..names.len()).map(|j| parse_code(cell(j), "transformation code", &names[j], 1..=7)).collect::<Result<_>>()?),
                "factors" => factors = Some((0..names.len()).map(|j| cell(j).to_string()).collect()),
                _ => {
                    groups = Some(
                        (0..names.len())
                            .map(|j| if cell(j).is_empty() { Ok(None) } else { parse_code(cell(j), "group", &names[j], 1..=8).map(Some) })
                            .collect::<Result<_>>()?,
                    )
                }
            }
            continue;
        }
        if first.trim().is_empty() {
            continue;
        }
        dates.push(Date::parse(first)?);
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse_cell(rec.get(j + 1)));
        }
    }
    let tcodes = tcodes.ok_or_else(|| Error::parse("missing Transform: row"))?;
    for w in dates.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::parse(format!("dates are not increasing at {}", w[1])));
        }
    }
    let series = names
        .into_iter()
        .zip(columns)
        .enumerate()
        .map(|(j, (name, values))| Series {
            name,
            tcode: tcodes[j],
            group: groups.as_ref().and_then(|g| g[j]),
            factor: factors.as_ref().map(|f| f[j].clone()),
            values,
        })
        .collect();
    RawDataset::new(frequency, dates, series)
}

/// Writes `ds` in the layout read by [`parse_fred_csv`].
pub fn serialize_fred_csv(ds: &RawDataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Data(format!("csv write: {e}"));
    let row = |label: &str, cells: Vec<String>| std::iter::once(label.to_string()).chain(cells).collect::<Vec<_>>();
    w.write_record(row("sasdate", ds.series.iter().map(|s| s.name.clone()).collect())).map_err(io)?;
    if ds.series.iter().any(|s| s.factor.is_some()) {
        w.write_record(row("Factors:", ds.series.iter().map(|s| s.factor.clone().unwrap_or_default()).collect())).map_err(io)?;
    }
    w.write_record(row("Transform:", ds.series.iter().map(|s| s.tcode.to_string()).collect())).map_err(io)?;
    if ds.series.iter().any(|s| s.group.is_some()) {
        w.write_record(row("Group:", ds.series.iter().map(|s| s.group.map(|g| g.to_string()).unwrap_or_default()).collect())).map_err(io)?;
    }
    for (i, d) in ds.dates.iter().enumerate() {
        let cells = ds.series.iter().map(|s| s.values[i].map(|v| v.to_string()).unwrap_or_default()).collect();
        w.write_record(row(&d.to_string(), cells)).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Data(format!("csv write: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedSeries {
    pub values: Vec<Option<f64>>,
    /// Cells set to missing because a logarithm met a nonpositive value.
    pub nonpositive_logs: usize,
}

fn diff(v: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..v.len()).map(|t| if t == 0 { None } else { Some(v[t]? - v[t - 1]?) }).collect()
}

/// Transformation codes: 1 level, 2 first difference, 3 second difference,
/// 4 log, 5 log difference, 6 second log difference, 7 first difference of
/// the growth rate `x_t / x_{t-1} - 1`. Output is aligned with the input.
pub fn apply_tcode(series: &[Option<f64>], code: u8) -> Result<TransformedSeries> {
    check_tcode(code)?;
    let mut nonpositive_logs = 0;
    let mut log = || {
        series
            .iter()
            .map(|v| {
                let x = (*v)?;
                if x > 0.0 {
                    Some(x.ln())
                } else {
                    nonpositive_logs += 1;
                    None
                }
            })
            .collect::<Vec<_>>()
    };
    let values = match code {
        1 => series.to_vec(),
        2 => diff(series),
        3 => diff(&diff(series)),
        4 => log(),
        5 => diff(&log()),
        6 => diff(&diff(&log())),
        _ => {
            let growth: Vec<Option<f64>> = (0..series.len())
                .map(|t| {
                    let prev = series[t.checked_sub(1)?]?;
                    (prev != 0.0).then(|| series[t].map(|x| x / prev - 1.0)).flatten()
                })
                .collect();
            diff(&growth)
        }
    };
    Ok(TransformedSeries { values, nonpositive_logs })
}

/// Within-quarter means of raw monthly values. Only quarters whose three
/// months are all inside the sample are kept; a quarter with a missing month
/// is missing. Quarters are dated by their last month. Transformation codes
/// are carried over unchanged and usually replaced before transforming.
pub fn aggregate_to_quarterly(monthly: &RawDataset) -> Result<RawDataset> {
    if monthly.frequency != Frequency::Monthly {
        return Err(Error::arg("aggregation expects a monthly dataset"));
    }
    let Some(first) = monthly.dates.first() else {
        return RawDataset::new(Frequency::Quarterly, vec![], monthly.series.iter().map(|s| Series { values: vec![], ..s.clone() }).collect());
    };
    let offset = first.month_index();
    let first_q_start = (offset + 2).div_euclid(3) * 3;
    let end = offset + monthly.dates.len() as i64;
    let quarters: Vec<i64> = (first_q_start..).step_by(3).take_while(|q| q + 3 <= end).collect();
    let dates = quarters.iter().map(|&q| Date::from_month_index(q + 2)).collect();
    let series = monthly
        .series
        .iter()
        .map(|s| {
            let values = quarters
                .iter()
                .map(|&q| {
                    let i = (q - offset) as usize;
                    let (a, b, c) = (s.values[i]?, s.values[i + 1]?, s.values[i + 2]?);
                    Some((a + b + c) / 3.0)
                })
                .collect();
            Series { values, ..s.clone() }
        })
        .collect();
    RawDataset::new(Frequency::Quarterly, dates, series)
}

/// Transformed series on a common date index.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedPanel {
    pub frequency: Frequency,
    pub dates: Vec<Date>,
    pub names: Vec<String>,
    pub groups: Vec<Option<u8>>,
    /// Series-major values.
    pub values: Vec<Vec<Option<f64>>>,
    pub nonpositive_logs: usize,
}

impl TransformedPanel {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Index of the period dated `date` (by month).
    pub fn position(&self, date: Date) -> Option<usize> {
        self.dates.iter().position(|d| d.month_index() == date.month_index())
    }
}

/// Number of target lags in the control block.
pub const CONTROL_LAGS: usize = 4;
/// Target lags placed among the predictors.
pub const PREDICTOR_LAGS: [usize; 2] = [5, 6];
/// Deepest target lag used by the design.
pub const MAX_LAG: usize = 6;

/// Design of one forecast origin.
///
/// Rows are `t = first_row..=origin - h`. The control block is
/// `w_t = [1, y_{t-1}, ..., y_{t-4}]`, the predictors are
/// `x_t = [y_{t-5}, y_{t-6}, other series at t]`, and the target is `y_{t+h}`.
/// Predictor columns are standardized with the window mean and standard
/// deviation (divisor `T - 1`); the same affine map is applied to `x_new`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignWindow {
    pub target: String,
    pub h: usize,
    pub origin: usize,
    pub first_row: usize,
    pub w: DMatrix<f64>,
    pub w_new: DVector<f64>,
    pub x: DMatrix<f64>,
    pub x_new: DVector<f64>,
    pub y: DVector<f64>,
    pub x_names: Vec<String>,
    /// Series dropped for a missing value in the window or at the origin.
    pub dropped_missing: Vec<String>,
    /// Series dropped for zero variance over the window.
    pub dropped_constant: Vec<String>,
    /// `y_{origin + h}` when it is inside the sample.
    pub realized: Option<f64>,
}

impl DesignWindow {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_x(&self) -> usize {
        self.x.ncols()
    }

    pub fn training_set(&self) -> Result<TrainingSet> {
        TrainingSet::new(PanelMatrix::new(self.x.clone())?, self.y.clone(), self.h, self.x_new.clone())
    }
}

/// Builds the design of `window_len` rows for forecasting `target` at
/// horizon `h` from origin `window_end` (an index into `panel.dates`).
pub fn build_design(panel: &TransformedPanel, target: &str, h: usize, window_end: usize, window_len: usize) -> Result<DesignWindow> {
    let ti = panel.index_of(target).ok_or_else(|| Error::data(format!("target {target} not in panel")))?;
    if h < 1 || window_len < 1 {
        return Err(Error::arg("horizon and window length must be at least 1"));
    }
    if window_end >= panel.len() {
        return Err(Error::arg(format!("origin {window_end} beyond the sample of {}", panel.len())));
    }
    let first_row = (window_end + 1)
        .checked_sub(h + window_len)
        .filter(|&t0| t0 >= MAX_LAG)
        .ok_or_else(|| Error::data(format!("window of {window_len} rows at origin {} needs {} earlier periods", panel.dates[window_end], MAX_LAG + h + window_len - 1)))?;
    let last_row = window_end - h;
    let yv = &panel.values[ti];
    let y_at = |t: usize| yv[t].ok_or_else(|| Error::data(format!("target {target} missing at {}", panel.dates[t])));
    for t in first_row - MAX_LAG..=window_end {
        y_at(t)?;
    }
    let rows: Vec<usize> = (first_row..=last_row).collect();
    let t_len = rows.len();
    let control = |t: usize| -> Vec<f64> { std::iter::once(1.0).chain((1..=CONTROL_LAGS).map(|l| yv[t - l].unwrap())).collect() };
    let mut w = DMatrix::zeros(t_len, 1 + CONTROL_LAGS);
    for (i, &t) in rows.iter().enumerate() {
        w.row_mut(i).copy_from_slice(&control(t));
    }
    let w_new = DVector::from_vec(control(window_end));
    let y = DVector::from_iterator(t_len, rows.iter().map(|&t| yv[t + h].unwrap()));

    let mut candidates: Vec<(String, Vec<f64>, f64)> = PREDICTOR_LAGS
        .iter()
        .map(|&l| (format!("{target}_lag{l}"), rows.iter().map(|&t| yv[t - l].unwrap()).collect(), yv[window_end - l].unwrap()))
        .collect();
    let mut dropped_missing = Vec::new();
    for (j, name) in panel.names.iter().enumerate() {
        if j == ti {
            continue;
        }
        let col = &panel.values[j];
        match (rows.iter().map(|&t| col[t]).collect::<Option<Vec<f64>>>(), col[window_end]) {
            (Some(v), Some(new)) => candidates.push((name.clone(), v, new)),
            _ => dropped_missing.push(name.clone()),
        }
    }
    let mut dropped_constant = Vec::new();
    let mut kept: Vec<(String, Vec<f64>, f64)> = Vec::with_capacity(candidates.len());
    for (name, mut col, mut new) in candidates {
        if t_len >= 2 {
            let n = t_len as f64;
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let magnitude = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !(sd > 1e-10 * magnitude) {
                dropped_constant.push(name);
                continue;
            }
            col.iter_mut().for_each(|v| *v = (*v - mean) / sd);
            new = (new - mean) / sd;
        }
        kept.push((name, col, new));
    }
    let mut x = DMatrix::zeros(t_len, kept.len());
    for (j, (_, col, _)) in kept.iter().enumerate() {
        x.column_mut(j).copy_from_slice(col);
    }
    let x_new = DVector::from_iterator(kept.len(), kept.iter().map(|k| k.2));
    Ok(DesignWindow {
        target: target.to_string(),
        h,
        origin: window_end,
        first_row,
        w,
        w_new,
        x,
        x_new,
        y,
        x_names: kept.into_iter().map(|k| k.0).collect(),
        dropped_missing,
        dropped_constant,
        realized: yv.get(window_end + h).copied().flatten(),
    })
}

/// One row of the table of variables present in both FRED-MD and FRED-QD.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRow {
    pub id_m: u32,
    pub id_q: u32,
    pub group: u8,
    pub tcode_q: u8,
    pub mnemonic: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    rows: Vec<MappingRow>,
}

const SHIPPED_MAPPING: &str = include_str!("../data/fred_md_qd_subset.csv");

impl MappingTable {
    /// CSV with header `id_m,id_q,group,tcode_q,mnemonic,description`.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(bytes);
        let rows = reader
            .deserialize::<MappingRow>()
            .map(|r| r.map_err(|e| Error::parse(format!("mapping table: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        for r in &rows {
            check_tcode(r.tcode_q)?;
            if !(1..=8).contains(&r.group) {
                return Err(Error::parse(format!("mapping group out of range for {}", r.mnemonic)));
            }
            if !seen.insert(r.mnemonic.as_str()) {
                return Err(Error::parse(format!("duplicate mapping row for {}", r.mnemonic)));
            }
        }
        Ok(Self { rows })
    }

    /// The 102-variable table shipped with the crate.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_MAPPING.as_bytes()).expect("shipped mapping table is valid")
    }

    pub fn rows(&self) -> &[MappingRow] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedVariable {
    pub mnemonic: String,
    pub id_m: u32,
    pub id_q: u32,
    pub group: u8,
    pub tcode_md: u8,
    /// Code applied on both frequencies (the quarterly one).
    pub tcode: u8,
}

impl MatchedVariable {
    pub fn overridden(&self) -> bool {
        self.tcode != self.tcode_md
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetMatch {
    pub pairs: Vec<MatchedVariable>,
    pub missing_in_md: Vec<String>,
    pub missing_in_qd: Vec<String>,
}

impl SubsetMatch {
    /// Restricts `ds` to the matched variables with quarterly codes and groups.
    pub fn apply(&self, ds: &RawDataset) -> Result<RawDataset> {
        let picks: Vec<(String, u8, Option<u8>)> = self.pairs.iter().map(|p| (p.mnemonic.clone(), p.tcode, Some(p.group))).collect();
        ds.select(&picks)
    }

    pub fn overridden(&self) -> Vec<&str> {
        self.pairs.iter().filter(|p| p.overridden()).map(|p| p.mnemonic.as_str()).collect()
    }
}

/// Joins the mapping table with both datasets by mnemonic. Mnemonics absent
/// from either dataset are listed rather than treated as errors.
pub fn match_md_qd_subset(md: &RawDataset, qd: &RawDataset, mapping: &MappingTable) -> Result<SubsetMatch> {
    let md_codes: HashMap<&str, u8> = md.series.iter().map(|s| (s.name.as_str(), s.tcode)).collect();
    let qd_names: HashSet<&str> = qd.series.iter().map(|s| s.name.as_str()).collect();
    let mut out = SubsetMatch { pairs: vec![], missing_in_md: vec![], missing_in_qd: vec![] };
    for row in &mapping.rows {
        let in_md = md_codes.get(row.mnemonic.as_str());
        let in_qd = qd_names.contains(row.mnemonic.as_str());
        if in_md.is_none() {
            out.missing_in_md.push(row.mnemonic.clone());
        }
        if !in_qd {
            out.missing_in_qd.push(row.mnemonic.clone());
        }
        if let (Some(&tcode_md), true) = (in_md, in_qd) {
            out.pairs.push(MatchedVariable {
                mnemonic: row.mnemonic.clone(),
                id_m: row.id_m,
                id_q: row.id_q,
                group: row.group,
                tcode_md,
                tcode: row.tcode_q,
            });
        }
    }
    Ok(out)
}

/// Group of each mapped mnemonic.
pub fn mapping_groups(mapping: &MappingTable) -> BTreeMap<String, u8> {
    mapping.rows.iter().map(|r| (r.mnemonic.clone(), r.group)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    const SMALL: &str = "sasdate,A,B,C\nTransform:,1,5,2\n1/1/2000,1.5,10,3\n2/1/2000,2.5,11,\n3/1/2000,-1,12.25,4\n4/1/2000,0,13,5\n";

    #[test]
    fn small_file_round_trips() {
        let ds = parse_fred_csv(SMALL.as_bytes(), Frequency::Monthly).unwrap();
        assert_eq!(ds.names(), ["A", "B", "C"]);
        assert_eq!(ds.get("B").unwrap().tcode, 5);
        assert_eq!(ds.get("C").unwrap().values, vec![Some(3.0), None, Some(4.0), Some(5.0)]);
        let again = parse_fred_csv(&serialize_fred_csv(&ds).unwrap(), Frequency::Monthly).unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn quarterly_file_reads_transform_row() {
        let text = "sasdate,GDP,UNRATE\nfactors,1,0\ntransform,5,2\n3/1/1959,100,5\n6/1/1959,101,5.1\n9/1/1959,102,5.3\n";
        let ds = parse_fred_csv(text.as_bytes(), Frequency::Quarterly).unwrap();
        assert_eq!(ds.get("GDP").unwrap().tcode, 5);
        assert_eq!(ds.get("UNRATE").unwrap().tcode, 2);
        assert_eq!(ds.get("UNRATE").unwrap().factor.as_deref(), Some("0"));
        assert_eq!(parse_fred_csv(&serialize_fred_csv(&ds).unwrap(), Frequency::Quarterly).unwrap(), ds);
    }

    #[test]
    fn parser_errors() {
        assert!(parse_fred_csv(b"sasdate,A\n1/1/2000,1\n", Frequency::Monthly).is_err());
        assert!(parse_fred_csv(b"sasdate,A,A\nTransform:,1,1\n1/1/2000,1,2\n", Frequency::Monthly).is_err());
        assert!(parse_fred_csv(b"sasdate,A\nTransform:,1\n2/1/2000,1\n1/1/2000,2\n", Frequency::Monthly).is_err());
        assert!(parse_fred_csv(b"sasdate,A\nTransform:,9\n1/1/2000,1\n", Frequency::Monthly).is_err());
        assert!(parse_fred_csv(b"sasdate,A\nTransform:,1\n1/1/2000,1\n3/1/2000,2\n", Frequency::Monthly).is_err());
    }

    #[test]
    fn blank_and_trailing_rows_are_tolerated() {
        let ds = parse_fred_csv(b"sasdate,A\nTransform:,1\n1/1/2000,x\n2/1/2000,2\n,\n", Frequency::Monthly).unwrap();
        assert_eq!(ds.get("A").unwrap().values, vec![None, Some(2.0)]);
    }

    fn t(v: &[f64], code: u8) -> Vec<Option<f64>> {
        apply_tcode(&v.iter().map(|&x| Some(x)).collect::<Vec<_>>(), code).unwrap().values
    }

    #[test]
    fn tcode_examples() {
        assert_eq!(t(&[1.0, -2.0, 3.0], 1), vec![Some(1.0), Some(-2.0), Some(3.0)]);
        assert_eq!(t(&[1.0, 4.0, 9.0], 2), vec![None, Some(3.0), Some(5.0)]);
        assert_eq!(t(&[1.0, 4.0, 9.0, 16.0], 3), vec![None, None, Some(2.0), Some(2.0)]);
        let code5 = t(&[1.0, E, E * E], 5);
        assert_eq!(code5[0], None);
        assert!((code5[1].unwrap() - 1.0).abs() < 1e-12 && (code5[2].unwrap() - 1.0).abs() < 1e-12);
        let geometric: Vec<f64> = (0..8).map(|i| 3.0 * 1.05_f64.powi(i)).collect();
        let code6 = t(&geometric, 6);
        assert_eq!(&code6[..2], &[None, None]);
        assert!(code6[2..].iter().all(|v| v.unwrap().abs() < 1e-12));
        // growth rates 1.0, 0.5, 0.5 => differences -0.5, 0
        assert_eq!(t(&[1.0, 2.0, 3.0, 4.5], 7), vec![None, None, Some(-0.5), Some(0.0)]);
    }

    #[test]
    fn logs_of_nonpositive_values_are_missing_and_counted() {
        let r = apply_tcode(&[Some(1.0), Some(0.0), Some(-1.0), None, Some(2.0)], 4).unwrap();
        assert_eq!(r.nonpositive_logs, 2);
        assert_eq!(r.values[1], None);
        assert!(apply_tcode(&[Some(1.0)], 0).is_err());
    }

    fn monthly(values: &[Option<f64>], start_month: u32) -> RawDataset {
        let start = Date::new(2000, start_month, 1).unwrap().month_index();
        let dates = (0..values.len() as i64).map(|i| Date::from_month_index(start + i)).collect();
        RawDataset::new(Frequency::Monthly, dates, vec![Series { name: "A".into(), tcode: 1, group: None, factor: None, values: values.to_vec() }]).unwrap()
    }

    #[test]
    fn aggregation_examples() {
        let q = aggregate_to_quarterly(&monthly(&[Some(1.0), Some(2.0), Some(3.0), Some(7.0), Some(7.0), Some(7.0), Some(1.0)], 1)).unwrap();
        assert_eq!(q.get("A").unwrap().values, vec![Some(2.0), Some(7.0)]);
        assert_eq!(q.dates()[0], Date::new(2000, 3, 1).unwrap());
        // leading partial quarter (February start) is dropped
        let q = aggregate_to_quarterly(&monthly(&[Some(9.0), Some(9.0), Some(4.0), Some(4.0), Some(4.0), None], 2)).unwrap();
        assert_eq!(q.get("A").unwrap().values, vec![Some(4.0)]);
        let q = aggregate_to_quarterly(&monthly(&[Some(4.0), None, Some(4.0)], 1)).unwrap();
        assert_eq!(q.get("A").unwrap().values, vec![None]);
        assert!(aggregate_to_quarterly(&q).is_err());
    }

    fn panel(cols: &[(&str, Vec<Option<f64>>)]) -> TransformedPanel {
        let n = cols[0].1.len();
        TransformedPanel {
            frequency: Frequency::Monthly,
            dates: (0..n as i64).map(|i| Date::from_month_index(24_000 + i)).collect(),
            names: cols.iter().map(|c| c.0.to_string()).collect(),
            groups: vec![None; cols.len()],
            values: cols.iter().map(|c| c.1.clone()).collect(),
            nonpositive_logs: 0,
        }
    }

    fn seq(n: usize, f: impl Fn(usize) -> f64) -> Vec<Option<f64>> {
        (0..n).map(|i| Some(f(i))).collect()
    }

    #[test]
    fn design_layout_and_bookkeeping() {
        let p = panel(&[("Y", seq(30, |i| i as f64 * 1.5 + (i % 3) as f64)), ("A", seq(30, |i| (i as f64).sin())), ("B", seq(30, |i| (i * i) as f64))]);
        let d = build_design(&p, "Y", 2, 25, 10).unwrap();
        assert_eq!((d.n_rows(), d.n_x(), d.first_row), (10, 4, 14));
        assert_eq!(d.x_names, ["Y_lag5", "Y_lag6", "A", "B"]);
        let y = |t: usize| p.values[0][t].unwrap();
        assert_eq!(d.y[0], y(16));
        assert_eq!(d.w.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, y(13), y(12), y(11), y(10)]);
        assert_eq!(d.w_new.as_slice(), &[1.0, y(24), y(23), y(22), y(21)]);
        assert_eq!(d.realized, Some(y(27)));
        for j in 0..d.n_x() {
            let c = d.x.column(j);
            let mean = c.mean();
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0;
            assert!(mean.abs() <= 1e-12 && (var - 1.0).abs() <= 1e-12);
        }
        // the origin row is mapped through the window's affine standardization
        let lag5: Vec<f64> = (14..=23).map(|t| y(t - 5)).collect();
        let m = lag5.iter().sum::<f64>() / 10.0;
        let sd = (lag5.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 9.0).sqrt();
        assert!((d.x_new[0] - (y(20) - m) / sd).abs() < 1e-12);
    }

    #[test]
    fn minimal_window_gives_single_row() {
        let p = panel(&[("Y", seq(8, |i| i as f64)), ("A", seq(8, |i| i as f64 * 2.0))]);
        let d = build_design(&p, "Y", 1, 7, 1).unwrap();
        assert_eq!(d.n_rows(), 1);
        assert!(build_design(&p, "Y", 1, 6, 1).is_err());
    }

    #[test]
    fn gappy_and_constant_series_are_dropped() {
        let mut gappy = seq(30, |i| i as f64);
        gappy[20] = None;
        let p = panel(&[("Y", seq(30, |i| (i as f64 * 0.7).cos())), ("G", gappy), ("C", seq(30, |_| 2.0)), ("A", seq(30, |i| (i as f64).sqrt()))]);
        let d = build_design(&p, "Y", 1, 28, 12).unwrap();
        assert_eq!(d.dropped_missing, ["G"]);
        assert_eq!(d.dropped_constant, ["C"]);
        assert_eq!(d.x_names, ["Y_lag5", "Y_lag6", "A"]);
        let mut y = seq(30, |i| i as f64);
        y[10] = None;
        let p = panel(&[("Y", y), ("A", seq(30, |i| (i as f64).sqrt()))]);
        assert!(build_design(&p, "Y", 1, 28, 12).is_err());
    }

    #[test]
    fn shipped_mapping_has_102_rows() {
        let m = MappingTable::shipped();
        assert_eq!(m.rows().len(), 102);
        let houst = m.rows().iter().find(|r| r.mnemonic == "HOUST").unwrap();
        assert_eq!((houst.tcode_q, houst.group), (5, 3));
    }

    #[test]
    fn subset_match_lists_one_sided_mnemonics() {
        let series = |names: &[&str], tcode: u8| {
            names.iter().map(|n| Series { name: n.to_string(), tcode, group: None, factor: None, values: vec![Some(1.0)] }).collect::<Vec<_>>()
        };
        let d = vec![Date::new(2000, 1, 1).unwrap()];
        let md = RawDataset::new(Frequency::Monthly, d.clone(), series(&["HOUST", "INDPRO", "MDONLY"], 4)).unwrap();
        let qd = RawDataset::new(Frequency::Quarterly, vec![Date::new(2000, 3, 1).unwrap()], series(&["HOUST", "QDONLY"], 5)).unwrap();
        let m = match_md_qd_subset(&md, &qd, &MappingTable::shipped()).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!((m.pairs[0].mnemonic.as_str(), m.pairs[0].tcode, m.pairs[0].overridden()), ("HOUST", 5, true));
        assert!(m.missing_in_qd.contains(&"INDPRO".to_string()));
        assert_eq!(m.missing_in_md.len(), 100);
        let sub = m.apply(&md).unwrap();
        assert_eq!((sub.series()[0].tcode, sub.series()[0].group), (5, Some(3)));
    }
}
