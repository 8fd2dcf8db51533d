//! Balanced bank-by-quarter panels: ingestion, re-emission, transforms and
//! descriptive statistics.
//!
//! Rows are kept in canonical order (bank, then period). Banks are ordered
//! numerically when every id parses as an integer and lexically otherwise,
//! so the same observations always produce the same dataset regardless of
//! the order of the input rows.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub const BANK_COLUMN: &str = "bank_id";
pub const PERIOD_COLUMN: &str = "period";
pub const OWNERSHIP_COLUMN: &str = "ownership";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ownership {
    Foreign,
    State,
    Private,
}

impl Ownership {
    pub const ALL: [Ownership; 3] = [Ownership::Foreign, Ownership::State, Ownership::Private];

    pub fn as_str(self) -> &'static str {
        match self {
            Ownership::Foreign => "foreign",
            Ownership::State => "state",
            Ownership::Private => "private",
        }
    }
}

impl fmt::Display for Ownership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ownership {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "foreign" => Ok(Ownership::Foreign),
            "state" => Ok(Ownership::State),
            "private" => Ok(Ownership::Private),
            other => Err(other.to_string()),
        }
    }
}

/// How periods were written in the source; re-emission uses the same style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeriodStyle {
    /// `YYYYQn`, stored as the ordinal `year * 4 + quarter - 1`.
    Quarter,
    Integer,
}

pub fn quarter_ordinal(year: i64, quarter: i64) -> i64 {
    year * 4 + quarter - 1
}

pub fn format_period(period: i64, style: PeriodStyle) -> String {
    match style {
        PeriodStyle::Integer => period.to_string(),
        PeriodStyle::Quarter => {
            let year = period.div_euclid(4);
            let quarter = period.rem_euclid(4) + 1;
            format!("{year}Q{quarter}")
        }
    }
}

fn parse_period(raw: &str) -> Option<(i64, PeriodStyle)> {
    let s = raw.trim();
    if let Some(pos) = s.find(['Q', 'q']) {
        let year: i64 = s[..pos].parse().ok()?;
        let quarter: i64 = s[pos + 1..].parse().ok()?;
        if !(1..=4).contains(&quarter) {
            return None;
        }
        return Some((quarter_ordinal(year, quarter), PeriodStyle::Quarter));
    }
    s.parse().ok().map(|p| (p, PeriodStyle::Integer))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bank {
    pub id: String,
    pub ownership: Ownership,
}

/// One (bank, period) cell key. `bank` indexes [`PanelDataset::banks`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub bank: usize,
    pub period: i64,
}

/// Immutable panel of numeric series keyed by (bank, period).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    banks: Vec<Bank>,
    rows: Vec<RowKey>,
    bank_ranges: Vec<Range<usize>>,
    periods: Vec<i64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    balanced: bool,
    period_style: PeriodStyle,
}

/// One observation handed to [`PanelDataset::from_records`].
#[derive(Debug, Clone)]
pub struct Record {
    pub bank: String,
    pub ownership: Ownership,
    pub period: i64,
    pub values: Vec<f64>,
}

fn compare_ids(a: &str, b: &str, numeric: bool) -> Ordering {
    if numeric {
        let x: i64 = a.parse().unwrap_or(0);
        let y: i64 = b.parse().unwrap_or(0);
        x.cmp(&y).then_with(|| a.cmp(b))
    } else {
        a.cmp(b)
    }
}

impl PanelDataset {
    /// Builds a dataset from unordered records, enforcing the key, ownership
    /// and finiteness invariants. `source_rows` gives the line number of each
    /// record for error messages (pass `None` to use 1-based record indices).
    pub fn from_records(
        names: Vec<String>,
        records: Vec<Record>,
        period_style: PeriodStyle,
        source_rows: Option<&[usize]>,
    ) -> Result<Self> {
        let row_no = |i: usize| source_rows.map_or(i + 1, |r| r[i]);
        for (i, rec) in records.iter().enumerate() {
            if rec.values.len() != names.len() {
                return Err(Error::Parse {
                    line: row_no(i),
                    message: format!(
                        "expected {} values, found {}",
                        names.len(),
                        rec.values.len()
                    ),
                });
            }
            if let Some(j) = rec.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::BadCell {
                    row: row_no(i),
                    column: names[j].clone(),
                    value: rec.values[j].to_string(),
                });
            }
        }
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if [BANK_COLUMN, PERIOD_COLUMN, OWNERSHIP_COLUMN].contains(&name.as_str())
                || seen.insert(name.clone(), i).is_some()
            {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("duplicate or reserved column name '{name}'"),
                });
            }
        }

        let mut owners: HashMap<&str, Ownership> = HashMap::new();
        for rec in &records {
            match owners.get(rec.bank.as_str()) {
                Some(o) if *o != rec.ownership => {
                    return Err(Error::InconsistentOwnership {
                        bank: rec.bank.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    owners.insert(rec.bank.as_str(), rec.ownership);
                }
            }
        }
        let numeric = owners.keys().all(|id| id.parse::<i64>().is_ok());
        let mut ids: Vec<&str> = owners.keys().copied().collect();
        ids.sort_by(|a, b| compare_ids(a, b, numeric));
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let banks: Vec<Bank> = ids
            .iter()
            .map(|id| Bank {
                id: id.to_string(),
                ownership: owners[id],
            })
            .collect();

        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by_key(|&i| (index[records[i].bank.as_str()], records[i].period, i));
        for w in order.windows(2) {
            let (a, b) = (&records[w[0]], &records[w[1]]);
            if a.bank == b.bank && a.period == b.period {
                let (first, second) = (row_no(w[0]).min(row_no(w[1])), row_no(w[0]).max(row_no(w[1])));
                return Err(Error::DuplicateKey {
                    bank: a.bank.clone(),
                    period: format_period(a.period, period_style),
                    first_row: first,
                    second_row: second,
                });
            }
        }

        let rows: Vec<RowKey> = order
            .iter()
            .map(|&i| RowKey {
                bank: index[records[i].bank.as_str()],
                period: records[i].period,
            })
            .collect();
        let columns: Vec<Vec<f64>> = (0..names.len())
            .map(|j| order.iter().map(|&i| records[i].values[j]).collect())
            .collect();
        Ok(Self::assemble(banks, rows, names, columns, period_style))
    }

    /// Builds a balanced dataset from bank-major columns of length
    /// `banks.len() * periods.len()`.
    pub fn from_balanced(
        banks: Vec<Bank>,
        periods: Vec<i64>,
        columns: Vec<(String, Vec<f64>)>,
        period_style: PeriodStyle,
    ) -> Result<Self> {
        let t = periods.len();
        let records: Vec<Record> = banks
            .iter()
            .enumerate()
            .flat_map(|(b, bank)| {
                let cols = &columns;
                periods.iter().enumerate().map(move |(s, &p)| Record {
                    bank: bank.id.clone(),
                    ownership: bank.ownership,
                    period: p,
                    values: cols.iter().map(|(_, v)| v[b * t + s]).collect(),
                })
            })
            .collect();
        for (name, v) in &columns {
            if v.len() != banks.len() * t {
                return Err(Error::Dimension(format!(
                    "column '{name}' has {} values, expected {}",
                    v.len(),
                    banks.len() * t
                )));
            }
        }
        let names = columns.iter().map(|(n, _)| n.clone()).collect();
        Self::from_records(names, records, period_style, None)
    }

    fn assemble(
        banks: Vec<Bank>,
        rows: Vec<RowKey>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        period_style: PeriodStyle,
    ) -> Self {
        let mut bank_ranges = vec![0..0; banks.len()];
        let mut start = 0;
        for b in 0..banks.len() {
            let mut end = start;
            while end < rows.len() && rows[end].bank == b {
                end += 1;
            }
            bank_ranges[b] = start..end;
            start = end;
        }
        let mut periods: Vec<i64> = rows.iter().map(|r| r.period).collect();
        periods.sort_unstable();
        periods.dedup();
        let contiguous = periods.windows(2).all(|w| w[1] == w[0] + 1);
        let balanced = !banks.is_empty()
            && contiguous
            && bank_ranges.iter().all(|r| {
                r.len() == periods.len()
                    && rows[r.clone()].iter().zip(&periods).all(|(k, p)| k.period == *p)
            });
        PanelDataset {
            banks,
            rows,
            bank_ranges,
            periods,
            names,
            columns,
            balanced,
            period_style,
        }
    }

    fn rebuild(&self, keep: &[usize], names: Vec<String>, columns: Vec<Vec<f64>>) -> Self {
        // keep: row indices into self, already in canonical order
        let mut used = vec![false; self.banks.len()];
        for &i in keep {
            used[self.rows[i].bank] = true;
        }
        let mut remap = vec![usize::MAX; self.banks.len()];
        let mut banks = Vec::new();
        for (b, bank) in self.banks.iter().enumerate() {
            if used[b] {
                remap[b] = banks.len();
                banks.push(bank.clone());
            }
        }
        let rows = keep
            .iter()
            .map(|&i| RowKey {
                bank: remap[self.rows[i].bank],
                period: self.rows[i].period,
            })
            .collect();
        Self::assemble(banks, rows, names, columns, self.period_style)
    }

    pub fn banks(&self) -> &[Bank] {
        &self.banks
    }

    pub fn rows(&self) -> &[RowKey] {
        &self.rows
    }

    pub fn periods(&self) -> &[i64] {
        &self.periods
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn period_style(&self) -> PeriodStyle {
        self.period_style
    }

    pub fn n_banks(&self) -> usize {
        self.banks.len()
    }

    pub fn n_obs(&self) -> usize {
        self.rows.len()
    }

    /// Number of distinct periods (T for a balanced panel).
    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.columns[j].as_slice())
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Row indices belonging to bank `b`.
    pub fn bank_rows(&self, b: usize) -> Range<usize> {
        self.bank_ranges[b].clone()
    }

    pub fn bank_index(&self, id: &str) -> Option<usize> {
        self.banks.iter().position(|b| b.id == id)
    }

    /// Returns `T` or an unsupported-shape error.
    pub fn require_balanced(&self) -> Result<usize> {
        if self.balanced {
            Ok(self.periods.len())
        } else {
            Err(Error::UnsupportedShape(
                "operation requires a balanced panel with a common contiguous period range".into(),
            ))
        }
    }

    /// Dataset with `name` added, or replaced when it already exists.
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.rows.len() {
            return Err(Error::Dimension(format!(
                "column '{name}' has {} values for {} rows",
                values.len(),
                self.rows.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::BadCell {
                row: 0,
                column: name.to_string(),
                value: v.to_string(),
            });
        }
        let mut out = self.clone();
        match out.names.iter().position(|n| n == name) {
            Some(j) => out.columns[j] = values,
            None => {
                out.names.push(name.to_string());
                out.columns.push(values);
            }
        }
        Ok(out)
    }

    /// Keeps only the banks for which `keep` returns true.
    pub fn filter_banks(&self, keep: impl Fn(&Bank) -> bool) -> Self {
        let rows: Vec<usize> = (0..self.rows.len())
            .filter(|&i| keep(&self.banks[self.rows[i].bank]))
            .collect();
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&i| c[i]).collect())
            .collect();
        self.rebuild(&rows, self.names.clone(), columns)
    }

    pub fn ownership_groups(&self) -> Vec<Ownership> {
        let mut groups: Vec<Ownership> = self.banks.iter().map(|b| b.ownership).collect();
        groups.sort();
        groups.dedup();
        groups
    }

    /// Per-bank means of a column, in bank order.
    pub fn bank_means(&self, name: &str) -> Result<Vec<f64>> {
        let col = self.column(name)?;
        Ok(self
            .bank_ranges
            .iter()
            .map(|r| col[r.clone()].iter().sum::<f64>() / r.len() as f64)
            .collect())
    }
}

/// Reads a delimiter-separated panel. The delimiter is a comma unless the
/// header contains a tab and no comma. `schema` lists the variable columns
/// to keep (all non-key columns when empty).
pub fn load_panel<R: Read>(mut source: R, schema: &[String]) -> Result<PanelDataset> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let header = text.lines().next().unwrap_or("");
    let delimiter = if header.contains('\t') && !header.contains(',') {
        b'\t'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let bank_col = find(BANK_COLUMN)?;
    let period_col = find(PERIOD_COLUMN)?;
    let owner_col = find(OWNERSHIP_COLUMN)?;
    let var_names: Vec<String> = if schema.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| ![bank_col, period_col, owner_col].contains(i))
            .map(|(_, h)| h.clone())
            .collect()
    } else {
        schema.to_vec()
    };
    let var_cols = var_names
        .iter()
        .map(|n| find(n))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut style: Option<PeriodStyle> = None;
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let bank = rec.get(bank_col).unwrap_or("").to_string();
        if bank.is_empty() {
            return Err(Error::BadCell {
                row: line,
                column: BANK_COLUMN.into(),
                value: String::new(),
            });
        }
        let raw_period = rec.get(period_col).unwrap_or("");
        let (period, this_style) = parse_period(raw_period).ok_or_else(|| Error::BadCell {
            row: line,
            column: PERIOD_COLUMN.into(),
            value: raw_period.to_string(),
        })?;
        match style {
            None => style = Some(this_style),
            Some(s) if s != this_style => {
                return Err(Error::Parse {
                    line,
                    message: "mixed period formats (YYYYQn and integer)".into(),
                })
            }
            _ => {}
        }
        let raw_owner = rec.get(owner_col).unwrap_or("");
        let ownership: Ownership = raw_owner.parse().map_err(|label| Error::UnknownOwnership {
            row: line,
            label,
        })?;
        let values = var_cols
            .iter()
            .zip(&var_names)
            .map(|(&c, name)| {
                let raw = rec.get(c).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::BadCell {
                        row: line,
                        column: name.clone(),
                        value: raw.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        records.push(Record {
            bank,
            ownership,
            period,
            values,
        });
        lines.push(line);
    }
    PanelDataset::from_records(
        var_names,
        records,
        style.unwrap_or(PeriodStyle::Integer),
        Some(&lines),
    )
}

pub fn read_panel_file(path: &Path, schema: &[String]) -> Result<PanelDataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("cannot open {}: {e}", path.display())))?;
    load_panel(file, schema)
}

/// Writes the panel in the ingestion format. Floats use Rust's shortest
/// round-trip representation, so re-reading reproduces every value exactly.
pub fn write_panel<W: Write>(data: &PanelDataset, sink: W, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(sink);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec![BANK_COLUMN.to_string(), PERIOD_COLUMN.into(), OWNERSHIP_COLUMN.into()];
    header.extend(data.names.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (i, key) in data.rows.iter().enumerate() {
        let bank = &data.banks[key.bank];
        let mut rec = vec![
            bank.id.clone(),
            format_period(key.period, data.period_style),
            bank.ownership.to_string(),
        ];
        rec.extend(data.columns.iter().map(|c| c[i].to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Overall / between / within decomposition of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDecomposition {
    pub variable: String,
    pub mean: f64,
    pub sd_overall: f64,
    pub sd_between: f64,
    pub sd_within: f64,
    pub min_overall: f64,
    pub max_overall: f64,
    pub min_between: f64,
    pub max_between: f64,
    pub min_within: f64,
    pub max_within: f64,
    pub ss_overall: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    /// Observation count.
    pub n_obs: usize,
    pub n_banks: usize,
    pub periods: usize,
}

/// Overall, between and within statistics.
///
/// Between statistics are over bank means (sd with `n - 1`); within
/// statistics are over `x_it - xbar_i + xbar` (sd with `N - 1`). The sums of
/// squares satisfy `SS_overall = T * sum_i (xbar_i - xbar)^2 + SS_within`.
pub fn summarize(data: &PanelDataset, var: &str) -> Result<SummaryDecomposition> {
    let col = data.column(var)?;
    let t = data.require_balanced()?;
    let n = data.n_banks();
    let big_n = data.n_obs();
    let mean = col.iter().sum::<f64>() / big_n as f64;
    let means = data.bank_means(var)?;

    let ss_overall: f64 = col.iter().map(|x| (x - mean).powi(2)).sum();
    let ss_means: f64 = means.iter().map(|m| (m - mean).powi(2)).sum();
    let ss_between = t as f64 * ss_means;
    let mut ss_within = 0.0;
    let mut min_within = f64::INFINITY;
    let mut max_within = f64::NEG_INFINITY;
    for (b, m) in means.iter().enumerate() {
        for &x in &col[data.bank_rows(b)] {
            let dev = x - m;
            ss_within += dev * dev;
            let w = dev + mean;
            min_within = min_within.min(w);
            max_within = max_within.max(w);
        }
    }
    let df = |d: usize| if d > 0 { d as f64 } else { f64::NAN };
    let fold = |it: &mut dyn Iterator<Item = f64>| {
        it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let (min_overall, max_overall) = fold(&mut col.iter().copied());
    let (min_between, max_between) = fold(&mut means.iter().copied());
    Ok(SummaryDecomposition {
        variable: var.to_string(),
        mean,
        sd_overall: (ss_overall / df(big_n - 1)).sqrt(),
        sd_between: (ss_means / df(n.saturating_sub(1))).sqrt(),
        sd_within: (ss_within / df(big_n - 1)).sqrt(),
        min_overall,
        max_overall,
        min_between,
        max_between,
        min_within,
        max_within,
        ss_overall,
        ss_between,
        ss_within,
        n_obs: big_n,
        n_banks: n,
        periods: t,
    })
}

/// Pearson correlation matrix over all observations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub matrix: DenseMatrix,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.matrix[(i, j)])
    }
}

pub fn correlation_matrix(data: &PanelDataset, vars: &[String]) -> Result<CorrelationMatrix> {
    if vars.len() < 2 {
        return Err(Error::InvalidSpec(
            "correlation matrix needs at least two variables".into(),
        ));
    }
    let n = data.n_obs() as f64;
    let mut centered = Vec::with_capacity(vars.len());
    for v in vars {
        let col = data.column(v)?;
        let mean = col.iter().sum::<f64>() / n;
        let dev: Vec<f64> = col.iter().map(|x| x - mean).collect();
        let ss: f64 = dev.iter().map(|d| d * d).sum();
        if ss <= 0.0 {
            return Err(Error::ZeroVariance(v.clone()));
        }
        centered.push((dev, ss.sqrt()));
    }
    let k = vars.len();
    let mut m = DenseMatrix::identity(k, k);
    for i in 0..k {
        for j in 0..i {
            let (a, na) = &centered[i];
            let (b, nb) = &centered[j];
            let r = (a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)).clamp(-1.0, 1.0);
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: vars.to_vec(),
        matrix: m,
    })
}

/// Replaces each listed column by its deviation from the bank mean.
pub fn within_demean(data: &PanelDataset, vars: &[String]) -> Result<PanelDataset> {
    let mut out = data.clone();
    for v in vars {
        let col = data.column(v)?;
        let means = data.bank_means(v)?;
        let mut dev = vec![0.0; col.len()];
        for (b, m) in means.iter().enumerate() {
            for i in data.bank_rows(b) {
                dev[i] = col[i] - m;
            }
        }
        out = out.with_column(v, dev)?;
    }
    Ok(out)
}

/// First differences of the listed columns; the first period of every bank
/// is dropped and unlisted columns keep their period-t values.
pub fn first_difference(data: &PanelDataset, vars: &[String]) -> Result<PanelDataset> {
    let t = data.require_balanced()?;
    if t < 2 {
        return Err(Error::UnsupportedShape(
            "first differencing needs at least two periods".into(),
        ));
    }
    for v in vars {
        data.column(v)?;
    }
    let keep: Vec<usize> = (0..data.n_banks())
        .flat_map(|b| data.bank_rows(b).skip(1))
        .collect();
    let columns = data
        .names
        .iter()
        .zip(&data.columns)
        .map(|(name, col)| {
            let diff = vars.contains(name);
            keep.iter()
                .map(|&i| if diff { col[i] - col[i - 1] } else { col[i] })
                .collect()
        })
        .collect();
    Ok(data.rebuild(&keep, data.names.clone(), columns))
}

/// A lagged series aligned to the rows of its source dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedColumn {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Conventional lag label: `L.NIM`, `L2.NIM`, ...
pub fn lag_label(var: &str, k: usize) -> String {
    if k == 1 {
        format!("L.{var}")
    } else {
        format!("L{k}.{var}")
    }
}

/// Value of `var` at (bank, period - k); `None` where that cell does not
/// exist in the same bank.
pub fn lag(data: &PanelDataset, var: &str, k: usize) -> Result<LaggedColumn> {
    let col = data.column(var)?;
    if k == 0 {
        return Err(Error::InvalidSpec("lag order must be at least 1".into()));
    }
    if k >= data.n_periods() {
        return Err(Error::UnsupportedShape(format!(
            "lag {k} needs more than {} periods",
            data.n_periods()
        )));
    }
    let mut values = vec![None; col.len()];
    for b in 0..data.n_banks() {
        let range = data.bank_rows(b);
        let rows = &data.rows[range.clone()];
        for (offset, key) in rows.iter().enumerate() {
            let target = key.period - k as i64;
            if let Ok(pos) = rows.binary_search_by_key(&target, |r| r.period) {
                values[range.start + offset] = Some(col[range.start + pos]);
            }
        }
    }
    Ok(LaggedColumn {
        name: lag_label(var, k),
        values,
    })
}

/// Adds `target = log10(source)`; every source value must be positive.
pub fn derive_log10(data: &PanelDataset, source: &str, target: &str) -> Result<PanelDataset> {
    let col = data.column(source)?;
    if let Some(i) = col.iter().position(|v| *v <= 0.0) {
        return Err(Error::BadCell {
            row: i + 2,
            column: source.to_string(),
            value: col[i].to_string(),
        });
    }
    data.with_column(target, col.iter().map(|v| v.log10()).collect())
}
