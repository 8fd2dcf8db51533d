//! Regression-table rendering in text, delimited and JSON form.
//!
//! Text tables round to four significant digits. Delimited and JSON output
//! print every number at full precision and are the authoritative record.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{EstimationResult, CONSTANT};
use crate::panel::{format_period, CorrelationMatrix, PanelDataset, SummaryDecomposition};
use crate::spec_tests::{ar_name, ChowReport, SARGAN};

/// Placeholder for a coefficient estimated in another column but absent
/// from this one.
pub const ABSENT: &str = "------";
pub const MISSING: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(crate::Error::InvalidSpec(format!(
                "unknown format '{other}' (expected text, csv or json)"
            ))),
        }
    }
}

/// Significance marker at the 1, 5 and 10 percent levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Rounds to `digits` significant digits, keeping trailing zeros.
pub fn significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return MISSING.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding up can add a digit, e.g. 9.9996 -> 10.000
    let rounded: f64 = s.parse().unwrap_or(v);
    let new_mag = rounded.abs().log10().floor() as i32;
    if rounded != 0.0 && new_mag > magnitude && decimals > 0 {
        format!("{rounded:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn p4(p: Option<f64>) -> String {
    p.map_or(MISSING.into(), |p| format!("{p:.4}"))
}

/// One estimated column in a coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableColumn {
    pub label: String,
    pub result: EstimationResult,
}

/// Coefficient table in the usual layout: coefficients with stars and
/// standard errors beneath, then fit and diagnostic rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub title: String,
    pub columns: Vec<TableColumn>,
    pub notes: Vec<String>,
}

pub const FOOTER_ROWS: [&str; 6] = [
    "Observations",
    "R-squared",
    "Sargan test (P value)",
    "A-Bond Test AR(1)",
    "AR(2)",
    "Number of Banks",
];

impl CoefficientTable {
    pub fn new(title: &str, columns: Vec<(String, EstimationResult)>) -> Self {
        CoefficientTable {
            title: title.to_string(),
            columns: columns
                .into_iter()
                .map(|(label, result)| TableColumn { label, result })
                .collect(),
            notes: Vec::new(),
        }
    }

    /// Terms in display order: dependent lags, regressors in order of first
    /// appearance, CONSTANT last.
    pub fn terms(&self) -> Vec<String> {
        let mut terms: Vec<String> = Vec::new();
        for c in &self.columns {
            for t in c.result.terms.iter().chain(&c.result.unavailable) {
                if !terms.contains(t) {
                    terms.push(t.clone());
                }
            }
        }
        let rank = |t: &String| {
            if t.contains('.') {
                0
            } else if t == CONSTANT {
                2
            } else {
                1
            }
        };
        terms.sort_by_key(rank);
        terms
    }

    fn footer_cells(r: &EstimationResult) -> [String; 6] {
        let test_p = |name: &str| {
            r.test(name)
                .map_or(MISSING.into(), |t| p4(t.p_value))
        };
        [
            r.n_obs.to_string(),
            significant(r.r_squared, 4),
            test_p(SARGAN),
            test_p(&ar_name(1)),
            test_p(&ar_name(2)),
            r.n_banks.to_string(),
        ]
    }

    /// Cell text for `term` in column `c`, as (coefficient line, SE line).
    fn cell(&self, c: &TableColumn, term: &str) -> (String, String) {
        match c.result.coef(term) {
            Some(b) => {
                let p = c.result.p_value(term).unwrap_or(f64::NAN);
                let se = c.result.se(term).unwrap_or(f64::NAN);
                (
                    format!("{}{}", significant(b, 4), stars(p)),
                    format!("({})", significant(se, 4)),
                )
            }
            None if c.result.unavailable.iter().any(|u| u == term) => (MISSING.into(), String::new()),
            None => (ABSENT.into(), String::new()),
        }
    }

    pub fn render_text(&self) -> String {
        let terms = self.terms();
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["VARIABLES".to_string()];
        header.extend(self.columns.iter().map(|c| c.label.clone()));
        rows.push(header);
        for t in &terms {
            let cells: Vec<(String, String)> = self.columns.iter().map(|c| self.cell(c, t)).collect();
            let mut line = vec![t.clone()];
            line.extend(cells.iter().map(|c| c.0.clone()));
            rows.push(line);
            if cells.iter().any(|c| !c.1.is_empty()) {
                let mut se = vec![String::new()];
                se.extend(cells.into_iter().map(|c| c.1));
                rows.push(se);
            }
        }
        let footers: Vec<[String; 6]> = self.columns.iter().map(|c| Self::footer_cells(&c.result)).collect();
        let rule_at = rows.len();
        for (i, name) in FOOTER_ROWS.iter().enumerate() {
            let mut line = vec![name.to_string()];
            line.extend(footers.iter().map(|f| f[i].clone()));
            rows.push(line);
        }
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "{}", self.title);
        }
        out.push_str(&layout(&rows, &[1, rule_at]));
        out.push_str("Standard errors in parentheses; *** p<0.01, ** p<0.05, * p<0.1\n");
        for n in &self.notes {
            let _ = writeln!(out, "{n}");
        }
        out
    }

    /// Long-format delimited rows: table, column, term, field, value.
    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        let mut rows = Vec::new();
        for c in &self.columns {
            let r = &c.result;
            for (i, t) in r.terms.iter().enumerate() {
                let p = r.p_value(t).unwrap_or(f64::NAN);
                for (field, v) in [
                    ("coefficient", r.coefficients[i]),
                    ("std_error", r.standard_errors[i]),
                    ("p_value", p),
                ] {
                    rows.push([self.title.clone(), c.label.clone(), t.clone(), field.into(), full(v)]);
                }
            }
            let mut push = |field: &str, v: String| {
                rows.push([self.title.clone(), c.label.clone(), String::new(), field.into(), v]);
            };
            push("observations", r.n_obs.to_string());
            push("r_squared", full(r.r_squared));
            push("banks", r.n_banks.to_string());
            for t in &r.tests {
                push(&format!("{} statistic", t.name), full(t.statistic));
                push(&format!("{} p_value", t.name), t.p_value.map_or(String::new(), full));
            }
        }
        rows
    }
}

/// Shortest representation that parses back to the same value.
pub fn full(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Pads rows into aligned columns with a rule after the given row counts.
fn layout(rows: &[Vec<String>], rules_after: &[usize]) -> String {
    layout_left(rows, rules_after, 1)
}

/// Like [`layout`] with the first `left` columns left-aligned.
fn layout_left(rows: &[Vec<String>], rules_after: &[usize], left: usize) -> String {
    let ncol = rows.iter().map(Vec::len).max().unwrap_or(0);
    let width: Vec<usize> = (0..ncol)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let total: usize = width.iter().sum::<usize>() + 2 * ncol.saturating_sub(1);
    let mut out = String::new();
    let rule = "-".repeat(total);
    let _ = writeln!(out, "{rule}");
    for (i, r) in rows.iter().enumerate() {
        if rules_after.contains(&i) {
            let _ = writeln!(out, "{rule}");
        }
        let mut line = String::new();
        for (j, cell) in r.iter().enumerate() {
            let sep = if j == 0 { "" } else { "  " };
            if j < left {
                let _ = write!(line, "{sep}{cell:<w$}", w = width[j]);
            } else {
                let _ = write!(line, "{sep}{cell:>w$}", w = width[j]);
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    let _ = writeln!(out, "{rule}");
    out
}

pub fn render_csv(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

pub fn table_csv(tables: &[&CoefficientTable]) -> String {
    let mut rows = vec![vec!["table", "column", "term", "field", "value"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()];
    for t in tables {
        rows.extend(t.csv_rows().into_iter().map(|r| r.to_vec()));
    }
    render_csv(&rows)
}

/// Summary statistics in the overall/between/within layout.
pub fn render_summary(stats: &[SummaryDecomposition]) -> String {
    let mut rows = vec![vec![
        "Variable".to_string(),
        String::new(),
        "Mean".into(),
        "Std. Dev.".into(),
        "Min".into(),
        "Max".into(),
        "Observations".into(),
    ]];
    for s in stats {
        let f = |v: f64| format!("{v:.3}");
        rows.push(vec![
            s.variable.clone(),
            "Overall".into(),
            f(s.mean),
            f(s.sd_overall),
            f(s.min_overall),
            f(s.max_overall),
            format!("N = {}", s.n_obs),
        ]);
        rows.push(vec![
            String::new(),
            "Between".into(),
            String::new(),
            f(s.sd_between),
            f(s.min_between),
            f(s.max_between),
            format!("n = {}", s.n_banks),
        ]);
        rows.push(vec![
            String::new(),
            "Within".into(),
            String::new(),
            f(s.sd_within),
            f(s.min_within),
            f(s.max_within),
            format!("T = {}", s.periods),
        ]);
    }
    format!("Summary Statistics\n{}", layout_left(&rows, &[1], 2))
}

/// Lower triangle of the correlation matrix, 1 on the diagonal.
pub fn render_correlation(c: &CorrelationMatrix) -> String {
    let mut rows = vec![std::iter::once(String::new()).chain(c.names.iter().cloned()).collect::<Vec<_>>()];
    for (i, name) in c.names.iter().enumerate() {
        let mut r = vec![name.clone()];
        for j in 0..=i {
            r.push(if i == j { "1".into() } else { format!("{:.3}", c.matrix[(i, j)]) });
        }
        rows.push(r);
    }
    format!("Cross Correlation Matrix\n{}", layout(&rows, &[1]))
}

pub fn render_chow(report: &ChowReport) -> String {
    let mut out = format!("Chow equality tests ({})\n", report.variant);
    let mut rows = vec![vec![
        "Group".to_string(),
        "Term".into(),
        "Difference".into(),
        "Std. Err.".into(),
        "F".into(),
        "P value".into(),
    ]];
    for g in &report.groups {
        rows.push(vec![
            g.group.as_str().to_uppercase(),
            "joint".into(),
            String::new(),
            String::new(),
            significant(g.joint.statistic, 4),
            p4(g.joint.p_value),
        ]);
        for c in &g.coefficients {
            rows.push(vec![
                String::new(),
                c.term.clone(),
                significant(c.difference, 4),
                significant(c.standard_error, 4),
                significant(c.test.statistic, 4),
                p4(c.test.p_value),
            ]);
        }
    }
    out.push_str(&layout_left(&rows, &[1], 2));
    out
}

pub fn render_test(t: &crate::model::TestResult) -> String {
    let df = match t.df {
        crate::model::Df::Single(d) => d.to_string(),
        crate::model::Df::Pair(a, b) => format!("{a}, {b}"),
    };
    let mut s = format!(
        "{}: statistic = {:.2}, df = {}, Prob = {}\n  H0: {}\n",
        t.name,
        t.statistic,
        df,
        p4(t.p_value),
        t.null_description
    );
    for f in &t.flags {
        let _ = writeln!(s, "  note: {f}");
    }
    s
}

/// Periods covered by a dataset, for report headers.
pub fn period_span(data: &PanelDataset) -> String {
    match (data.periods().first(), data.periods().last()) {
        (Some(&a), Some(&b)) => format!(
            "{} to {}",
            format_period(a, data.period_style()),
            format_period(b, data.period_style())
        ),
        _ => String::new(),
    }
}
