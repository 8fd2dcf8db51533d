//! Command-line front end: configuration, subsample drivers and commands.
//!
//! Settings come from defaults, then a flat `key = value` file given by
//! `--spec`, then command-line flags, each overriding the previous. The
//! seed falls back to the `PANEL_SEED` environment variable when neither
//! the file nor the flags set it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{EstimationResult, Estimator, ModelSpec, Weighting};
use crate::panel::{correlation_matrix, read_panel_file, summarize, write_panel, Ownership, PanelDataset};
use crate::report::{self, CoefficientTable, Format};
use crate::simulation::{generate_panel, monte_carlo, turkey_like};
use crate::spec_tests::{bp_lm_test, chow_test, hausman_test, wald_joint};
use crate::variables::{codes_in_block, Block};

pub const SEED_ENV: &str = "PANEL_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "nimpanel", version, about = "Panel estimators for bank net interest margins")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Describe,
    Estimate,
    Ownership,
    Robustness,
    Simulate,
    Test,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Correlation matrix and overall/between/within summary statistics.
    Describe(Args),
    /// POLS, FE, RE and GMM columns (or one estimator with --estimator).
    Estimate(Args),
    /// GMM by ownership group plus the full sample, with Chow tests.
    Ownership(Args),
    /// Baseline GMM under the six robustness scenarios.
    Robustness(Args),
    /// Write a simulated panel, or run a Monte Carlo study with --reps.
    Simulate(Args),
    /// Breusch-Pagan, Hausman, Wald, Sargan and Arellano-Bond tests.
    Test(Args),
}

impl Command {
    pub fn split(&self) -> (CommandKind, &Args) {
        match self {
            Command::Describe(a) => (CommandKind::Describe, a),
            Command::Estimate(a) => (CommandKind::Estimate, a),
            Command::Ownership(a) => (CommandKind::Ownership, a),
            Command::Robustness(a) => (CommandKind::Robustness, a),
            Command::Simulate(a) => (CommandKind::Simulate, a),
            Command::Test(a) => (CommandKind::Test, a),
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Args {
    /// Panel file (bank, period, ownership, then variables).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Key-value configuration file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// pols, fe, re, diff-gmm or sys-gmm.
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub dep_lags: Option<usize>,
    /// Deepest lagged level used as an instrument ("none" for all).
    #[arg(long)]
    pub max_ilag: Option<String>,
    #[arg(long)]
    pub collapse: bool,
    #[arg(long)]
    pub two_step: bool,
    /// Finite-sample correction of two-step standard errors.
    #[arg(long)]
    pub windmeijer: bool,
    /// Restrict to one ownership group: foreign, state or private.
    #[arg(long)]
    pub group: Option<String>,
    /// Comma-separated bank ids to exclude.
    #[arg(long, value_delimiter = ',')]
    pub drop_banks: Option<Vec<String>>,
    /// Robustness scenario: 1-6 or ssmpl, nostt, nofrgn, newsize, crdt, iirate.
    #[arg(long)]
    pub scenario: Option<String>,
    /// text, csv or json.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo replications for `simulate`.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Output file for `simulate` (standard output otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scenario {
    Ssmpl,
    Nostt,
    Nofrgn,
    Newsize,
    Crdt,
    Iirate,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Ssmpl,
        Scenario::Nostt,
        Scenario::Nofrgn,
        Scenario::Newsize,
        Scenario::Crdt,
        Scenario::Iirate,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::Ssmpl => "SSMPL",
            Scenario::Nostt => "NOSTT",
            Scenario::Nofrgn => "NOFRGN",
            Scenario::Newsize => "NEWSIZE",
            Scenario::Crdt => "CRDT",
            Scenario::Iirate => "IIRATE",
        }
    }

    pub fn id(self) -> usize {
        Scenario::ALL.iter().position(|s| *s == self).expect("listed") + 1
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Scenario::ALL
            .iter()
            .copied()
            .find(|sc| t.eq_ignore_ascii_case(sc.label()) || t == sc.id().to_string())
            .ok_or_else(|| Error::InvalidSpec(format!("unknown robustness scenario '{s}'")))
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub spec: ModelSpec,
    /// Explicit estimator; `None` runs the four-column comparison.
    pub estimator: Option<Estimator>,
    pub group: Option<Ownership>,
    pub drop_banks: Vec<String>,
    pub scenario: Option<Scenario>,
    pub format: Format,
    pub seed: u64,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            spec: ModelSpec::baseline(Estimator::SysGmm),
            estimator: None,
            group: None,
            drop_banks: Vec::new(),
            scenario: None,
            format: Format::Text,
            seed: DEFAULT_SEED,
            reps: None,
            out: None,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        out.insert(k.trim().replace('-', "_").to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidSpec(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("{key}: cannot parse '{v}'")))
}

fn parse_max_lag(v: &str) -> Result<Option<usize>> {
    if matches!(v.to_ascii_lowercase().as_str(), "none" | "all" | "unlimited") {
        Ok(None)
    } else {
        parse_num("max_ilag", v).map(Some)
    }
}

fn parse_group(v: &str) -> Result<Ownership> {
    v.parse().map_err(|e: String| Error::InvalidSpec(e))
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl RunConfig {
    fn apply(&mut self, key: &str, v: &str) -> Result<()> {
        let s = &mut self.spec;
        match key {
            "data" => self.data = Some(PathBuf::from(v)),
            "dependent" => s.dependent = v.to_string(),
            "estimator" => self.estimator = Some(v.parse()?),
            "dep_lags" => s.dep_lags = parse_num(key, v)?,
            "min_ilag" => s.instruments.min_lag = parse_num(key, v)?,
            "max_ilag" => s.instruments.max_lag = parse_max_lag(v)?,
            "collapse" => s.instruments.collapse = parse_bool(key, v)?,
            "two_step" => {
                s.weighting = if parse_bool(key, v)? {
                    Weighting::TwoStep
                } else {
                    Weighting::OneStep
                }
            }
            "windmeijer" => s.windmeijer = parse_bool(key, v)?,
            "cluster" | "cluster_robust" => s.cluster_robust = parse_bool(key, v)?,
            "constant" => s.include_constant = parse_bool(key, v)?,
            "pim" => s.pim = list(v),
            "bank_specific" => s.bank_specific = list(v),
            "macro" | "macro_market" => s.macro_market = list(v),
            "exogenous" => s.instruments.exogenous = list(v),
            "group" => self.group = Some(parse_group(v)?),
            "drop_banks" => self.drop_banks = list(v),
            "scenario" => self.scenario = Some(v.parse()?),
            "format" => self.format = v.parse()?,
            "seed" => self.seed = parse_num(key, v)?,
            "reps" => self.reps = Some(parse_num(key, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            other => return Err(Error::InvalidSpec(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Merges defaults, the optional `--spec` file, and flags. `env_seed` is
    /// the value of `PANEL_SEED`, if set.
    pub fn resolve(args: &Args, env_seed: Option<&str>) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seed_set = false;
        if let Some(path) = &args.spec {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
            for (k, v) in parse_key_values(&text)? {
                seed_set |= k == "seed";
                cfg.apply(&k, &v)?;
            }
        }
        if !seed_set {
            if let Some(s) = env_seed {
                cfg.seed = parse_num(SEED_ENV, s)?;
            }
        }
        if let Some(p) = &args.data {
            cfg.data = Some(p.clone());
        }
        if let Some(e) = &args.estimator {
            cfg.estimator = Some(e.parse()?);
        }
        if let Some(l) = args.dep_lags {
            cfg.spec.dep_lags = l;
        }
        if let Some(m) = &args.max_ilag {
            cfg.spec.instruments.max_lag = parse_max_lag(m)?;
        }
        if args.collapse {
            cfg.spec.instruments.collapse = true;
        }
        if args.two_step {
            cfg.spec.weighting = Weighting::TwoStep;
        }
        if args.windmeijer {
            cfg.spec.windmeijer = true;
        }
        if let Some(g) = &args.group {
            cfg.group = Some(parse_group(g)?);
        }
        if let Some(d) = &args.drop_banks {
            cfg.drop_banks = d.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if let Some(s) = &args.scenario {
            cfg.scenario = Some(s.parse()?);
        }
        if let Some(f) = &args.format {
            cfg.format = f.parse()?;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if args.reps.is_some() {
            cfg.reps = args.reps;
        }
        if args.out.is_some() {
            cfg.out = args.out.clone();
        }
        Ok(cfg)
    }

    /// The GMM variant used where a dynamic estimate is required.
    pub fn gmm_estimator(&self) -> Estimator {
        match self.estimator {
            Some(e) if e.is_gmm() => e,
            _ => Estimator::SysGmm,
        }
    }

    /// Model for `estimator`: static estimators drop dependent lags unless
    /// the configuration asked for that estimator explicitly.
    pub fn spec_for(&self, estimator: Estimator) -> ModelSpec {
        let mut spec = self.spec.clone().with_estimator(estimator);
        if !estimator.is_gmm() && self.estimator != Some(estimator) {
            spec.dep_lags = 0;
        }
        spec
    }
}

/// Loads the configured panel and applies the group and bank filters.
pub fn load_data(cfg: &RunConfig) -> Result<PanelDataset> {
    let path = cfg
        .data
        .as_deref()
        .ok_or_else(|| Error::Io("no data file given (use --data PATH)".into()))?;
    let data = read_data(path)?;
    Ok(filter(&data, cfg.group, &cfg.drop_banks))
}

fn read_data(path: &Path) -> Result<PanelDataset> {
    if !path.exists() {
        return Err(Error::Io(format!("data file not found: {}", path.display())));
    }
    read_panel_file(path, &[])
}

pub fn filter(data: &PanelDataset, group: Option<Ownership>, drop: &[String]) -> PanelDataset {
    if group.is_none() && drop.is_empty() {
        return data.clone();
    }
    data.filter_banks(|b| group.is_none_or(|g| b.ownership == g) && !drop.contains(&b.id))
}

/// Rendered output of a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
}

fn machine<T: Serialize>(format: Format, value: &T, csv: impl FnOnce() -> String, text: impl FnOnce() -> String) -> Result<Output> {
    let body = match format {
        Format::Text => text(),
        Format::Csv => csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    Ok(Output { body })
}

/// Estimates every requested column.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<Output> {
    let data = load_data(cfg)?;
    let estimators = match cfg.estimator {
        Some(e) => vec![e],
        None => vec![Estimator::Pols, Estimator::Fe, Estimator::Re, cfg.gmm_estimator()],
    };
    let mut columns = Vec::new();
    for e in estimators {
        let r = crate::estimate(&cfg.spec_for(e), &data)?;
        columns.push((e.column_label().to_string(), r));
    }
    let mut table = CoefficientTable::new(
        &format!("Dependent variable: {} ({})", cfg.spec.dependent, report::period_span(&data)),
        columns,
    );
    table.notes = gmm_notes(&table);
    let results: Vec<&EstimationResult> = table.columns.iter().map(|c| &c.result).collect();
    machine(
        cfg.format,
        &json!({ "command": "estimate", "results": results }),
        || report::table_csv(&[&table]),
        || table.render_text(),
    )
}

fn gmm_notes(table: &CoefficientTable) -> Vec<String> {
    let mut notes = Vec::new();
    for c in &table.columns {
        if let Some(i) = &c.result.instruments {
            notes.push(format!(
                "{}: {}, {} instruments for {} parameters (lags {}..{}{}), {} weighting; R-squared is the squared correlation of fitted and actual differences",
                c.label,
                c.result.estimator,
                i.count,
                i.parameters,
                i.policy.min_lag,
                i.policy.max_lag.map_or("all".to_string(), |m| m.to_string()),
                if i.policy.collapse { ", collapsed" } else { "" },
                match c.result.spec.weighting {
                    Weighting::OneStep => "one-step",
                    Weighting::TwoStep => "two-step",
                },
            ));
        }
        for f in &c.result.flags {
            notes.push(format!("{}: {f}", c.label));
        }
    }
    notes
}

/// GMM by ownership group and for the full sample, with Chow tests.
pub fn cmd_ownership(cfg: &RunConfig) -> Result<Output> {
    let mut c = cfg.clone();
    c.group = None;
    let data = load_data(&c)?;
    let present = data.ownership_groups();
    if present.len() < 2 {
        let missing = Ownership::ALL
            .iter()
            .filter(|g| !present.contains(g))
            .map(|g| g.as_str().to_string())
            .collect();
        return Err(Error::MissingGroups(missing));
    }
    let spec = cfg.spec_for(cfg.gmm_estimator());
    let mut columns = Vec::new();
    for g in Ownership::ALL {
        if !present.contains(&g) {
            continue;
        }
        let sub = data.filter_banks(|b| b.ownership == g);
        let r = crate::estimate(&spec, &sub).map_err(|e| match e {
            Error::SingularDesign { .. } | Error::UnderIdentified { .. } | Error::UnsupportedShape(_) => {
                Error::GroupTooSmall {
                    group: g.as_str().to_string(),
                    observations: sub.n_obs(),
                    parameters: spec.regressors().len() + spec.dep_lags + 1,
                }
            }
            other => other,
        })?;
        columns.push((g.as_str().to_uppercase(), r));
    }
    let main = crate::estimate(&spec, &data)?;
    let chow = chow_test(&main, &data)?;
    columns.push(("MAIN".to_string(), main));
    let mut table = CoefficientTable::new("Estimation by ownership group", columns);
    table.notes = gmm_notes(&table);
    machine(
        cfg.format,
        &json!({ "command": "ownership", "table": &table, "chow": &chow }),
        || {
            let mut s = report::table_csv(&[&table]);
            let mut rows = Vec::new();
            for g in &chow.groups {
                rows.push(vec![
                    "chow".to_string(),
                    g.group.to_string(),
                    "joint".into(),
                    report::full(g.joint.statistic),
                    g.joint.p_value.map_or(String::new(), report::full),
                ]);
                for t in &g.coefficients {
                    rows.push(vec![
                        "chow".to_string(),
                        g.group.to_string(),
                        t.term.clone(),
                        report::full(t.test.statistic),
                        t.test.p_value.map_or(String::new(), report::full),
                    ]);
                }
            }
            s.push_str(&report::render_csv(&rows));
            s
        },
        || format!("{}\n{}", table.render_text(), report::render_chow(&chow)),
    )
}

/// Banks dropped by the sample-selection scenario when no list is given:
/// the first bank of each ownership group.
pub fn default_ssmpl_drop(data: &PanelDataset) -> Vec<String> {
    Ownership::ALL
        .iter()
        .filter_map(|g| data.banks().iter().find(|b| b.ownership == *g))
        .map(|b| b.id.clone())
        .collect()
}

/// Applies a robustness scenario to the baseline model and data.
pub fn apply_scenario(
    scenario: Scenario,
    spec: &ModelSpec,
    data: &PanelDataset,
    drop: &[String],
) -> Result<(ModelSpec, PanelDataset)> {
    let mut spec = spec.clone();
    let require = |name: &str| {
        if data.has_column(name) {
            Ok(())
        } else {
            Err(Error::MissingColumn(name.to_string()))
        }
    };
    let data = match scenario {
        Scenario::Ssmpl => {
            for id in drop {
                if data.bank_index(id).is_none() {
                    return Err(Error::InvalidSpec(format!("bank '{id}' to drop is not in the data")));
                }
            }
            data.filter_banks(|b| !drop.contains(&b.id))
        }
        Scenario::Nostt => data.filter_banks(|b| b.ownership != Ownership::State),
        Scenario::Nofrgn => data.filter_banks(|b| b.ownership != Ownership::Foreign),
        Scenario::Newsize => {
            require("MS")?;
            if !spec.replace_regressor("LOGTA", "MS") {
                return Err(Error::InvalidSpec("NEWSIZE needs LOGTA in the model".into()));
            }
            data.clone()
        }
        Scenario::Crdt => {
            require("CRDT")?;
            spec.bank_specific.push("CRDT".into());
            data.clone()
        }
        Scenario::Iirate => {
            require("IIR")?;
            spec.macro_market.push("IIR".into());
            spec.instruments.exogenous.push("IIR".into());
            data.clone()
        }
    };
    Ok((spec, data))
}

/// Baseline GMM under each robustness scenario.
pub fn cmd_robustness(cfg: &RunConfig) -> Result<Output> {
    let data = load_data(cfg)?;
    let spec = cfg.spec_for(cfg.gmm_estimator());
    let scenarios: Vec<Scenario> = cfg.scenario.map_or(Scenario::ALL.to_vec(), |s| vec![s]);
    let drop = if cfg.drop_banks.is_empty() {
        default_ssmpl_drop(&data)
    } else {
        cfg.drop_banks.clone()
    };
    let mut columns = Vec::new();
    for s in &scenarios {
        let (sp, d) = apply_scenario(*s, &spec, &data, &drop)?;
        columns.push((s.label().to_string(), crate::estimate(&sp, &d)?));
    }
    let mut table = CoefficientTable::new("Robustness checks", columns);
    let mut notes = Vec::new();
    if scenarios.contains(&Scenario::Ssmpl) {
        notes.push(format!("SSMPL drops banks: {}", drop.join(", ")));
    }
    notes.extend(gmm_notes(&table));
    table.notes = notes;
    machine(
        cfg.format,
        &json!({ "command": "robustness", "table": &table, "dropped_banks": drop }),
        || report::table_csv(&[&table]),
        || table.render_text(),
    )
}

/// Correlations and summary statistics of every variable in the panel.
pub fn cmd_describe(cfg: &RunConfig) -> Result<Output> {
    let data = load_data(cfg)?;
    let vars: Vec<String> = data.column_names().to_vec();
    let stats = vars
        .iter()
        .map(|v| summarize(&data, v))
        .collect::<Result<Vec<_>>>()?;
    let corr = if vars.len() >= 2 {
        Some(correlation_matrix(&data, &vars)?)
    } else {
        None
    };
    machine(
        cfg.format,
        &json!({
            "command": "describe",
            "summary": &stats,
            "correlation": corr.as_ref().map(|c| json!({
                "names": &c.names,
                "matrix": (0..c.names.len()).map(|i| c.matrix.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
            })),
        }),
        || {
            let mut rows = vec![["variable", "block", "mean", "sd", "min", "max", "count"]
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()];
            for s in &stats {
                let f = report::full;
                rows.push(vec![s.variable.clone(), "overall".into(), f(s.mean), f(s.sd_overall), f(s.min_overall), f(s.max_overall), s.n_obs.to_string()]);
                rows.push(vec![s.variable.clone(), "between".into(), String::new(), f(s.sd_between), f(s.min_between), f(s.max_between), s.n_banks.to_string()]);
                rows.push(vec![s.variable.clone(), "within".into(), String::new(), f(s.sd_within), f(s.min_within), f(s.max_within), s.periods.to_string()]);
            }
            report::render_csv(&rows)
        },
        || {
            let mut s = String::new();
            if let Some(c) = &corr {
                s.push_str(&report::render_correlation(c));
                s.push('\n');
            }
            s.push_str(&report::render_summary(&stats));
            s
        },
    )
}

/// The specification-test battery on the configured model.
pub fn cmd_test(cfg: &RunConfig) -> Result<Output> {
    let data = load_data(cfg)?;
    let pols = crate::estimate(&cfg.spec_for(Estimator::Pols), &data)?;
    let fe = crate::estimate(&cfg.spec_for(Estimator::Fe), &data)?;
    let re = crate::estimate(&cfg.spec_for(Estimator::Re), &data)?;
    let gmm = crate::estimate(&cfg.spec_for(cfg.gmm_estimator()), &data)?;
    let mut tests = vec![bp_lm_test(&pols, &data)?, hausman_test(&fe, &re)?];
    for (label, block) in [
        ("PIM", Block::PureInterestMargin),
        ("BS", Block::BankSpecific),
        ("MACRO", Block::MacroMarket),
    ] {
        let names: Vec<String> = codes_in_block(block)
            .into_iter()
            .filter(|c| gmm.terms.contains(c))
            .collect();
        if names.is_empty() {
            continue;
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut w = wald_joint(&gmm, &refs)?;
        w.name = format!("Wald {label} ({})", gmm.estimator.column_label());
        tests.push(w);
    }
    tests.extend(gmm.tests.iter().cloned());
    machine(
        cfg.format,
        &json!({ "command": "test", "tests": &tests }),
        || {
            let mut rows = vec![vec!["test".to_string(), "statistic".into(), "df".into(), "p_value".into(), "flags".into()]];
            for t in &tests {
                rows.push(vec![
                    t.name.clone(),
                    report::full(t.statistic),
                    serde_json::to_string(&t.df).unwrap_or_default(),
                    t.p_value.map_or(String::new(), report::full),
                    t.flags.join(";"),
                ]);
            }
            report::render_csv(&rows)
        },
        || tests.iter().map(report::render_test).collect::<Vec<_>>().join("\n"),
    )
}

/// Writes a simulated panel, or with `reps` runs a Monte Carlo study of the
/// configured estimator on the same process.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Output> {
    let dgp = turkey_like(cfg.seed);
    match cfg.reps {
        None => {
            let data = generate_panel(&dgp)?;
            let mut buf = Vec::new();
            write_panel(&data, &mut buf, b',')?;
            let text = String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?;
            if let Some(path) = &cfg.out {
                std::fs::write(path, &text)
                    .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
                Ok(Output {
                    body: format!(
                        "wrote {} banks x {} periods to {}\n",
                        data.n_banks(),
                        data.n_periods(),
                        path.display()
                    ),
                })
            } else {
                Ok(Output { body: text })
            }
        }
        Some(reps) => {
            let est = cfg.estimator.unwrap_or(Estimator::SysGmm);
            let spec = cfg.spec_for(est);
            let mc = monte_carlo(&dgp, &spec, reps, &[])?;
            let csv = || {
                let mut rows = vec![["term", "truth", "count", "mean", "bias", "rmse"].iter().map(|s| s.to_string()).collect::<Vec<_>>()];
                for c in &mc.coefficients {
                    let o = |v: Option<f64>| v.map_or(String::new(), report::full);
                    rows.push(vec![c.term.clone(), o(c.truth), c.count.to_string(), report::full(c.mean), o(c.bias), o(c.rmse)]);
                }
                report::render_csv(&rows)
            };
            let body = match cfg.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&mc).map_err(|e| Error::Io(e.to_string()))?;
                    s.push('\n');
                    s
                }
                _ => csv(),
            };
            Ok(Output { body })
        }
    }
}

pub fn run_command(kind: CommandKind, cfg: &RunConfig) -> Result<Output> {
    match kind {
        CommandKind::Describe => cmd_describe(cfg),
        CommandKind::Estimate => cmd_estimate(cfg),
        CommandKind::Ownership => cmd_ownership(cfg),
        CommandKind::Robustness => cmd_robustness(cfg),
        CommandKind::Simulate => cmd_simulate(cfg),
        CommandKind::Test => cmd_test(cfg),
    }
}

/// Process exit status for an error: 2 for input and usage problems,
/// 1 for estimation failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Parse { .. } | Error::InvalidSpec(_) | Error::MissingColumn(_) | Error::BadCell { .. } => 2,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_and_precedence() {
        let kv = parse_key_values("# model\nestimator = fe\nmax-ilag = none\nseed=7\n\ncollapse = yes # trailing\n").unwrap();
        assert_eq!(kv["max_ilag"], "none");
        let mut cfg = RunConfig::default();
        for (k, v) in &kv {
            cfg.apply(k, v).unwrap();
        }
        assert_eq!(cfg.estimator, Some(Estimator::Fe));
        assert_eq!(cfg.spec.instruments.max_lag, None);
        assert!(cfg.spec.instruments.collapse);
        assert!(matches!(parse_key_values("novalue"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn env_seed_is_fallback() {
        let args = Args::default();
        assert_eq!(RunConfig::resolve(&args, Some("42")).unwrap().seed, 42);
        let args = Args {
            seed: Some(5),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(&args, Some("42")).unwrap().seed, 5);
        assert_eq!(RunConfig::resolve(&Args::default(), None).unwrap().seed, DEFAULT_SEED);
    }

    #[test]
    fn scenario_ids() {
        assert_eq!("2".parse::<Scenario>().unwrap(), Scenario::Nostt);
        assert_eq!("newsize".parse::<Scenario>().unwrap(), Scenario::Newsize);
        assert!("7".parse::<Scenario>().is_err());
    }

    #[test]
    fn static_columns_drop_lags() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.spec_for(Estimator::Fe).dep_lags, 0);
        assert_eq!(cfg.spec_for(Estimator::SysGmm).dep_lags, 2);
    }
}
