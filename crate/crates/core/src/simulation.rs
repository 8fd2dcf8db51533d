//! Simulated margin panels with known parameters, a Monte Carlo harness and
//! the Fisher margin identity.
//!
//! The process is `y_it = xi + psi1 y_{i,t-1} + delta' x_it + mu_i + eps_it`
//! with Gaussian `mu_i` and `eps_it`. Each bank draws from its own ChaCha8
//! stream (stream index = bank position) so banks can be generated in any
//! order; period-common series use a reserved stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EstimationResult, Estimator, ModelSpec, CONSTANT};
use crate::panel::{lag_label, quarter_ordinal, Bank, Ownership, PanelDataset, PeriodStyle};
use crate::spec_tests;

const COMMON_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegressorProcess {
    /// Fresh draw for every bank and period.
    IidNormal { mean: f64, sd: f64 },
    /// One draw per bank, fixed over time.
    BankConstant { mean: f64, sd: f64 },
    /// One draw per period shared by every bank (a macro series).
    TimeConstant { mean: f64, sd: f64 },
    /// Bank-level draw plus an independent period draw.
    BankAndNoise { mean: f64, between_sd: f64, within_sd: f64 },
}

impl RegressorProcess {
    fn mean(&self) -> f64 {
        match *self {
            RegressorProcess::IidNormal { mean, .. }
            | RegressorProcess::BankConstant { mean, .. }
            | RegressorProcess::TimeConstant { mean, .. }
            | RegressorProcess::BankAndNoise { mean, .. } => mean,
        }
    }

    fn sds(&self) -> Vec<f64> {
        match *self {
            RegressorProcess::IidNormal { sd, .. }
            | RegressorProcess::BankConstant { sd, .. }
            | RegressorProcess::TimeConstant { sd, .. } => vec![sd],
            RegressorProcess::BankAndNoise {
                between_sd, within_sd, ..
            } => vec![between_sd, within_sd],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub name: String,
    pub process: RegressorProcess,
    /// True coefficient in the margin equation.
    pub delta: f64,
    /// Adds `loading * mu_i` to the regressor, correlating it with the bank
    /// effect.
    pub effect_loading: f64,
}

impl RegressorSpec {
    pub fn new(name: &str, process: RegressorProcess, delta: f64) -> Self {
        RegressorSpec {
            name: name.to_string(),
            process,
            delta,
            effect_loading: 0.0,
        }
    }
}

/// Slope difference for one ownership group, used for Chow power studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupShift {
    pub group: Ownership,
    pub regressor: String,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub n_banks: usize,
    pub periods: usize,
    pub psi1: f64,
    pub xi: f64,
    pub sigma_mu: f64,
    pub sigma_eps: f64,
    pub regressors: Vec<RegressorSpec>,
    pub burn_in: usize,
    pub seed: u64,
    pub dependent: String,
    /// Ownership counts assigned to banks in order; banks beyond the listed
    /// counts are private.
    pub ownership: Vec<(Ownership, usize)>,
    pub group_shift: Option<GroupShift>,
    /// Label periods as quarters starting here instead of 1, 2, ...
    pub first_quarter: Option<(i64, i64)>,
}

impl DgpSpec {
    /// Pure AR(1) panel with no regressors.
    pub fn ar1(n_banks: usize, periods: usize, psi1: f64, seed: u64) -> Self {
        DgpSpec {
            n_banks,
            periods,
            psi1,
            xi: 0.0,
            sigma_mu: 1.0,
            sigma_eps: 1.0,
            regressors: Vec::new(),
            burn_in: 50,
            seed,
            dependent: "NIM".into(),
            ownership: Vec::new(),
            group_shift: None,
            first_quarter: None,
        }
    }

    pub fn with_regressor(mut self, r: RegressorSpec) -> Self {
        self.regressors.push(r);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDgp(m));
        if !(self.psi1.abs() < 1.0) {
            return bad(format!("persistence {} must lie strictly inside (-1, 1)", self.psi1));
        }
        if self.n_banks == 0 || self.periods == 0 {
            return bad("need at least one bank and one period".into());
        }
        if !(self.sigma_mu >= 0.0 && self.sigma_eps >= 0.0) {
            return bad("standard deviations must be non-negative".into());
        }
        for r in &self.regressors {
            if r.process.sds().iter().any(|s| !(*s >= 0.0)) {
                return bad(format!("regressor '{}' has a negative standard deviation", r.name));
            }
            if !r.delta.is_finite() || !r.effect_loading.is_finite() || !r.process.mean().is_finite() {
                return bad(format!("regressor '{}' has a non-finite parameter", r.name));
            }
        }
        let assigned: usize = self.ownership.iter().map(|(_, c)| c).sum();
        if assigned > self.n_banks {
            return bad(format!("{assigned} ownership labels for {} banks", self.n_banks));
        }
        if let Some(g) = &self.group_shift {
            if !self.regressors.iter().any(|r| r.name == g.regressor) {
                return bad(format!("group shift names unknown regressor '{}'", g.regressor));
            }
        }
        Ok(())
    }

    pub fn ownership_of(&self, bank: usize) -> Ownership {
        let mut acc = 0;
        for (o, c) in &self.ownership {
            acc += c;
            if bank < acc {
                return *o;
            }
        }
        Ownership::Private
    }

    /// True coefficient of an estimated term, if the process defines one.
    pub fn truth(&self, term: &str) -> Option<f64> {
        if term == lag_label(&self.dependent, 1) {
            return Some(self.psi1);
        }
        if term.ends_with(&format!(".{}", self.dependent)) {
            return Some(0.0);
        }
        self.regressors.iter().find(|r| r.name == term).map(|r| r.delta)
    }
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("validated sd").sample(rng)
}

/// Draws one panel. Equal specs give bit-identical panels.
pub fn generate_panel(spec: &DgpSpec) -> Result<PanelDataset> {
    spec.validate()?;
    let n = spec.n_banks;
    let t = spec.periods;
    let total = spec.burn_in + t;

    let mut common = ChaCha8Rng::seed_from_u64(spec.seed);
    common.set_stream(COMMON_STREAM);
    let common_series: Vec<Option<Vec<f64>>> = spec
        .regressors
        .iter()
        .map(|r| match r.process {
            RegressorProcess::TimeConstant { mean, sd } => {
                Some((0..total).map(|_| normal(&mut common, mean, sd)).collect())
            }
            _ => None,
        })
        .collect();

    let banks: Vec<(Vec<f64>, Vec<Vec<f64>>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let mu = normal(&mut rng, 0.0, spec.sigma_mu);
            let group = spec.ownership_of(i);
            let mut xs = Vec::with_capacity(spec.regressors.len());
            let mut deltas = Vec::with_capacity(spec.regressors.len());
            let mut stationary_x = 0.0;
            let mut x_var = 0.0;
            for (j, r) in spec.regressors.iter().enumerate() {
                let shift = match &spec.group_shift {
                    Some(g) if g.group == group && g.regressor == r.name => g.shift,
                    _ => 0.0,
                };
                let delta = r.delta + shift;
                let load = r.effect_loading * mu;
                let series: Vec<f64> = match r.process {
                    RegressorProcess::IidNormal { mean, sd } => {
                        stationary_x += delta * (mean + load);
                        x_var += (delta * sd).powi(2);
                        (0..total).map(|_| normal(&mut rng, mean, sd) + load).collect()
                    }
                    RegressorProcess::BankConstant { mean, sd } => {
                        let v = normal(&mut rng, mean, sd) + load;
                        stationary_x += delta * v;
                        vec![v; total]
                    }
                    RegressorProcess::TimeConstant { mean, sd } => {
                        stationary_x += delta * (mean + load);
                        x_var += (delta * sd).powi(2);
                        common_series[j]
                            .as_ref()
                            .expect("drawn above")
                            .iter()
                            .map(|v| v + load)
                            .collect()
                    }
                    RegressorProcess::BankAndNoise {
                        mean,
                        between_sd,
                        within_sd,
                    } => {
                        let level = normal(&mut rng, mean, between_sd) + load;
                        stationary_x += delta * level;
                        x_var += (delta * within_sd).powi(2);
                        (0..total).map(|_| normal(&mut rng, level, within_sd)).collect()
                    }
                };
                xs.push(series);
                deltas.push(delta);
            }
            let psi = spec.psi1;
            let mean = (spec.xi + mu + stationary_x) / (1.0 - psi);
            let sd = ((spec.sigma_eps.powi(2) + x_var) / (1.0 - psi * psi)).sqrt();
            let mut prev = normal(&mut rng, mean, sd);
            let mut y = Vec::with_capacity(total);
            for s in 0..total {
                let eps = normal(&mut rng, 0.0, spec.sigma_eps);
                let xb: f64 = xs.iter().zip(&deltas).map(|(x, d)| d * x[s]).sum();
                let v = spec.xi + psi * prev + xb + mu + eps;
                y.push(v);
                prev = v;
            }
            let keep = |v: Vec<f64>| v[spec.burn_in..].to_vec();
            (keep(y), xs.into_iter().map(keep).collect())
        })
        .collect();

    let mut columns: Vec<(String, Vec<f64>)> = Vec::with_capacity(1 + spec.regressors.len());
    columns.push((
        spec.dependent.clone(),
        banks.iter().flat_map(|(y, _)| y.iter().copied()).collect(),
    ));
    for (j, r) in spec.regressors.iter().enumerate() {
        columns.push((
            r.name.clone(),
            banks.iter().flat_map(|(_, xs)| xs[j].iter().copied()).collect(),
        ));
    }
    let bank_list = (0..n)
        .map(|i| Bank {
            id: format!("{}", i + 1),
            ownership: spec.ownership_of(i),
        })
        .collect();
    let (periods, style) = match spec.first_quarter {
        Some((year, q)) => {
            let start = quarter_ordinal(year, q);
            ((0..t as i64).map(|s| start + s).collect(), PeriodStyle::Quarter)
        }
        None => ((1..=t as i64).collect(), PeriodStyle::Integer),
    };
    PanelDataset::from_balanced(bank_list, periods, columns, style)
}

/// Scale calibration for a 23-bank, 42-quarter panel. Means and standard
/// deviations follow the published summary table for this sample; only
/// moments are matched, not joint dynamics or cross-correlations. Also
/// carries the MS, CRDT and IIR series needed by the robustness scenarios.
pub fn turkey_like(seed: u64) -> DgpSpec {
    use RegressorProcess::*;
    let panel = |mean, between_sd, within_sd| BankAndNoise {
        mean,
        between_sd,
        within_sd,
    };
    let regs = vec![
        RegressorSpec::new("RA", panel(14.028, 4.917, 6.356), 0.04),
        RegressorSpec::new("RBD", panel(7.485, 6.147, 12.122), 0.01),
        RegressorSpec::new("OC", panel(1.359, 0.769, 1.655), 0.8),
        RegressorSpec::new("LOGTA", panel(6.776, 0.755, 0.326), -0.2),
        RegressorSpec::new("LQR", panel(35.133, 14.599, 13.948), -0.01),
        RegressorSpec::new("MNGMT", panel(60.844, 19.099, 96.156), -0.001),
        RegressorSpec::new("IIP", panel(0.471, 1.588, 3.898), 0.05),
        RegressorSpec::new("DPZTG", panel(26.868, 81.311, 470.715), -0.0002),
        RegressorSpec::new("DVRSTY", panel(0.381, 0.250, 0.838), -0.1),
        RegressorSpec::new("HHI", TimeConstant { mean: 10.882, sd: 0.643 }, 0.1),
        RegressorSpec::new("GDP", TimeConstant { mean: 5.092, sd: 5.865 }, 0.01),
        RegressorSpec::new("INF", TimeConstant { mean: 14.845, sd: 14.977 }, 0.02),
        RegressorSpec::new("MS", panel(4.348, 4.0, 0.4), 0.0),
        RegressorSpec::new("CRDT", panel(45.0, 12.0, 6.0), 0.0),
        RegressorSpec::new("IIR", TimeConstant { mean: 18.0, sd: 15.0 }, 0.0),
    ];
    let psi1 = 0.3;
    let target_mean = 1.488;
    let xb: f64 = regs.iter().map(|r| r.delta * r.process.mean()).sum();
    DgpSpec {
        n_banks: 23,
        periods: 42,
        psi1,
        xi: target_mean * (1.0 - psi1) - xb,
        sigma_mu: 0.4,
        sigma_eps: 1.0,
        regressors: regs,
        burn_in: 50,
        seed,
        dependent: "NIM".into(),
        ownership: vec![(Ownership::Foreign, 4), (Ownership::State, 3)],
        group_shift: None,
        first_quarter: Some((2001, 4)),
    }
}

/// Derives the seed of replication `rep` from a base seed.
pub fn replication_seed(base: u64, rep: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = base.wrapping_add((rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Test evaluated in each replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "kebab-case")]
pub enum McTest {
    /// Refits the model as pooled OLS.
    BreuschPagan,
    /// Refits as FE and RE.
    Hausman,
    /// Requires a GMM model.
    Sargan,
    ArOrder { order: usize },
    /// Joint Chow test for one ownership group.
    ChowJoint { group: Ownership },
    /// Chow test on a single coefficient.
    ChowCoefficient { group: Ownership, term: String },
    Wald { terms: Vec<String> },
}

impl McTest {
    pub fn label(&self) -> String {
        match self {
            McTest::BreuschPagan => "BP-LM".into(),
            McTest::Hausman => "Hausman".into(),
            McTest::Sargan => spec_tests::SARGAN.into(),
            McTest::ArOrder { order } => spec_tests::ar_name(*order),
            McTest::ChowJoint { group } => format!("Chow {group}"),
            McTest::ChowCoefficient { group, term } => format!("Chow {group} {term}"),
            McTest::Wald { terms } => format!("Wald({})", terms.join(",")),
        }
    }

    fn evaluate(&self, model: &ModelSpec, fit: Option<&EstimationResult>, data: &PanelDataset) -> Result<(f64, Option<f64>)> {
        let need_fit = || {
            fit.ok_or_else(|| Error::InvalidSpec("model fit failed".into()))
        };
        let t = match self {
            McTest::BreuschPagan => {
                let pols = crate::estimate(&model.clone().with_estimator(Estimator::Pols), data)?;
                spec_tests::bp_lm_test(&pols, data)?
            }
            McTest::Hausman => {
                let fe = crate::estimate(&model.clone().with_estimator(Estimator::Fe), data)?;
                let re = crate::estimate(&model.clone().with_estimator(Estimator::Re), data)?;
                spec_tests::hausman_test(&fe, &re)?
            }
            McTest::Sargan => spec_tests::sargan_test(need_fit()?)?,
            McTest::ArOrder { order } => spec_tests::ar_test(need_fit()?, *order)?,
            McTest::ChowJoint { group } => {
                let rep = spec_tests::chow_test(need_fit()?, data)?;
                rep.group(*group)
                    .ok_or_else(|| Error::MissingGroups(vec![group.to_string()]))?
                    .joint
                    .clone()
            }
            McTest::ChowCoefficient { group, term } => {
                let rep = spec_tests::chow_test(need_fit()?, data)?;
                rep.group(*group)
                    .ok_or_else(|| Error::MissingGroups(vec![group.to_string()]))?
                    .coefficients
                    .iter()
                    .find(|c| &c.term == term)
                    .ok_or_else(|| Error::UnknownVariable(term.clone()))?
                    .test
                    .clone()
            }
            McTest::Wald { terms } => {
                let names: Vec<&str> = terms.iter().map(String::as_str).collect();
                spec_tests::wald_joint(need_fit()?, &names)?
            }
        };
        Ok((t.statistic, t.p_value))
    }
}

pub const ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub term: String,
    pub truth: Option<f64>,
    /// Replications that produced this coefficient.
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub test: String,
    pub count: usize,
    pub failures: usize,
    pub mean_statistic: f64,
    /// Rejection frequency at each level in [`ALPHAS`].
    pub rejection: Vec<(f64, f64)>,
    pub p_values: Vec<f64>,
}

impl TestSummary {
    pub fn rejection_at(&self, alpha: f64) -> Option<f64> {
        self.rejection
            .iter()
            .find(|(a, _)| (a - alpha).abs() < 1e-12)
            .map(|(_, r)| *r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub reps: usize,
    /// Replications whose model estimation failed.
    pub failures: usize,
    pub first_error: Option<String>,
    pub coefficients: Vec<CoefficientSummary>,
    pub tests: Vec<TestSummary>,
}

impl MonteCarloSummary {
    pub fn coefficient(&self, term: &str) -> Option<&CoefficientSummary> {
        self.coefficients.iter().find(|c| c.term == term)
    }

    pub fn test(&self, label: &str) -> Option<&TestSummary> {
        self.tests.iter().find(|t| t.test == label)
    }
}

struct Replication {
    fit: std::result::Result<(Vec<String>, Vec<f64>), String>,
    tests: Vec<Option<(f64, Option<f64>)>>,
}

/// Runs `reps` replications of `dgp` (seeds derived from `dgp.seed`),
/// estimates `model` on each, and evaluates `tests`. Replications run in
/// parallel and are reduced in index order, so the summary is
/// deterministic.
pub fn monte_carlo(dgp: &DgpSpec, model: &ModelSpec, reps: usize, tests: &[McTest]) -> Result<MonteCarloSummary> {
    if reps == 0 {
        return Err(Error::InvalidDgp("at least one replication is required".into()));
    }
    dgp.validate()?;
    let runs: Vec<Replication> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut spec = dgp.clone();
            spec.seed = replication_seed(dgp.seed, r);
            let data = match generate_panel(&spec) {
                Ok(d) => d,
                Err(e) => {
                    return Replication {
                        fit: Err(e.to_string()),
                        tests: vec![None; tests.len()],
                    }
                }
            };
            let fit = crate::estimate(model, &data);
            let test_out = tests
                .iter()
                .map(|t| t.evaluate(model, fit.as_ref().ok(), &data).ok())
                .collect();
            Replication {
                fit: fit
                    .map(|f| (f.terms, f.coefficients))
                    .map_err(|e| e.to_string()),
                tests: test_out,
            }
        })
        .collect();

    let failures = runs.iter().filter(|r| r.fit.is_err()).count();
    let first_error = runs.iter().find_map(|r| r.fit.as_ref().err().cloned());
    let mut terms: Vec<String> = Vec::new();
    for r in &runs {
        if let Ok((t, _)) = &r.fit {
            for name in t {
                if !terms.contains(name) {
                    terms.push(name.clone());
                }
            }
        }
    }
    let coefficients = terms
        .iter()
        .map(|term| {
            let values: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.fit.as_ref().ok())
                .filter_map(|(t, b)| t.iter().position(|x| x == term).map(|i| b[i]))
                .collect();
            let count = values.len() as f64;
            let mean = values.iter().sum::<f64>() / count;
            let sd = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
            } else {
                0.0
            };
            let truth = if term == CONSTANT { None } else { dgp.truth(term) };
            CoefficientSummary {
                term: term.clone(),
                truth,
                count: values.len(),
                mean,
                sd,
                bias: truth.map(|t| mean - t),
                rmse: truth.map(|t| (values.iter().map(|v| (v - t).powi(2)).sum::<f64>() / count).sqrt()),
            }
        })
        .collect();

    let test_summaries = tests
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let done: Vec<(f64, Option<f64>)> = runs.iter().filter_map(|r| r.tests[j]).collect();
            let p_values: Vec<f64> = done.iter().filter_map(|(_, p)| *p).collect();
            let count = done.len();
            TestSummary {
                test: t.label(),
                count,
                failures: reps - count,
                mean_statistic: done.iter().map(|(s, _)| s).sum::<f64>() / count.max(1) as f64,
                rejection: ALPHAS
                    .iter()
                    .map(|&a| {
                        let hits = p_values.iter().filter(|&&p| p < a).count();
                        (a, hits as f64 / count.max(1) as f64)
                    })
                    .collect(),
                p_values,
            }
        })
        .collect();

    Ok(MonteCarloSummary {
        reps,
        failures,
        first_error,
        coefficients,
        tests: test_summaries,
    })
}

/// Real loan and deposit rates with inflation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherInputs {
    pub gamma_l: f64,
    pub gamma_d: f64,
    pub pi: f64,
}

impl FisherInputs {
    pub fn new(gamma_l: f64, gamma_d: f64, pi: f64) -> Result<Self> {
        for (name, v) in [("loan rate", gamma_l), ("deposit rate", gamma_d), ("inflation", pi)] {
            if !(v > -1.0) || !v.is_finite() {
                return Err(Error::InvalidDgp(format!("{name} {v} must be finite and above -1")));
            }
        }
        Ok(FisherInputs { gamma_l, gamma_d, pi })
    }
}

/// Nominal margin implied by real rates: `(gamma_l - gamma_d)(1 + pi)`.
pub fn nominal_margin(inputs: FisherInputs) -> f64 {
    (inputs.gamma_l - inputs.gamma_d) * (1.0 + inputs.pi)
}

/// The same margin as the difference of nominal gross rates.
pub fn nominal_margin_expanded(inputs: FisherInputs) -> f64 {
    (1.0 + inputs.gamma_l) * (1.0 + inputs.pi) - (1.0 + inputs.gamma_d) * (1.0 + inputs.pi)
}

/// Random draws for scripted use; uniform on `[lo, hi)`.
pub fn uniform_draws(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_process_is_one_plus_effect() {
        let mut spec = DgpSpec::ar1(5, 6, 0.0, 3);
        spec.sigma_eps = 0.0;
        spec.xi = 1.0;
        let d = generate_panel(&spec).unwrap();
        let y = d.column("NIM").unwrap();
        for b in 0..5 {
            let r = d.bank_rows(b);
            let first = y[r.start];
            assert!(y[r.clone()].iter().all(|v| (v - first).abs() < 1e-12));
        }
        assert!(y.iter().any(|v| (v - 1.0).abs() > 1e-3));
    }

    #[test]
    fn seeds_are_reproducible() {
        let spec = turkey_like(11);
        let a = generate_panel(&spec).unwrap();
        let b = generate_panel(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate_panel(&turkey_like(12)).unwrap();
        assert_ne!(a.column("NIM").unwrap(), c.column("NIM").unwrap());
        assert_eq!((a.n_obs(), a.n_banks(), a.n_periods()), (966, 23, 42));
        assert_eq!(a.filter_banks(|b| b.ownership != Ownership::State).n_banks(), 20);
        assert_eq!(a.filter_banks(|b| b.ownership != Ownership::Foreign).n_banks(), 19);
    }

    #[test]
    fn stationary_mean() {
        let mut spec = DgpSpec::ar1(400, 10, 0.6, 5);
        spec.sigma_mu = 0.0;
        spec.xi = 2.0;
        let d = generate_panel(&spec).unwrap();
        let y = d.column("NIM").unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        // serial correlation inflates the standard error; use the long-run variance
        let se = (1.0 / (1.0 - 0.36f64)).sqrt() * ((1.0 + 0.6) / (1.0 - 0.6f64)).sqrt() / (y.len() as f64).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn invalid_specs() {
        let mut s = DgpSpec::ar1(5, 5, 1.0, 1);
        assert!(matches!(generate_panel(&s), Err(Error::InvalidDgp(_))));
        s.psi1 = 0.5;
        s.sigma_mu = -1.0;
        assert!(matches!(generate_panel(&s), Err(Error::InvalidDgp(_))));
    }

    #[test]
    fn single_replication_summary() {
        let spec = DgpSpec::ar1(50, 6, 0.5, 9);
        let model = ModelSpec::new("NIM", Estimator::DiffGmm).with_dep_lags(1);
        let mc = monte_carlo(&spec, &model, 1, &[]).unwrap();
        let mut one = spec.clone();
        one.seed = replication_seed(spec.seed, 0);
        let fit = crate::estimate(&model, &generate_panel(&one).unwrap()).unwrap();
        let c = mc.coefficient("L.NIM").unwrap();
        assert_eq!(c.mean, fit.coef("L.NIM").unwrap());
        assert_eq!(c.bias, Some(c.mean - 0.5));
    }

    #[test]
    fn fisher_examples() {
        let m = |l, d, p| nominal_margin(FisherInputs::new(l, d, p).unwrap());
        assert!((m(0.10, 0.05, 0.0) - 0.05).abs() < 1e-15);
        assert!((m(0.10, 0.05, 0.10) - 0.055).abs() < 1e-15);
        assert_eq!(m(0.07, 0.07, 0.3), 0.0);
        assert!(FisherInputs::new(-1.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn fisher_forms_agree(l in -0.99f64..2.0, d in -0.99f64..2.0, p in -0.99f64..5.0) {
            let f = FisherInputs::new(l, d, p).unwrap();
            let a = nominal_margin(f);
            let b = nominal_margin_expanded(f);
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + p.abs()) * 4.0);
        }
    }
}
