//! Model specifications, estimation results and test records.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::panel::{lag_label, PanelDataset};
use crate::variables::{codes_in_block, Block};

/// Label of the intercept row.
pub const CONSTANT: &str = "CONSTANT";

/// Level-equation instruments are always differences lagged exactly once.
pub const LEVEL_INSTRUMENT_LAG: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Pols,
    Fe,
    Re,
    DiffGmm,
    SysGmm,
}

impl Estimator {
    pub fn column_label(self) -> &'static str {
        match self {
            Estimator::Pols => "POLS",
            Estimator::Fe => "FE",
            Estimator::Re => "RE",
            Estimator::DiffGmm | Estimator::SysGmm => "GMM",
        }
    }

    pub fn is_gmm(self) -> bool {
        matches!(self, Estimator::DiffGmm | Estimator::SysGmm)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Pols => "pols",
            Estimator::Fe => "fe",
            Estimator::Re => "re",
            Estimator::DiffGmm => "diff-gmm",
            Estimator::SysGmm => "sys-gmm",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "pols" => Ok(Estimator::Pols),
            "fe" => Ok(Estimator::Fe),
            "re" => Ok(Estimator::Re),
            "diff-gmm" => Ok(Estimator::DiffGmm),
            "sys-gmm" => Ok(Estimator::SysGmm),
            other => Err(Error::InvalidSpec(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    OneStep,
    TwoStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressorTreatment {
    /// The regressor instruments itself (its difference in the difference
    /// equation, its level in the level equation).
    ExogenousAsOwnInstrument,
    /// Lagged levels from `min_lag` on, like the dependent variable.
    PredeterminedGmmStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentPolicy {
    pub min_lag: usize,
    /// `None` means every available lag.
    pub max_lag: Option<usize>,
    pub collapse: bool,
    pub regressor_treatment: RegressorTreatment,
    /// Regressors treated as exogenous regardless of `regressor_treatment`.
    pub exogenous: Vec<String>,
}

impl Default for InstrumentPolicy {
    fn default() -> Self {
        InstrumentPolicy {
            min_lag: 2,
            max_lag: Some(4),
            collapse: false,
            regressor_treatment: RegressorTreatment::PredeterminedGmmStyle,
            exogenous: Vec::new(),
        }
    }
}

impl InstrumentPolicy {
    pub fn uncapped() -> Self {
        InstrumentPolicy {
            max_lag: None,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_lag < 2 {
            return Err(Error::InvalidSpec(format!(
                "minimum instrument lag is {} but lagged levels must be at least two periods back",
                self.min_lag
            )));
        }
        if let Some(max) = self.max_lag {
            if max < self.min_lag {
                return Err(Error::InvalidSpec(format!(
                    "max instrument lag {max} below min lag {}",
                    self.min_lag
                )));
            }
        }
        Ok(())
    }

    pub fn treats_as_exogenous(&self, var: &str) -> bool {
        self.regressor_treatment == RegressorTreatment::ExogenousAsOwnInstrument
            || self.exogenous.iter().any(|v| v == var)
    }
}

/// Declarative description of one regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dependent: String,
    pub dep_lags: usize,
    /// Pure interest margin block.
    pub pim: Vec<String>,
    pub bank_specific: Vec<String>,
    pub macro_market: Vec<String>,
    pub include_constant: bool,
    pub estimator: Estimator,
    pub instruments: InstrumentPolicy,
    pub weighting: Weighting,
    /// Finite-sample correction of two-step GMM standard errors.
    pub windmeijer: bool,
    /// Bank-clustered standard errors for the static estimators.
    pub cluster_robust: bool,
    /// Allow lagged dependent variables in static estimators.
    pub force_static_lags: bool,
}

impl ModelSpec {
    pub fn new(dependent: &str, estimator: Estimator) -> Self {
        ModelSpec {
            dependent: dependent.to_string(),
            dep_lags: 0,
            pim: Vec::new(),
            bank_specific: Vec::new(),
            macro_market: Vec::new(),
            include_constant: true,
            estimator,
            instruments: InstrumentPolicy::default(),
            weighting: Weighting::OneStep,
            windmeijer: false,
            cluster_robust: false,
            force_static_lags: false,
        }
    }

    /// The twelve-regressor margin equation; macro series instrument
    /// themselves in GMM.
    pub fn baseline(estimator: Estimator) -> Self {
        let mut spec = ModelSpec::new("NIM", estimator);
        spec.pim = codes_in_block(Block::PureInterestMargin);
        spec.bank_specific = codes_in_block(Block::BankSpecific);
        spec.macro_market = codes_in_block(Block::MacroMarket);
        spec.instruments.exogenous = spec.macro_market.clone();
        if estimator.is_gmm() {
            spec.dep_lags = 2;
        }
        spec
    }

    pub fn with_regressors(mut self, names: &[&str]) -> Self {
        self.bank_specific = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn with_dep_lags(mut self, lags: usize) -> Self {
        self.dep_lags = lags;
        self
    }

    /// All regressors in block order.
    pub fn regressors(&self) -> Vec<String> {
        self.pim
            .iter()
            .chain(&self.bank_specific)
            .chain(&self.macro_market)
            .cloned()
            .collect()
    }

    pub fn lag_terms(&self) -> Vec<String> {
        (1..=self.dep_lags).map(|k| lag_label(&self.dependent, k)).collect()
    }

    /// Replaces `old` by `new` in whichever block holds it.
    pub fn replace_regressor(&mut self, old: &str, new: &str) -> bool {
        for block in [&mut self.pim, &mut self.bank_specific, &mut self.macro_market] {
            if let Some(pos) = block.iter().position(|v| v == old) {
                block[pos] = new.to_string();
                for e in self.instruments.exogenous.iter_mut() {
                    if e == old {
                        *e = new.to_string();
                    }
                }
                return true;
            }
        }
        false
    }

    /// Checks names against the dataset and the lag count against its length.
    pub fn validate(&self, data: &PanelDataset) -> Result<()> {
        data.column(&self.dependent)?;
        let regs = self.regressors();
        for (i, r) in regs.iter().enumerate() {
            data.column(r)?;
            if regs[..i].contains(r) || *r == self.dependent {
                return Err(Error::InvalidSpec(format!("regressor '{r}' listed twice")));
            }
        }
        let t = data.n_periods();
        if self.dep_lags + 1 >= t {
            return Err(Error::InvalidSpec(format!(
                "{} dependent-variable lags need more than {t} periods",
                self.dep_lags
            )));
        }
        self.instruments.validate()
    }
}

/// Degrees of freedom: one for chi-square/normal statistics, two for F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Df {
    Single(usize),
    Pair(usize, usize),
}

/// Outcome of one specification test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub df: Df,
    /// `None` when the test does not apply (e.g. an exactly identified model).
    pub p_value: Option<f64>,
    pub null_description: String,
    pub flags: Vec<String>,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value.is_some_and(|p| p < alpha)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

pub mod flags {
    pub const SIGMA_MU_CLAMPED: &str = "sigma2_mu_clamped_to_zero";
    pub const GENERALIZED_INVERSE: &str = "generalized_inverse_used";
    pub const NOT_POSITIVE_DEFINITE: &str = "difference_matrix_not_positive_definite";
    pub const BOUNDARY_MIXTURE: &str = "boundary_mixture_chibar2_01";
    pub const EXACTLY_IDENTIFIED: &str = "exactly_identified_not_applicable";
    pub const SINGULAR_WEIGHT: &str = "singular_weight_matrix_pseudo_inverse";
    pub const TWO_STEP_UNAVAILABLE: &str = "two_step_weight_too_rank_deficient";
    pub const DEGENERATE_WEIGHT: &str = "degenerate_two_step_weight";
    pub const FORCED_STATIC_LAGS: &str = "lagged_dependent_in_static_model";
    pub const CLUSTER_ROBUST: &str = "cluster_robust_se";
    pub const WINDMEIJER: &str = "windmeijer_corrected_se";
    pub const DROPPED_BETWEEN: &str = "between_regression_dropped_constant_regressors";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RSquaredKind {
    /// `1 - SSR/SST` on the estimation sample.
    Centered,
    /// Within-bank R-squared of the demeaned regression.
    Within,
    /// Squared correlation between fitted and actual levels.
    Overall,
    /// Squared correlation between fitted and actual first differences.
    SquaredCorrelationDifferences,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inference {
    /// Student t with the given residual degrees of freedom.
    StudentT(usize),
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Level,
    Difference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub bank: String,
    pub period: i64,
    pub equation: Equation,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub sigma2_mu: f64,
    pub sigma2_eps: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentSummary {
    pub count: usize,
    pub parameters: usize,
    pub policy: InstrumentPolicy,
}

/// Working matrices kept for the GMM-based tests. Not serialized and
/// ignored by equality.
#[derive(Debug, Clone, Default)]
pub struct GmmState(pub(crate) Option<Arc<crate::gmm::GmmInternals>>);

impl PartialEq for GmmState {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimator: Estimator,
    pub spec: ModelSpec,
    /// Coefficient labels: dependent-variable lags, regressors, then CONSTANT.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    #[serde(with = "matrix_rows")]
    pub covariance: DenseMatrix,
    pub inference: Inference,
    /// Terms the estimator cannot identify (e.g. CONSTANT in difference GMM).
    pub unavailable: Vec<String>,
    pub residuals: Vec<Residual>,
    pub r_squared: f64,
    pub r_squared_kind: RSquaredKind,
    pub ssr: f64,
    pub n_obs: usize,
    pub n_banks: usize,
    pub variance_components: Option<VarianceComponents>,
    pub instruments: Option<InstrumentSummary>,
    pub flags: Vec<String>,
    pub tests: Vec<TestResult>,
    #[serde(skip)]
    pub gmm_state: GmmState,
}

impl EstimationResult {
    fn index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coef(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.coefficients[i])
    }

    pub fn se(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.standard_errors[i])
    }

    pub fn z_ratio(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.coefficients[i] / self.standard_errors[i])
    }

    /// Two-sided p-value of the coefficient's t or z ratio.
    pub fn p_value(&self, term: &str) -> Option<f64> {
        let z = self.z_ratio(term)?;
        Some(two_sided_p(z, self.inference))
    }

    pub fn test(&self, name: &str) -> Option<&TestResult> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    pub fn n_residual_periods(&self) -> usize {
        if self.n_banks == 0 {
            0
        } else {
            self.n_obs / self.n_banks
        }
    }
}

pub fn two_sided_p(z: f64, inference: Inference) -> f64 {
    if !z.is_finite() {
        return if z.is_nan() { f64::NAN } else { 0.0 };
    }
    let tail = match inference {
        Inference::Normal => Normal::standard().sf(z.abs()),
        Inference::StudentT(df) => StudentsT::new(0.0, 1.0, df.max(1) as f64)
            .expect("valid t distribution")
            .sf(z.abs()),
    };
    (2.0 * tail).clamp(0.0, 1.0)
}

pub(crate) mod matrix_rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::numerics::DenseMatrix;

    pub fn serialize<S: Serializer>(m: &DenseMatrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DenseMatrix, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(serde::de::Error::custom("ragged covariance rows"));
        }
        Ok(DenseMatrix::from_row_iterator(
            n,
            k,
            rows.into_iter().flatten(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_names_round_trip() {
        for e in [Estimator::Pols, Estimator::Fe, Estimator::Re, Estimator::DiffGmm, Estimator::SysGmm] {
            assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
        }
        assert!("ols".parse::<Estimator>().is_err());
    }

    #[test]
    fn baseline_layout() {
        let spec = ModelSpec::baseline(Estimator::SysGmm);
        assert_eq!(spec.regressors().len(), 12);
        assert_eq!(spec.lag_terms(), ["L.NIM", "L2.NIM"]);
        assert_eq!(spec.instruments.exogenous, ["HHI", "GDP", "INF"]);
        assert_eq!(ModelSpec::baseline(Estimator::Fe).dep_lags, 0);
    }

    #[test]
    fn policy_validation() {
        let mut p = InstrumentPolicy::default();
        assert!(p.validate().is_ok());
        p.min_lag = 1;
        assert!(p.validate().is_err());
        p.min_lag = 3;
        p.max_lag = Some(2);
        assert!(p.validate().is_err());
    }

    #[test]
    fn replace_regressor_keeps_block() {
        let mut spec = ModelSpec::baseline(Estimator::SysGmm);
        assert!(spec.replace_regressor("LOGTA", "MS"));
        assert_eq!(spec.pim, ["RA", "RBD", "OC", "MS"]);
        assert!(!spec.replace_regressor("LOGTA", "MS"));
    }
}
