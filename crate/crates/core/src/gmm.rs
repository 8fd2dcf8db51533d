//! First-difference and system GMM for the dynamic margin equation.
//!
//! Every bank contributes a block of stacked equations: first differences
//! for periods `t = p+2..T` and, for system GMM, levels for `t = p+1..T`,
//! where `p` is the number of dependent-variable lags. Periods are counted
//! from 1 within the balanced panel.
//!
//! Difference rows are instrumented by lagged levels (`y_{t-k}`, `k >=
//! min_lag`) laid out block-diagonally by period unless collapsed. Level rows
//! are instrumented by differences lagged exactly once. Regressors flagged
//! exogenous instrument themselves.
//!
//! One-step estimates use the first-difference weight `(sum_i Z_i' H Z_i)^+`
//! with `H` tridiagonal (2 on the diagonal, -1 beside it) on difference rows
//! and the identity on level rows. Two-step re-weights with the inverse of
//! the residual moment covariance.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    flags, Equation, EstimationResult, Estimator, GmmState, Inference, InstrumentPolicy,
    InstrumentSummary, ModelSpec, RSquaredKind, Residual, Weighting, CONSTANT,
    LEVEL_INSTRUMENT_LAG,
};
use crate::numerics::{generalized_inverse_with_rank, spd_inverse, symmetrize, DenseMatrix};
use crate::panel::PanelDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentKind {
    /// Lagged level `v_{t-lag}` for the difference equation.
    LaggedLevel,
    /// The variable's own difference (difference equation) or level (level
    /// equation).
    Own,
    /// Difference lagged once, `v_{t-1} - v_{t-2}`, for the level equation.
    LaggedDifference,
    Constant,
}

/// Identity of one instrument column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstrumentColumn {
    pub variable: String,
    pub equation: Equation,
    pub kind: InstrumentKind,
    /// Equation period this column is specific to; `None` for collapsed or
    /// IV-style columns that span every row.
    pub period: Option<usize>,
    pub lag: usize,
}

/// Instrument block of one bank. Rows are difference equations followed by
/// level equations (system GMM only).
#[derive(Debug, Clone, PartialEq)]
pub struct BankInstruments {
    pub bank: String,
    pub z: DenseMatrix,
    pub difference_periods: Vec<usize>,
    pub level_periods: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSet {
    pub columns: Vec<InstrumentColumn>,
    pub blocks: Vec<BankInstruments>,
    /// Columns removed because they were zero for every bank.
    pub dropped_zero_columns: usize,
}

impl InstrumentSet {
    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn count_for(&self, variable: &str) -> usize {
        self.columns.iter().filter(|c| c.variable == variable).count()
    }
}

/// Row ranges (1-based periods) used for a given lag count and panel length.
#[derive(Debug, Clone, Copy)]
struct Layout {
    t: usize,
    lags: usize,
    system: bool,
}

impl Layout {
    fn difference_periods(&self) -> Vec<usize> {
        (self.lags + 2..=self.t).collect()
    }

    fn level_periods(&self) -> Vec<usize> {
        if self.system {
            (self.lags + 1..=self.t).collect()
        } else {
            Vec::new()
        }
    }
}

fn gmm_lags(policy: &InstrumentPolicy, t: usize) -> std::ops::RangeInclusive<usize> {
    let hi = t.saturating_sub(1);
    let hi = policy.max_lag.map_or(hi, |m| m.min(hi));
    policy.min_lag..=hi
}

fn catalog(spec: &ModelSpec, policy: &InstrumentPolicy, layout: Layout) -> Vec<InstrumentColumn> {
    let diff_periods = layout.difference_periods();
    let level_periods = layout.level_periods();
    let last = diff_periods.last().copied().unwrap_or(0);
    let mut cols = Vec::new();

    let lagged_levels = |var: &str, cols: &mut Vec<InstrumentColumn>| {
        if policy.collapse {
            for k in gmm_lags(policy, last) {
                cols.push(InstrumentColumn {
                    variable: var.to_string(),
                    equation: Equation::Difference,
                    kind: InstrumentKind::LaggedLevel,
                    period: None,
                    lag: k,
                });
            }
        } else {
            // earliest level first within each period
            for &t in &diff_periods {
                for k in gmm_lags(policy, t).rev() {
                    cols.push(InstrumentColumn {
                        variable: var.to_string(),
                        equation: Equation::Difference,
                        kind: InstrumentKind::LaggedLevel,
                        period: Some(t),
                        lag: k,
                    });
                }
            }
        }
    };
    lagged_levels(&spec.dependent, &mut cols);
    for x in spec.regressors() {
        if policy.treats_as_exogenous(&x) {
            cols.push(InstrumentColumn {
                variable: x,
                equation: Equation::Difference,
                kind: InstrumentKind::Own,
                period: None,
                lag: 0,
            });
        } else {
            lagged_levels(&x, &mut cols);
        }
    }

    if layout.system {
        let lagged_diff = |var: &str, cols: &mut Vec<InstrumentColumn>| {
            // the lagged difference needs periods t-1 and t-2
            let usable: Vec<usize> = level_periods.iter().copied().filter(|&t| t >= 3).collect();
            if policy.collapse {
                if !usable.is_empty() {
                    cols.push(InstrumentColumn {
                        variable: var.to_string(),
                        equation: Equation::Level,
                        kind: InstrumentKind::LaggedDifference,
                        period: None,
                        lag: LEVEL_INSTRUMENT_LAG,
                    });
                }
            } else {
                for t in usable {
                    cols.push(InstrumentColumn {
                        variable: var.to_string(),
                        equation: Equation::Level,
                        kind: InstrumentKind::LaggedDifference,
                        period: Some(t),
                        lag: LEVEL_INSTRUMENT_LAG,
                    });
                }
            }
        };
        lagged_diff(&spec.dependent, &mut cols);
        for x in spec.regressors() {
            if policy.treats_as_exogenous(&x) {
                cols.push(InstrumentColumn {
                    variable: x,
                    equation: Equation::Level,
                    kind: InstrumentKind::Own,
                    period: None,
                    lag: 0,
                });
            } else {
                lagged_diff(&x, &mut cols);
            }
        }
        if spec.include_constant {
            cols.push(InstrumentColumn {
                variable: CONSTANT.to_string(),
                equation: Equation::Level,
                kind: InstrumentKind::Constant,
                period: None,
                lag: 0,
            });
        }
    }
    cols
}

/// Builds the per-bank instrument blocks.
///
/// The equation layout follows `spec.estimator` (level rows only for system
/// GMM) and `spec.dep_lags` (at least one lag is assumed).
pub fn build_instruments(
    spec: &ModelSpec,
    policy: &InstrumentPolicy,
    data: &PanelDataset,
) -> Result<InstrumentSet> {
    policy.validate()?;
    let t = data.require_balanced()?;
    if t < 3 {
        return Err(Error::UnsupportedShape(
            "difference GMM needs three periods".into(),
        ));
    }
    let lags = spec.dep_lags.max(1);
    if lags + 2 > t {
        return Err(Error::UnsupportedShape(format!(
            "{lags} dependent-variable lags leave no differenced equation with {t} periods"
        )));
    }
    let layout = Layout {
        t,
        lags,
        system: spec.estimator == Estimator::SysGmm,
    };
    let columns = catalog(spec, policy, layout);
    let diff_periods = layout.difference_periods();
    let level_periods = layout.level_periods();
    let nd = diff_periods.len();
    let rows = nd + level_periods.len();

    let mut series: HashMap<&str, &[f64]> = HashMap::new();
    for c in &columns {
        if c.kind != InstrumentKind::Constant && !series.contains_key(c.variable.as_str()) {
            series.insert(c.variable.as_str(), data.column(&c.variable)?);
        }
    }

    let mut blocks = Vec::with_capacity(data.n_banks());
    for b in 0..data.n_banks() {
        let start = data.bank_rows(b).start;
        let at = |var: &str, period: usize| series[var][start + period - 1];
        let mut z = DenseMatrix::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            match (c.equation, c.kind) {
                (Equation::Difference, InstrumentKind::LaggedLevel) => {
                    for (r, &tp) in diff_periods.iter().enumerate() {
                        let applies = c.period.map_or(tp > c.lag, |p| p == tp);
                        if applies {
                            z[(r, j)] = at(&c.variable, tp - c.lag);
                        }
                    }
                }
                (Equation::Difference, InstrumentKind::Own) => {
                    for (r, &tp) in diff_periods.iter().enumerate() {
                        z[(r, j)] = at(&c.variable, tp) - at(&c.variable, tp - 1);
                    }
                }
                (Equation::Level, InstrumentKind::LaggedDifference) => {
                    for (r, &tp) in level_periods.iter().enumerate() {
                        let applies = tp >= 3 && c.period.is_none_or(|p| p == tp);
                        if applies {
                            z[(nd + r, j)] = at(&c.variable, tp - 1) - at(&c.variable, tp - 2);
                        }
                    }
                }
                (Equation::Level, InstrumentKind::Own) => {
                    for (r, &tp) in level_periods.iter().enumerate() {
                        z[(nd + r, j)] = at(&c.variable, tp);
                    }
                }
                (Equation::Level, InstrumentKind::Constant) => {
                    for r in 0..level_periods.len() {
                        z[(nd + r, j)] = 1.0;
                    }
                }
                _ => unreachable!("instrument catalog only pairs kinds with their equation"),
            }
        }
        blocks.push(BankInstruments {
            bank: data.banks()[b].id.clone(),
            z,
            difference_periods: diff_periods.clone(),
            level_periods: level_periods.clone(),
        });
    }

    let keep: Vec<usize> = (0..columns.len())
        .filter(|&j| blocks.iter().any(|blk| blk.z.column(j).iter().any(|v| *v != 0.0)))
        .collect();
    let dropped = columns.len() - keep.len();
    if dropped > 0 {
        for blk in &mut blocks {
            blk.z = blk.z.select_columns(&keep);
        }
    }
    let columns = keep.iter().map(|&j| columns[j].clone()).collect();
    Ok(InstrumentSet {
        columns,
        blocks,
        dropped_zero_columns: dropped,
    })
}

/// Regressors and instruments of one bank's stacked equations.
#[derive(Debug, Clone)]
pub(crate) struct BankSystem {
    pub bank: usize,
    pub y: DVector<f64>,
    pub x: DenseMatrix,
    pub z: DenseMatrix,
    pub n_diff: usize,
    pub diff_periods: Vec<i64>,
    pub level_periods: Vec<i64>,
}

impl BankSystem {
    /// One-step weighting kernel: tridiagonal on differences, identity on levels.
    fn h(&self) -> DenseMatrix {
        let rows = self.y.len();
        let mut h = DenseMatrix::identity(rows, rows);
        for r in 0..self.n_diff {
            h[(r, r)] = 2.0;
            if r + 1 < self.n_diff {
                h[(r, r + 1)] = -1.0;
                h[(r + 1, r)] = -1.0;
            }
        }
        h
    }
}

/// Working matrices retained by a GMM fit for the residual-based tests.
#[derive(Debug, Clone)]
pub struct GmmInternals {
    pub(crate) banks: Vec<BankSystem>,
    /// Residuals at the reported estimate, per bank.
    pub(crate) residuals: Vec<DVector<f64>>,
    /// `sum_i Z_i' X_i`.
    pub(crate) zx: DenseMatrix,
    /// Weight matrix of the reported step.
    pub(crate) weight: DenseMatrix,
    /// `(A' W A)^-1` of the reported step.
    pub(crate) bread: DenseMatrix,
    /// Heteroskedasticity-robust covariance of the reported estimate.
    pub(crate) robust_covariance: DenseMatrix,
    /// Moments `sum_i Z_i' e_i` at the two-step estimate.
    pub(crate) sargan_moments: DVector<f64>,
    /// Two-step weight built from one-step residuals.
    pub(crate) sargan_weight: DenseMatrix,
    /// Why the Sargan statistic cannot be computed, if it cannot.
    pub(crate) sargan_unavailable: Option<&'static str>,
    pub(crate) n_instruments: usize,
    pub(crate) n_params: usize,
}

impl GmmInternals {
    pub fn n_instruments(&self) -> usize {
        self.n_instruments
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn sargan_moments(&self) -> &DVector<f64> {
        &self.sargan_moments
    }

    pub fn sargan_weight(&self) -> &DenseMatrix {
        &self.sargan_weight
    }
}

/// Output of [`two_step_weight`].
#[derive(Debug, Clone)]
pub struct TwoStepWeight {
    pub matrix: DenseMatrix,
    pub rank: usize,
    /// All moment contributions were zero.
    pub degenerate: bool,
}

/// `W = (sum_i g_i g_i')^+` from per-bank moment contributions
/// `g_i = Z_i' e_i`.
pub fn two_step_weight(contributions: &[DVector<f64>]) -> Result<TwoStepWeight> {
    let m = contributions.first().map_or(0, DVector::len);
    let mut omega = DenseMatrix::zeros(m, m);
    for g in contributions {
        if g.len() != m {
            return Err(Error::Dimension("moment contributions differ in length".into()));
        }
        omega += g * g.transpose();
    }
    let degenerate = omega.iter().all(|v| *v == 0.0);
    let g = generalized_inverse_with_rank(&symmetrize(&omega))?;
    Ok(TwoStepWeight {
        matrix: g.matrix,
        rank: g.rank,
        degenerate,
    })
}

fn check_gmm(spec: &ModelSpec, expected: Estimator, data: &PanelDataset) -> Result<()> {
    if spec.estimator != expected {
        return Err(Error::InvalidSpec(format!(
            "specification selects {} but {} was requested",
            spec.estimator, expected
        )));
    }
    if spec.dep_lags == 0 {
        return Err(Error::InvalidSpec(
            "dynamic GMM needs at least one lag of the dependent variable".into(),
        ));
    }
    spec.validate(data)
}

fn assemble(
    spec: &ModelSpec,
    policy: &InstrumentPolicy,
    data: &PanelDataset,
) -> Result<(Vec<BankSystem>, InstrumentSet, Vec<String>)> {
    let inst = build_instruments(spec, policy, data)?;
    let system = spec.estimator == Estimator::SysGmm;
    let p = spec.dep_lags;
    let y_all = data.column(&spec.dependent)?;
    let regs = spec.regressors();
    let reg_cols = regs
        .iter()
        .map(|r| data.column(r))
        .collect::<Result<Vec<_>>>()?;
    let mut names = spec.lag_terms();
    names.extend(regs.iter().cloned());
    let with_constant = system && spec.include_constant;
    if with_constant {
        names.push(CONSTANT.to_string());
    }
    let k = names.len();

    let mut banks = Vec::with_capacity(data.n_banks());
    for (b, blk) in inst.blocks.iter().enumerate() {
        let start = data.bank_rows(b).start;
        let y = |t: usize| y_all[start + t - 1];
        let x = |j: usize, t: usize| reg_cols[j][start + t - 1];
        let nd = blk.difference_periods.len();
        let rows = nd + blk.level_periods.len();
        let mut yv = DVector::zeros(rows);
        let mut xm = DenseMatrix::zeros(rows, k);
        for (r, &t) in blk.difference_periods.iter().enumerate() {
            yv[r] = y(t) - y(t - 1);
            for l in 1..=p {
                xm[(r, l - 1)] = y(t - l) - y(t - l - 1);
            }
            for j in 0..regs.len() {
                xm[(r, p + j)] = x(j, t) - x(j, t - 1);
            }
        }
        for (r, &t) in blk.level_periods.iter().enumerate() {
            let row = nd + r;
            yv[row] = y(t);
            for l in 1..=p {
                xm[(row, l - 1)] = y(t - l);
            }
            for j in 0..regs.len() {
                xm[(row, p + j)] = x(j, t);
            }
            if with_constant {
                xm[(row, k - 1)] = 1.0;
            }
        }
        let period = |t: usize| data.periods()[t - 1];
        banks.push(BankSystem {
            bank: b,
            y: yv,
            x: xm,
            z: blk.z.clone(),
            n_diff: nd,
            diff_periods: blk.difference_periods.iter().map(|&t| period(t)).collect(),
            level_periods: blk.level_periods.iter().map(|&t| period(t)).collect(),
        });
    }
    Ok((banks, inst, names))
}

struct Step {
    beta: DVector<f64>,
    bread: DenseMatrix,
    residuals: Vec<DVector<f64>>,
}

fn gmm_step(
    banks: &[BankSystem],
    zx: &DenseMatrix,
    zy: &DVector<f64>,
    weight: &DenseMatrix,
    names: &[String],
) -> Result<Step> {
    let awa = zx.transpose() * weight * zx;
    let (bread, fallback) = spd_inverse(&awa)?;
    if fallback {
        let g = generalized_inverse_with_rank(&symmetrize(&awa))?;
        if !g.is_full_rank() {
            return Err(Error::SingularDesign {
                condition: f64::INFINITY,
                columns: names.to_vec(),
            });
        }
    }
    let beta = &bread * (zx.transpose() * weight * zy);
    let residuals = banks.iter().map(|b| &b.y - &b.x * &beta).collect();
    Ok(Step {
        beta,
        bread,
        residuals,
    })
}

fn moment_contributions(banks: &[BankSystem], residuals: &[DVector<f64>]) -> Vec<DVector<f64>> {
    banks
        .iter()
        .zip(residuals)
        .map(|(b, e)| b.z.transpose() * e)
        .collect()
}

fn sandwich(bread: &DenseMatrix, zx: &DenseMatrix, weight: &DenseMatrix, omega: &DenseMatrix) -> DenseMatrix {
    let left = bread * zx.transpose() * weight;
    symmetrize(&(&left * omega * left.transpose()))
}

fn outer_sum(g: &[DVector<f64>]) -> DenseMatrix {
    let m = g.first().map_or(0, DVector::len);
    let mut omega = DenseMatrix::zeros(m, m);
    for v in g {
        omega += v * v.transpose();
    }
    omega
}

/// Windmeijer (2005) finite-sample corrected two-step covariance.
fn windmeijer(
    banks: &[BankSystem],
    one_step_residuals: &[DVector<f64>],
    zx: &DenseMatrix,
    w2: &DenseMatrix,
    two: &Step,
    v_one_robust: &DenseMatrix,
    zy: &DVector<f64>,
) -> DenseMatrix {
    let k = zx.ncols();
    let g2 = zy - zx * &two.beta;
    let u = w2 * &g2;
    let left = &two.bread * zx.transpose() * w2;
    let mut d = DenseMatrix::zeros(k, k);
    let per_bank: Vec<(DVector<f64>, DenseMatrix)> = banks
        .iter()
        .zip(one_step_residuals)
        .map(|(b, e)| (b.z.transpose() * e, b.z.transpose() * &b.x))
        .collect();
    for j in 0..k {
        let mut acc = DVector::zeros(zx.nrows());
        for (a, c) in &per_bank {
            let cj = c.column(j);
            acc += cj * a.dot(&u) + a * cj.dot(&u);
        }
        d.set_column(j, &(&left * acc));
    }
    let v2 = &two.bread;
    symmetrize(&(v2 + &d * v2 + v2 * d.transpose() + &d * v_one_robust * d.transpose()))
}

fn fit(spec: &ModelSpec, policy: &InstrumentPolicy, data: &PanelDataset) -> Result<EstimationResult> {
    let (banks, inst, names) = assemble(spec, policy, data)?;
    let m = inst.column_count();
    let k = names.len();
    if m < k {
        return Err(Error::UnderIdentified {
            instruments: m,
            parameters: k,
        });
    }
    let mut result_flags = Vec::new();
    if inst.dropped_zero_columns > 0 {
        result_flags.push(format!("dropped_{}_all_zero_instruments", inst.dropped_zero_columns));
    }

    let mut zx = DenseMatrix::zeros(m, k);
    let mut zy = DVector::zeros(m);
    let mut zhz = DenseMatrix::zeros(m, m);
    for b in &banks {
        let zt = b.z.transpose();
        zx += &zt * &b.x;
        zy += &zt * &b.y;
        zhz += &zt * b.h() * &b.z;
    }
    let w1 = generalized_inverse_with_rank(&symmetrize(&zhz))?;
    if !w1.is_full_rank() {
        result_flags.push(flags::SINGULAR_WEIGHT.to_string());
    }
    let one = gmm_step(&banks, &zx, &zy, &w1.matrix, &names)?;
    let g1 = moment_contributions(&banks, &one.residuals);
    let omega1 = outer_sum(&g1);
    let v1_robust = sandwich(&one.bread, &zx, &w1.matrix, &omega1);

    let w2 = two_step_weight(&g1)?;
    let two = if w2.degenerate {
        result_flags.push(flags::DEGENERATE_WEIGHT.to_string());
        None
    } else {
        if w2.rank < m && !result_flags.iter().any(|f| f == flags::SINGULAR_WEIGHT) {
            result_flags.push(flags::SINGULAR_WEIGHT.to_string());
        }
        match gmm_step(&banks, &zx, &zy, &w2.matrix, &names) {
            Ok(step) => Some(step),
            // too few banks for the moment covariance; one-step results stand
            Err(Error::SingularDesign { .. }) if spec.weighting == Weighting::OneStep => {
                result_flags.push(flags::TWO_STEP_UNAVAILABLE.to_string());
                None
            }
            Err(e) => return Err(e),
        }
    };
    let sargan_moments = match &two {
        Some(s) => &zy - &zx * &s.beta,
        None => &zy - &zx * &one.beta,
    };

    let sargan_unavailable = if w2.degenerate {
        Some(flags::DEGENERATE_WEIGHT)
    } else if two.is_none() {
        Some(flags::TWO_STEP_UNAVAILABLE)
    } else {
        None
    };
    let n_diff: usize = banks.iter().map(|b| b.n_diff).sum();
    let use_two = spec.weighting == Weighting::TwoStep && two.is_some();
    let (beta, covariance, weight, bread, robust, residuals) = if use_two {
        let s = two.expect("checked above");
        let mut cov = s.bread.clone();
        if spec.windmeijer {
            cov = windmeijer(&banks, &one.residuals, &zx, &w2.matrix, &s, &v1_robust, &zy);
            result_flags.push(flags::WINDMEIJER.to_string());
        }
        let robust = cov.clone();
        (s.beta, cov, w2.matrix.clone(), s.bread, robust, s.residuals)
    } else {
        let cov = if spec.estimator == Estimator::DiffGmm {
            let ssr: f64 = one
                .residuals
                .iter()
                .zip(&banks)
                .map(|(e, b)| e.rows(0, b.n_diff).norm_squared())
                .sum();
            let sigma2 = ssr / (2.0 * n_diff.saturating_sub(k).max(1) as f64);
            &one.bread * sigma2
        } else {
            v1_robust.clone()
        };
        (one.beta, cov, w1.matrix, one.bread, v1_robust, one.residuals)
    };

    // fit measure on the differenced equations
    let mut actual = Vec::with_capacity(n_diff);
    let mut fitted = Vec::with_capacity(n_diff);
    for b in &banks {
        let f = &b.x * &beta;
        for r in 0..b.n_diff {
            actual.push(b.y[r]);
            fitted.push(f[r]);
        }
    }
    let r_squared = squared_corr(&actual, &fitted);

    let mut res_out = Vec::new();
    for (b, e) in banks.iter().zip(&residuals) {
        let id = &data.banks()[b.bank].id;
        for (r, &p) in b.diff_periods.iter().enumerate() {
            res_out.push(Residual {
                bank: id.clone(),
                period: p,
                equation: Equation::Difference,
                value: e[r],
            });
        }
        for (r, &p) in b.level_periods.iter().enumerate() {
            res_out.push(Residual {
                bank: id.clone(),
                period: p,
                equation: Equation::Level,
                value: e[b.n_diff + r],
            });
        }
    }
    let ssr = residuals.iter().map(|e| e.norm_squared()).sum();
    let n_obs = if spec.estimator == Estimator::SysGmm {
        banks.iter().map(|b| b.level_periods.len()).sum()
    } else {
        n_diff
    };

    let internals = GmmInternals {
        banks,
        residuals,
        zx,
        weight,
        bread,
        robust_covariance: robust,
        sargan_moments,
        sargan_weight: w2.matrix,
        sargan_unavailable,
        n_instruments: m,
        n_params: k,
    };
    let standard_errors = (0..k).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    let mut unavailable = Vec::new();
    if spec.estimator == Estimator::DiffGmm && spec.include_constant {
        unavailable.push(CONSTANT.to_string());
    }
    let mut spec_out = spec.clone();
    spec_out.instruments = policy.clone();
    let mut result = EstimationResult {
        estimator: spec.estimator,
        spec: spec_out,
        terms: names,
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        covariance: symmetrize(&covariance),
        inference: Inference::Normal,
        unavailable,
        residuals: res_out,
        r_squared,
        r_squared_kind: RSquaredKind::SquaredCorrelationDifferences,
        ssr,
        n_obs,
        n_banks: data.n_banks(),
        variance_components: None,
        instruments: Some(InstrumentSummary {
            count: m,
            parameters: k,
            policy: policy.clone(),
        }),
        flags: result_flags,
        tests: Vec::new(),
        gmm_state: GmmState(Some(std::sync::Arc::new(internals))),
    };
    attach_tests(&mut result);
    Ok(result)
}

fn attach_tests(result: &mut EstimationResult) {
    let mut tests = Vec::new();
    if let Ok(s) = crate::spec_tests::sargan_test(result) {
        tests.push(s);
    }
    for order in [1, 2] {
        if let Ok(t) = crate::spec_tests::ar_test(result, order) {
            tests.push(t);
        }
    }
    result.tests = tests;
}

fn squared_corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab * sab / (saa * sbb)
    }
}

/// First-difference (Arellano-Bond) GMM. The constant is not estimated in
/// differences and is listed in `unavailable`.
pub fn estimate_diff_gmm(
    spec: &ModelSpec,
    policy: &InstrumentPolicy,
    data: &PanelDataset,
) -> Result<EstimationResult> {
    check_gmm(spec, Estimator::DiffGmm, data)?;
    fit(spec, policy, data)
}

/// System (Blundell-Bond) GMM: difference and level equations stacked.
/// Mean stationarity of the initial conditions is maintained, not tested.
pub fn estimate_sys_gmm(
    spec: &ModelSpec,
    policy: &InstrumentPolicy,
    data: &PanelDataset,
) -> Result<EstimationResult> {
    check_gmm(spec, Estimator::SysGmm, data)?;
    fit(spec, policy, data)
}
