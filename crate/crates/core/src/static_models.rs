//! Pooled OLS, within fixed-effects and Swamy-Arora random-effects GLS.

use std::ops::Range;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{
    flags, Equation, EstimationResult, Estimator, GmmState, Inference, ModelSpec, RSquaredKind,
    Residual, VarianceComponents, CONSTANT,
};
use crate::numerics::{solve_least_squares_named, DenseMatrix};
use crate::panel::{lag, PanelDataset};

/// Stacked single-equation design drawn from a panel.
#[derive(Debug, Clone)]
pub(crate) struct StaticDesign {
    pub y: Vec<f64>,
    /// Regressor columns (lags first), without a constant.
    pub cols: Vec<Vec<f64>>,
    pub names: Vec<String>,
    /// Source dataset row of each design row.
    pub rows: Vec<usize>,
    /// Design rows of each bank that has at least one usable row.
    pub bank_ranges: Vec<Range<usize>>,
    /// Dataset bank index of each entry in `bank_ranges`.
    pub bank_ids: Vec<usize>,
}

impl StaticDesign {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Bank means of a series laid out like `y`.
    pub fn bank_means(&self, v: &[f64]) -> Vec<f64> {
        self.bank_ranges
            .iter()
            .map(|r| v[r.clone()].iter().sum::<f64>() / r.len() as f64)
            .collect()
    }

    /// `v - theta * bank_mean(v)`.
    pub fn quasi_demean(&self, v: &[f64], theta: f64) -> Vec<f64> {
        let means = self.bank_means(v);
        let mut out = v.to_vec();
        for (r, m) in self.bank_ranges.iter().zip(means) {
            for x in &mut out[r.clone()] {
                *x -= theta * m;
            }
        }
        out
    }

    pub fn within_ss(&self, v: &[f64]) -> f64 {
        self.quasi_demean(v, 1.0).iter().map(|d| d * d).sum()
    }

    pub fn residuals(&self, data: &PanelDataset, values: &[f64]) -> Vec<Residual> {
        self.rows
            .iter()
            .zip(values)
            .map(|(&i, &value)| {
                let key = data.rows()[i];
                Residual {
                    bank: data.banks()[key.bank].id.clone(),
                    period: key.period,
                    equation: Equation::Level,
                    value,
                }
            })
            .collect()
    }
}

pub(crate) fn static_design(spec: &ModelSpec, data: &PanelDataset) -> Result<StaticDesign> {
    spec.validate(data)?;
    if spec.dep_lags > 0 && !spec.force_static_lags {
        return Err(Error::InvalidSpec(format!(
            "{} estimator with {} dependent-variable lags: static estimators are biased in dynamic panels; use diff-gmm/sys-gmm or set force_static_lags",
            spec.estimator, spec.dep_lags
        )));
    }
    let y_all = data.column(&spec.dependent)?;
    let lags = (1..=spec.dep_lags)
        .map(|k| lag(data, &spec.dependent, k))
        .collect::<Result<Vec<_>>>()?;
    let regs = spec.regressors();
    let reg_cols = regs
        .iter()
        .map(|r| data.column(r))
        .collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut cols = vec![Vec::new(); lags.len() + regs.len()];
    let mut rows = Vec::new();
    let mut bank_ranges = Vec::new();
    let mut bank_ids = Vec::new();
    for b in 0..data.n_banks() {
        let start = y.len();
        for i in data.bank_rows(b) {
            if lags.iter().any(|l| l.values[i].is_none()) {
                continue;
            }
            y.push(y_all[i]);
            for (j, l) in lags.iter().enumerate() {
                cols[j].push(l.values[i].unwrap_or_default());
            }
            for (j, c) in reg_cols.iter().enumerate() {
                cols[lags.len() + j].push(c[i]);
            }
            rows.push(i);
        }
        if y.len() > start {
            bank_ranges.push(start..y.len());
            bank_ids.push(b);
        }
    }
    let mut names = spec.lag_terms();
    names.extend(regs);
    Ok(StaticDesign {
        y,
        cols,
        names,
        rows,
        bank_ranges,
        bank_ids,
    })
}

pub(crate) struct OlsFit {
    pub beta: Vec<f64>,
    pub covariance: DenseMatrix,
    pub residuals: Vec<f64>,
    pub ssr: f64,
    pub dof: usize,
}

/// OLS with conventional (or bank-clustered) covariance. `dof` is the
/// residual degrees of freedom used for the error variance.
pub(crate) fn ols(
    cols: &[Vec<f64>],
    y: &[f64],
    names: &[String],
    dof: usize,
    clusters: Option<&[Range<usize>]>,
) -> Result<OlsFit> {
    let n = y.len();
    let k = cols.len();
    let x = DenseMatrix::from_fn(n, k, |i, j| cols[j][i]);
    let yv = DVector::from_column_slice(y);
    let ls = solve_least_squares_named(&x, &yv, names)?;
    let ssr = ls.ssr();
    if dof == 0 {
        return Err(Error::Dimension(format!(
            "no residual degrees of freedom ({n} observations)"
        )));
    }
    let covariance = match clusters {
        None => &ls.xtx_inverse * (ssr / dof as f64),
        Some(groups) => {
            let mut meat = DenseMatrix::zeros(k, k);
            for g in groups {
                let xg = x.rows(g.start, g.len());
                let score = xg.transpose() * ls.residuals.rows(g.start, g.len());
                meat += &score * score.transpose();
            }
            let g = groups.len() as f64;
            let adj = if g > 1.0 {
                g / (g - 1.0) * (n as f64 - 1.0) / dof as f64
            } else {
                1.0
            };
            &ls.xtx_inverse * meat * &ls.xtx_inverse * adj
        }
    };
    Ok(OlsFit {
        beta: ls.beta.iter().copied().collect(),
        covariance: crate::numerics::symmetrize(&covariance),
        residuals: ls.residuals.iter().copied().collect(),
        ssr,
        dof,
    })
}

fn standard_errors(cov: &DenseMatrix) -> Vec<f64> {
    (0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect()
}

fn check_estimator(spec: &ModelSpec, expected: Estimator) -> Result<()> {
    if spec.estimator != expected {
        return Err(Error::InvalidSpec(format!(
            "specification selects {} but {} was requested",
            spec.estimator, expected
        )));
    }
    Ok(())
}

fn base_flags(spec: &ModelSpec) -> Vec<String> {
    let mut f = Vec::new();
    if spec.dep_lags > 0 {
        f.push(flags::FORCED_STATIC_LAGS.to_string());
    }
    if spec.cluster_robust {
        f.push(flags::CLUSTER_ROBUST.to_string());
    }
    f
}

fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
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

/// Pooled OLS on the stacked observations.
pub fn estimate_pols(spec: &ModelSpec, data: &PanelDataset) -> Result<EstimationResult> {
    check_estimator(spec, Estimator::Pols)?;
    let d = static_design(spec, data)?;
    let mut cols = d.cols.clone();
    let mut names = d.names.clone();
    if spec.include_constant {
        cols.push(vec![1.0; d.n()]);
        names.push(CONSTANT.to_string());
    }
    let n = d.n();
    let fit = ols(
        &cols,
        &d.y,
        &names,
        n.saturating_sub(names.len()),
        spec.cluster_robust.then_some(d.bank_ranges.as_slice()),
    )?;
    let mean = d.y.iter().sum::<f64>() / n as f64;
    let sst: f64 = if spec.include_constant {
        d.y.iter().map(|v| (v - mean).powi(2)).sum()
    } else {
        d.y.iter().map(|v| v * v).sum()
    };
    Ok(EstimationResult {
        estimator: Estimator::Pols,
        spec: spec.clone(),
        standard_errors: standard_errors(&fit.covariance),
        terms: names,
        coefficients: fit.beta,
        covariance: fit.covariance,
        inference: Inference::StudentT(fit.dof),
        unavailable: Vec::new(),
        residuals: d.residuals(data, &fit.residuals),
        r_squared: if sst > 0.0 { 1.0 - fit.ssr / sst } else { 0.0 },
        r_squared_kind: RSquaredKind::Centered,
        ssr: fit.ssr,
        n_obs: n,
        n_banks: d.bank_ranges.len(),
        variance_components: None,
        instruments: None,
        flags: base_flags(spec),
        tests: Vec::new(),
        gmm_state: GmmState::default(),
    })
}

fn reject_time_invariant(d: &StaticDesign) -> Result<()> {
    for (name, col) in d.names.iter().zip(&d.cols) {
        let scale: f64 = col.iter().map(|v| v * v).sum();
        if d.within_ss(col) <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotIdentified(name.clone()));
        }
    }
    Ok(())
}

/// Within (fixed-effects) estimator.
///
/// Dependent and regressors are demeaned by bank and the grand mean is
/// added back so the constant is the average intercept. Residual degrees of
/// freedom are `N - n_banks - k`. The reported R-squared is the within
/// R-squared.
pub fn estimate_fe(spec: &ModelSpec, data: &PanelDataset) -> Result<EstimationResult> {
    check_estimator(spec, Estimator::Fe)?;
    let d = static_design(spec, data)?;
    reject_time_invariant(&d)?;
    let fe = fe_fit(&d, spec.include_constant, spec.cluster_robust)?;
    let y_within = d.quasi_demean(&d.y, 1.0);
    let sst_within: f64 = y_within.iter().map(|v| v * v).sum();
    Ok(EstimationResult {
        estimator: Estimator::Fe,
        spec: spec.clone(),
        standard_errors: standard_errors(&fe.fit.covariance),
        terms: fe.names,
        coefficients: fe.fit.beta,
        covariance: fe.fit.covariance,
        inference: Inference::StudentT(fe.fit.dof),
        unavailable: Vec::new(),
        residuals: d.residuals(data, &fe.fit.residuals),
        r_squared: if sst_within > 0.0 {
            1.0 - fe.fit.ssr / sst_within
        } else {
            0.0
        },
        r_squared_kind: RSquaredKind::Within,
        ssr: fe.fit.ssr,
        n_obs: d.n(),
        n_banks: d.bank_ranges.len(),
        variance_components: None,
        instruments: None,
        flags: base_flags(spec),
        tests: Vec::new(),
        gmm_state: GmmState::default(),
    })
}

pub(crate) struct FeFit {
    pub fit: OlsFit,
    pub names: Vec<String>,
}

pub(crate) fn fe_fit(d: &StaticDesign, constant: bool, cluster: bool) -> Result<FeFit> {
    let n = d.n();
    let restore = |v: &[f64]| -> Vec<f64> {
        let mean = v.iter().sum::<f64>() / n as f64;
        let add = if constant { mean } else { 0.0 };
        d.quasi_demean(v, 1.0).into_iter().map(|x| x + add).collect()
    };
    let y = restore(&d.y);
    let mut cols: Vec<Vec<f64>> = d.cols.iter().map(|c| restore(c)).collect();
    let mut names = d.names.clone();
    if constant {
        cols.push(vec![1.0; n]);
        names.push(CONSTANT.to_string());
    }
    let k = d.cols.len();
    let dof = n.saturating_sub(d.bank_ranges.len() + k);
    let fit = ols(&cols, &y, &names, dof, cluster.then_some(d.bank_ranges.as_slice()))?;
    Ok(FeFit { fit, names })
}

/// Swamy-Arora random-effects GLS.
///
/// `sigma2_eps` comes from the within regression and `sigma2_mu` from the
/// between regression on bank means; a negative `sigma2_mu` is clamped to
/// zero and flagged, in which case the estimates coincide with pooled OLS.
pub fn estimate_re(spec: &ModelSpec, data: &PanelDataset) -> Result<EstimationResult> {
    check_estimator(spec, Estimator::Re)?;
    let d = static_design(spec, data)?;
    let t = common_periods(&d)?;
    let n_banks = d.bank_ranges.len();
    let mut extra_flags = Vec::new();

    // within regression on regressors that vary within banks
    let mut within = d.clone();
    let keep: Vec<usize> = (0..d.cols.len())
        .filter(|&j| {
            let scale: f64 = d.cols[j].iter().map(|v| v * v).sum();
            d.within_ss(&d.cols[j]) > 1e-12 * scale.max(f64::MIN_POSITIVE)
        })
        .collect();
    within.cols = keep.iter().map(|&j| d.cols[j].clone()).collect();
    within.names = keep.iter().map(|&j| d.names[j].clone()).collect();
    let sigma2_eps = if within.cols.is_empty() {
        let y_w = d.quasi_demean(&d.y, 1.0);
        y_w.iter().map(|v| v * v).sum::<f64>() / (d.n() - n_banks) as f64
    } else {
        let fe = fe_fit(&within, false, false)?;
        fe.fit.ssr / fe.fit.dof as f64
    };

    // between regression on bank means
    let y_bar = d.bank_means(&d.y);
    let mut b_cols = Vec::new();
    let mut b_names = Vec::new();
    for (name, col) in d.names.iter().zip(&d.cols) {
        let m = d.bank_means(col);
        let mm = m.iter().sum::<f64>() / m.len() as f64;
        let var: f64 = m.iter().map(|v| (v - mm).powi(2)).sum();
        let scale: f64 = m.iter().map(|v| v * v).sum();
        if var > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            b_cols.push(m);
            b_names.push(name.clone());
        }
    }
    if b_cols.len() < d.cols.len() {
        extra_flags.push(flags::DROPPED_BETWEEN.to_string());
    }
    b_cols.push(vec![1.0; n_banks]);
    b_names.push(CONSTANT.to_string());
    let b_dof = n_banks.checked_sub(b_cols.len()).filter(|d| *d > 0).ok_or_else(|| {
        Error::Dimension(format!(
            "between regression needs more than {} banks, found {n_banks}",
            b_cols.len()
        ))
    })?;
    let between = ols(&b_cols, &y_bar, &b_names, b_dof, None)?;
    let sigma2_between = between.ssr / b_dof as f64;
    let mut sigma2_mu = sigma2_between - sigma2_eps / t as f64;
    if sigma2_mu < 0.0 {
        sigma2_mu = 0.0;
        extra_flags.push(flags::SIGMA_MU_CLAMPED.to_string());
    }
    let denom = t as f64 * sigma2_mu + sigma2_eps;
    let theta = if sigma2_mu == 0.0 || denom <= 0.0 {
        0.0
    } else {
        1.0 - (sigma2_eps / denom).sqrt()
    };
    let mut res = gls_fit(spec, data, &d, theta)?;
    // GLS covariance is sigma2_eps (X*'X*)^-1; at theta = 0 the model is pooled
    // OLS and keeps the pooled residual variance
    let s2 = res.ssr / res.n_obs.saturating_sub(res.terms.len()).max(1) as f64;
    if theta > 0.0 && !spec.cluster_robust && s2 > 0.0 && sigma2_eps.is_finite() {
        res.covariance *= sigma2_eps / s2;
        res.standard_errors = standard_errors(&res.covariance);
    }
    res.variance_components = Some(VarianceComponents {
        sigma2_mu,
        sigma2_eps,
        theta,
    });
    res.flags.extend(extra_flags);
    Ok(res)
}

fn common_periods(d: &StaticDesign) -> Result<usize> {
    let t = d.bank_ranges.first().map_or(0, |r| r.len());
    if t == 0 || d.bank_ranges.iter().any(|r| r.len() != t) {
        return Err(Error::UnsupportedShape(
            "random effects requires the same number of periods for every bank".into(),
        ));
    }
    Ok(t)
}

/// GLS step of random effects for a given quasi-demeaning factor `theta`.
///
/// `theta = 0` is pooled OLS and `theta = 1` is the within estimator (the
/// constant is then dropped since its transformed column vanishes).
pub fn estimate_quasi_demeaned(
    spec: &ModelSpec,
    data: &PanelDataset,
    theta: f64,
) -> Result<EstimationResult> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidSpec(format!("theta {theta} outside [0, 1]")));
    }
    let d = static_design(spec, data)?;
    let mut res = gls_fit(spec, data, &d, theta)?;
    res.variance_components = Some(VarianceComponents {
        sigma2_mu: f64::NAN,
        sigma2_eps: f64::NAN,
        theta,
    });
    Ok(res)
}

fn gls_fit(
    spec: &ModelSpec,
    data: &PanelDataset,
    d: &StaticDesign,
    theta: f64,
) -> Result<EstimationResult> {
    let y = d.quasi_demean(&d.y, theta);
    let mut cols: Vec<Vec<f64>> = d.cols.iter().map(|c| d.quasi_demean(c, theta)).collect();
    let mut names = d.names.clone();
    let with_constant = spec.include_constant && theta < 1.0;
    if with_constant {
        cols.push(vec![1.0 - theta; d.n()]);
        names.push(CONSTANT.to_string());
    }
    let n = d.n();
    let fit = ols(
        &cols,
        &y,
        &names,
        n.saturating_sub(names.len()),
        spec.cluster_robust.then_some(d.bank_ranges.as_slice()),
    )?;
    // residuals and fit on the original scale
    let fitted: Vec<f64> = (0..n)
        .map(|i| {
            let mut v: f64 = d.cols.iter().zip(&fit.beta).map(|(c, b)| c[i] * b).sum();
            if with_constant {
                v += fit.beta[d.cols.len()];
            }
            v
        })
        .collect();
    let raw: Vec<f64> = d.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let mut flags = base_flags(spec);
    if spec.include_constant && !with_constant {
        flags.push("constant_absorbed_theta_one".to_string());
    }
    Ok(EstimationResult {
        estimator: Estimator::Re,
        spec: spec.clone(),
        standard_errors: standard_errors(&fit.covariance),
        terms: names,
        coefficients: fit.beta,
        covariance: fit.covariance,
        inference: Inference::StudentT(fit.dof),
        unavailable: Vec::new(),
        residuals: d.residuals(data, &raw),
        r_squared: squared_correlation(&d.y, &fitted),
        r_squared_kind: RSquaredKind::Overall,
        ssr: fit.ssr,
        n_obs: n,
        n_banks: d.bank_ranges.len(),
        variance_components: None,
        instruments: None,
        flags,
        tests: Vec::new(),
        gmm_state: GmmState::default(),
    })
}
