mod common;

use common::{close, iv_ratio, random_panel, Design};
use nimpanel::model::{Estimator, ModelSpec, CONSTANT};
use nimpanel::simulation::{generate_panel, DgpSpec};

fn spec(e: Estimator) -> ModelSpec {
    ModelSpec::new("Y", e).with_regressors(&["X1", "X2", "X3"])
}

#[test]
fn static_estimators_match_normal_equations() {
    for seed in 0..20 {
        let data = random_panel(seed, 5, 6, 3);
        let d = Design::from(&data, "Y", &["X1", "X2", "X3"]);
        let pols = nimpanel::estimate(&spec(Estimator::Pols), &data).unwrap();
        let fe = nimpanel::estimate(&spec(Estimator::Fe), &data).unwrap();
        let re = nimpanel::estimate(&spec(Estimator::Re), &data).unwrap();
        let (fe_beta, _) = d.fe();
        let (re_beta, theta) = d.re();
        for (got, want) in [(&pols, d.pols()), (&fe, fe_beta), (&re, re_beta)] {
            assert_eq!(got.terms.last().map(String::as_str), Some(CONSTANT));
            for (g, w) in got.coefficients.iter().zip(&want) {
                assert!(close(*g, *w, 1e-8), "seed {seed} {:?}: {g} vs {w}", got.estimator);
            }
        }
        assert!(close(re.variance_components.unwrap().theta, theta, 1e-10));
    }
}

#[test]
fn three_period_difference_gmm_is_the_iv_ratio() {
    for seed in 0..10 {
        let data = generate_panel(&DgpSpec::ar1(40, 3, 0.4, 100 + seed)).unwrap();
        let r = nimpanel::estimate(&ModelSpec::new("NIM", Estimator::DiffGmm).with_dep_lags(1), &data).unwrap();
        let want = iv_ratio(data.column("NIM").unwrap(), 40);
        assert!(close(r.coef("L.NIM").unwrap(), want, 1e-10));
        assert_eq!(r.n_obs, 40);
    }
}

#[test]
fn re_with_clamped_effect_is_pooled_ols() {
    // no bank effect at all: y depends on x only
    let mut found = false;
    for seed in 0..40 {
        let mut dgp = DgpSpec::ar1(8, 5, 0.0, seed).with_regressor(nimpanel::simulation::RegressorSpec::new(
            "X",
            nimpanel::simulation::RegressorProcess::IidNormal { mean: 0.0, sd: 1.0 },
            1.0,
        ));
        dgp.sigma_mu = 0.0;
        let data = generate_panel(&dgp).unwrap();
        let s = |e| ModelSpec::new("NIM", e).with_regressors(&["X"]);
        let re = nimpanel::estimate(&s(Estimator::Re), &data).unwrap();
        if re.variance_components.unwrap().sigma2_mu > 0.0 {
            continue;
        }
        found = true;
        let pols = nimpanel::estimate(&s(Estimator::Pols), &data).unwrap();
        assert_eq!(re.coefficients, pols.coefficients);
        assert_eq!(re.standard_errors, pols.standard_errors);
    }
    assert!(found, "no seed produced a clamped variance component");
}
