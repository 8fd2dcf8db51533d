//! Breusch-Pagan, Hausman and Wald tests on a panel with bank effects.

use nimpanel::model::{Estimator, ModelSpec};
use nimpanel::report::render_test;
use nimpanel::simulation::{generate_panel, DgpSpec, RegressorProcess, RegressorSpec};
use nimpanel::spec_tests::{bp_lm_test, hausman_test, wald_joint};

fn main() -> nimpanel::Result<()> {
    let iid = |sd| RegressorProcess::IidNormal { mean: 0.0, sd };
    let mut x1 = RegressorSpec::new("X1", iid(1.0), 0.7);
    x1.effect_loading = 0.6;
    let dgp = DgpSpec::ar1(80, 10, 0.0, 5)
        .with_regressor(x1)
        .with_regressor(RegressorSpec::new("X2", iid(1.0), 0.0));
    let data = generate_panel(&dgp)?;

    let fit = |e| nimpanel::estimate(&ModelSpec::new("NIM", e).with_regressors(&["X1", "X2"]), &data);
    let (pols, fe, re) = (fit(Estimator::Pols)?, fit(Estimator::Fe)?, fit(Estimator::Re)?);

    print!("{}", render_test(&bp_lm_test(&pols, &data)?));
    print!("{}", render_test(&hausman_test(&fe, &re)?));
    print!("{}", render_test(&wald_joint(&fe, &["X2"])?));
    print!("{}", render_test(&wald_joint(&fe, &["X1", "X2"])?));
    Ok(())
}
