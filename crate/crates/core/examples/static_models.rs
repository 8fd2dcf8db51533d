//! Pooled OLS, fixed effects and random effects on one static panel.
//!
//! The regressor is correlated with the bank effect, so POLS and RE are
//! pulled away from the true slope of 1.5 while FE is not.

use nimpanel::model::{Estimator, ModelSpec};
use nimpanel::report::CoefficientTable;
use nimpanel::simulation::{generate_panel, DgpSpec, RegressorProcess, RegressorSpec};

fn main() -> nimpanel::Result<()> {
    let mut x = RegressorSpec::new("X", RegressorProcess::IidNormal { mean: 0.0, sd: 1.0 }, 1.5);
    x.effect_loading = 0.8;
    let mut dgp = DgpSpec::ar1(60, 8, 0.0, 11).with_regressor(x);
    dgp.xi = 2.0;
    let data = generate_panel(&dgp)?;

    let mut columns = Vec::new();
    for e in [Estimator::Pols, Estimator::Fe, Estimator::Re] {
        let spec = ModelSpec::new("NIM", e).with_regressors(&["X"]);
        columns.push((e.column_label().to_string(), nimpanel::estimate(&spec, &data)?));
    }
    let re = &columns[2].1;
    if let Some(vc) = &re.variance_components {
        println!("sigma2_mu {:.3}  sigma2_eps {:.3}  theta {:.3}", vc.sigma2_mu, vc.sigma2_eps, vc.theta);
    }
    print!("{}", CoefficientTable::new("Static estimators (true slope 1.5)", columns).render_text());
    Ok(())
}
