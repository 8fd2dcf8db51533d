//! Fixed effects on a dynamic panel: the Nickell bias against GMM.

use nimpanel::model::{Estimator, ModelSpec};
use nimpanel::simulation::{monte_carlo, DgpSpec, McTest};

fn main() -> nimpanel::Result<()> {
    let dgp = DgpSpec::ar1(200, 6, 0.5, 31);
    let mut fe = ModelSpec::new("NIM", Estimator::Fe).with_dep_lags(1);
    fe.force_static_lags = true;
    let gmm = ModelSpec::new("NIM", Estimator::DiffGmm).with_dep_lags(1);

    // first-order approximation of the within bias
    let t = dgp.periods as f64 - 1.0;
    println!("approximate FE bias {:+.4}", -(1.0 + dgp.psi1) / (t - 1.0));

    for (label, spec, tests) in [
        ("FE", fe, vec![]),
        ("diff GMM", gmm, vec![McTest::ArOrder { order: 1 }, McTest::ArOrder { order: 2 }, McTest::Sargan]),
    ] {
        let mc = monte_carlo(&dgp, &spec, 200, &tests)?;
        let c = mc.coefficient("L.NIM").expect("estimated");
        println!("{label:<9} mean {:.4} bias {:+.4} rmse {:.4}", c.mean, c.bias.unwrap(), c.rmse.unwrap());
        for t in &mc.tests {
            println!("  {:<7} rejects at 5%: {:.3}", t.test, t.rejection_at(0.05).unwrap());
        }
    }
    Ok(())
}
