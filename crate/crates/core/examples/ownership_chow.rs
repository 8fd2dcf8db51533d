//! Chow tests of coefficient equality across ownership groups.
//!
//! Foreign banks get a larger slope on X; the other groups share the
//! baseline.

use nimpanel::model::{Estimator, ModelSpec};
use nimpanel::panel::Ownership;
use nimpanel::report::render_chow;
use nimpanel::simulation::{generate_panel, DgpSpec, GroupShift, RegressorProcess, RegressorSpec};
use nimpanel::spec_tests::chow_test;

fn main() -> nimpanel::Result<()> {
    let mut dgp = DgpSpec::ar1(30, 12, 0.0, 3).with_regressor(RegressorSpec::new(
        "X",
        RegressorProcess::IidNormal { mean: 0.0, sd: 1.0 },
        1.0,
    ));
    dgp.ownership = vec![(Ownership::Foreign, 10), (Ownership::State, 10)];
    dgp.group_shift = Some(GroupShift {
        group: Ownership::Foreign,
        regressor: "X".into(),
        shift: 0.5,
    });
    let data = generate_panel(&dgp)?;
    let fe = nimpanel::estimate(&ModelSpec::new("NIM", Estimator::Fe).with_regressors(&["X"]), &data)?;
    print!("{}", render_chow(&chow_test(&fe, &data)?));
    Ok(())
}
