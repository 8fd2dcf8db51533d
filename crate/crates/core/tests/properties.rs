mod common;

use common::{build, close, random_panel};
use nalgebra::DVector;
use nimpanel::gmm::{build_instruments, two_step_weight};
use nimpanel::model::{Equation, Estimator, ModelSpec, Weighting};
use nimpanel::panel::summarize;
use nimpanel::simulation::{generate_panel, DgpSpec};
use nimpanel::spec_tests::SARGAN;
use proptest::prelude::*;

/// Moment contributions `Z_i' e_i` over the difference rows of each bank.
fn moments(spec: &ModelSpec, data: &nimpanel::panel::PanelDataset, r: &nimpanel::model::EstimationResult) -> Vec<DVector<f64>> {
    let inst = build_instruments(spec, &spec.instruments, data).unwrap();
    inst.blocks
        .iter()
        .map(|blk| {
            let e = DVector::from_iterator(
                blk.difference_periods.len(),
                blk.difference_periods.iter().map(|&t| {
                    let p = data.periods()[t - 1];
                    r.residuals
                        .iter()
                        .find(|x| x.bank == blk.bank && x.period == p && x.equation == Equation::Difference)
                        .unwrap()
                        .value
                }),
            );
            blk.z.transpose() * e
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sums_of_squares_decompose(seed in any::<u64>(), n in 2usize..9, t in 2usize..9) {
        let data = random_panel(seed, n, t, 2);
        for v in ["Y", "X1", "X2"] {
            let s = summarize(&data, v).unwrap();
            prop_assert!((s.ss_overall - s.ss_between - s.ss_within).abs() <= 1e-10 * s.ss_overall.max(1.0));
        }
    }

    #[test]
    fn relabelling_banks_leaves_estimates_unchanged(seed in any::<u64>(), shift in 1usize..7) {
        let (n, t) = (7, 6);
        let data = random_panel(seed, n, t, 2);
        // move bank b's block to position (b + shift) mod n
        let perm: Vec<(String, Vec<f64>)> = ["Y", "X1", "X2"].iter().map(|name| {
            let c = data.column(name).unwrap();
            let mut out = vec![0.0; c.len()];
            for b in 0..n {
                let to = (b + shift) % n;
                out[to * t..(to + 1) * t].copy_from_slice(&c[b * t..(b + 1) * t]);
            }
            (name.to_string(), out)
        }).collect();
        let moved = build(n, t, perm);
        for e in [Estimator::Pols, Estimator::Fe, Estimator::Re, Estimator::DiffGmm, Estimator::SysGmm] {
            let mut spec = ModelSpec::new("Y", e).with_regressors(&["X1", "X2"]);
            if e.is_gmm() {
                spec = spec.with_dep_lags(1);
                spec.instruments.collapse = true;
            }
            let a = nimpanel::estimate(&spec, &data).unwrap();
            let b = nimpanel::estimate(&spec, &moved).unwrap();
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!(close(*x, *y, 1e-8), "{e:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn sargan_is_the_two_step_quadratic_form(seed in 0u64..1000, t in 4usize..8) {
        let data = generate_panel(&DgpSpec::ar1(60, t, 0.5, seed)).unwrap();
        let one = ModelSpec::new("NIM", Estimator::DiffGmm).with_dep_lags(1);
        let mut two = one.clone();
        two.weighting = Weighting::TwoStep;
        let r1 = nimpanel::estimate(&one, &data).unwrap();
        let r2 = nimpanel::estimate(&two, &data).unwrap();
        let w = two_step_weight(&moments(&one, &data, &r1)).unwrap().matrix;
        let g: DVector<f64> = moments(&two, &data, &r2).into_iter().sum();
        let j = (g.transpose() * w * &g)[(0, 0)];
        let reported = r2.test(SARGAN).unwrap().statistic;
        prop_assert!(close(j, reported, 1e-8), "{j} vs {reported}");
        prop_assert!(reported >= 0.0);
    }

    #[test]
    fn test_statistics_are_non_negative(seed in 0u64..1000) {
        let data = random_panel(seed, 12, 6, 2);
        let s = |e| ModelSpec::new("Y", e).with_regressors(&["X1", "X2"]);
        let pols = nimpanel::estimate(&s(Estimator::Pols), &data).unwrap();
        let fe = nimpanel::estimate(&s(Estimator::Fe), &data).unwrap();
        let re = nimpanel::estimate(&s(Estimator::Re), &data).unwrap();
        let tests = [
            nimpanel::spec_tests::bp_lm_test(&pols, &data).unwrap(),
            nimpanel::spec_tests::hausman_test(&fe, &re).unwrap(),
            nimpanel::spec_tests::wald_joint(&fe, &["X1", "X2"]).unwrap(),
        ];
        for t in &tests {
            prop_assert!(t.statistic >= 0.0);
            let p = t.p_value.unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
