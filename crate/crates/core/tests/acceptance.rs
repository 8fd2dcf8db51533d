//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits nonzero if any fails.

mod common;

use common::{iv_ratio, random_panel, Design};
use nimpanel::cli::{apply_scenario, default_ssmpl_drop, Scenario};
use nimpanel::gmm::build_instruments;
use nimpanel::model::{flags, Estimator, InstrumentPolicy, ModelSpec, CONSTANT};
use nimpanel::panel::{load_panel, summarize, write_panel, Ownership, PanelDataset};
use nimpanel::report::{render_chow, render_test, CoefficientTable};
use nimpanel::simulation::{
    generate_panel, monte_carlo, nominal_margin, nominal_margin_expanded, turkey_like, uniform_draws, DgpSpec,
    FisherInputs, GroupShift, McTest, RegressorProcess, RegressorSpec,
};
use nimpanel::spec_tests::{bp_lm_test, chow_test, hausman_test, sargan_test};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn diff_gmm() -> ModelSpec {
    ModelSpec::new("NIM", Estimator::DiffGmm).with_dep_lags(1)
}

fn with_x(dgp: DgpSpec, loading: f64) -> DgpSpec {
    let mut x = RegressorSpec::new("X", RegressorProcess::IidNormal { mean: 0.0, sd: 1.0 }, 1.0);
    x.effect_loading = loading;
    dgp.with_regressor(x)
}

fn static_spec(e: Estimator) -> ModelSpec {
    ModelSpec::new("NIM", e).with_regressors(&["X"])
}

fn ownership_dgp(n_each: usize, t: usize, seed: u64) -> DgpSpec {
    let mut dgp = with_x(DgpSpec::ar1(3 * n_each, t, 0.0, seed), 0.0);
    dgp.ownership = vec![(Ownership::Foreign, n_each), (Ownership::State, n_each)];
    dgp
}

fn rejection(dgp: &DgpSpec, model: &ModelSpec, reps: usize, test: McTest) -> Result<f64, String> {
    let mc = monte_carlo(dgp, model, reps, &[test]).map_err(fail)?;
    let t = &mc.tests[0];
    if t.failures > 0 {
        return Err(format!("{} failed in {} replications", t.test, t.failures));
    }
    Ok(t.rejection_at(0.05).unwrap())
}

fn mean_coefficient(dgp: &DgpSpec, model: &ModelSpec, reps: usize) -> Result<f64, String> {
    let mc = monte_carlo(dgp, model, reps, &[]).map_err(fail)?;
    Ok(mc.coefficient("L.NIM").ok_or("no L.NIM")?.mean)
}

fn c1_static_oracle() -> Outcome {
    let start = Instant::now();
    let regs = ["X1", "X2", "X3"];
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let data = random_panel(1000 + seed, 5, 6, 3);
        let d = Design::from(&data, "Y", &regs);
        let wants = [d.pols(), d.fe().0, d.re().0];
        for (e, want) in [Estimator::Pols, Estimator::Fe, Estimator::Re].into_iter().zip(wants) {
            let r = nimpanel::estimate(&ModelSpec::new("Y", e).with_regressors(&regs), &data).map_err(fail)?;
            for (g, w) in r.coefficients.iter().zip(&want) {
                worst = worst.max((g - w).abs() / (1.0 + w.abs()));
            }
        }
    }
    let took = start.elapsed();
    check(worst <= 1e-8 && took < Duration::from_secs(5), format!("max rel diff {worst:.1e}, {took:.2?}"))
}

fn c2_iv_ratio() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let data = generate_panel(&DgpSpec::ar1(30, 3, 0.6, 2000 + seed)).map_err(fail)?;
        let r = nimpanel::estimate(&diff_gmm(), &data).map_err(fail)?;
        let want = iv_ratio(data.column("NIM").map_err(fail)?, 30);
        worst = worst.max((r.coef("L.NIM").unwrap() - want).abs() / (1.0 + want.abs()));
    }
    check(worst <= 1e-10, format!("max rel diff {worst:.1e}"))
}

fn c3_psi_recovery() -> Outcome {
    let start = Instant::now();
    let mean = mean_coefficient(&DgpSpec::ar1(200, 8, 0.5, 3000), &diff_gmm(), 200)?;
    let took = start.elapsed();
    check(
        (mean - 0.5).abs() < 0.03 && took < Duration::from_secs(60),
        format!("mean psi {mean:.4}, {took:.2?}"),
    )
}

fn c4_system_vs_difference() -> Outcome {
    let dgp = DgpSpec::ar1(200, 6, 0.9, 4000);
    let diff = mean_coefficient(&dgp, &diff_gmm(), 200)? - 0.9;
    let sys = mean_coefficient(&dgp, &diff_gmm().with_estimator(Estimator::SysGmm), 200)? - 0.9;
    check(sys.abs() < diff.abs() && diff < 0.0, format!("bias diff {diff:+.4}, sys {sys:+.4}"))
}

fn c5_nickell() -> Outcome {
    let mut fe = ModelSpec::new("NIM", Estimator::Fe).with_dep_lags(1);
    fe.force_static_lags = true;
    let mean = mean_coefficient(&DgpSpec::ar1(200, 6, 0.5, 5000), &fe, 200)?;
    check(mean < 0.45, format!("mean FE psi {mean:.4}"))
}

fn c6_size() -> Outcome {
    let start = Instant::now();
    let within = |r: f64| (r - 0.05).abs() <= 0.03;

    let mut no_effect = with_x(DgpSpec::ar1(50, 10, 0.0, 6000), 0.0);
    no_effect.sigma_mu = 0.0;
    let bp = rejection(&no_effect, &static_spec(Estimator::Pols), 1000, McTest::BreuschPagan)?;

    let re_valid = with_x(DgpSpec::ar1(50, 10, 0.0, 6100), 0.0);
    let hausman = rejection(&re_valid, &static_spec(Estimator::Re), 1000, McTest::Hausman)?;

    let ar2 = rejection(&DgpSpec::ar1(500, 6, 0.5, 6200), &diff_gmm(), 1000, McTest::ArOrder { order: 2 })?;

    let chow = rejection(
        &ownership_dgp(10, 10, 6300),
        &static_spec(Estimator::Fe),
        500,
        McTest::ChowJoint { group: Ownership::Foreign },
    )?;
    let took = start.elapsed();
    check(
        within(bp) && within(hausman) && within(ar2) && within(chow) && took < Duration::from_secs(300),
        format!("BP-LM {bp:.3}, Hausman {hausman:.3}, AR(2) {ar2:.3}, Chow {chow:.3}, {took:.2?}"),
    )
}

fn c7_power() -> Outcome {
    let bp = rejection(
        &with_x(DgpSpec::ar1(50, 10, 0.0, 7000), 0.0),
        &static_spec(Estimator::Pols),
        500,
        McTest::BreuschPagan,
    )?;

    // x = e + loading * mu has correlation 0.5 with mu when loading * sigma_mu = sd / sqrt(3)
    let correlated = with_x(DgpSpec::ar1(50, 10, 0.0, 7100), 1.0 / 3f64.sqrt());
    let hausman = rejection(&correlated, &static_spec(Estimator::Re), 500, McTest::Hausman)?;

    let ar1 = rejection(&DgpSpec::ar1(500, 6, 0.5, 7200), &diff_gmm(), 500, McTest::ArOrder { order: 1 })?;

    // shift the foreign slope by five standard errors of the pilot difference
    let pilot = ownership_dgp(10, 10, 7300);
    let data = generate_panel(&pilot).map_err(fail)?;
    let fe = nimpanel::estimate(&static_spec(Estimator::Fe), &data).map_err(fail)?;
    let se = chow_test(&fe, &data).map_err(fail)?.group(Ownership::Foreign).ok_or("no group")?.coefficients[0]
        .standard_error;
    let mut shifted = ownership_dgp(10, 10, 7400);
    shifted.group_shift = Some(GroupShift { group: Ownership::Foreign, regressor: "X".into(), shift: 5.0 * se });
    let chow = rejection(&shifted, &static_spec(Estimator::Fe), 500, McTest::ChowJoint { group: Ownership::Foreign })?;

    check(
        bp > 0.99 && hausman > 0.80 && ar1 > 0.90 && chow > 0.99,
        format!("BP-LM {bp:.3}, Hausman {hausman:.3}, AR(1) {ar1:.3}, Chow {chow:.3}"),
    )
}

fn c8_sargan() -> Outcome {
    let mut spec = diff_gmm();
    spec.instruments = InstrumentPolicy::uncapped();
    let dgp = DgpSpec::ar1(500, 5, 0.5, 77);
    let mc = monte_carlo(&dgp, &spec, 500, &[McTest::Sargan]).map_err(fail)?;
    let mean = mc.tests[0].mean_statistic;

    let data = generate_panel(&DgpSpec::ar1(50, 3, 0.5, 8100)).map_err(fail)?;
    let exact = sargan_test(&nimpanel::estimate(&spec, &data).map_err(fail)?).map_err(fail)?;
    let text = render_test(&exact);
    let df5 = generate_panel(&dgp).map_err(fail)?;
    let df = sargan_test(&nimpanel::estimate(&spec, &df5).map_err(fail)?).map_err(fail)?.df;
    check(
        (mean - 5.0).abs() < 0.5
            && format!("{df:?}").contains('5')
            && exact.has_flag(flags::EXACTLY_IDENTIFIED)
            && text.contains("exactly identified"),
        format!("mean J {mean:.3} with df {df:?}; T=3 prints exactly identified"),
    )
}

fn c9_instrument_count() -> Outcome {
    let mut spec = diff_gmm();
    spec.instruments = InstrumentPolicy::uncapped();
    for t in 3..=12usize {
        let data = generate_panel(&DgpSpec::ar1(4, t, 0.5, 9000 + t as u64)).map_err(fail)?;
        let n = build_instruments(&spec, &spec.instruments, &data).map_err(fail)?.column_count();
        if n != (t - 1) * (t - 2) / 2 {
            return Err(format!("T={t}: {n} columns"));
        }
    }
    let data = generate_panel(&DgpSpec::ar1(2, 4, 0.5, 9100)).map_err(fail)?;
    let inst = build_instruments(&spec, &spec.instruments, &data).map_err(fail)?;
    let y = data.column("NIM").map_err(fail)?;
    let z = &inst.blocks[0].z;
    let want = [[y[0], 0.0, 0.0], [0.0, y[0], y[1]]];
    let shape = z.nrows() == 2 && z.ncols() == 3 && (0..2).all(|r| (0..3).all(|c| z[(r, c)] == want[r][c]));
    check(shape, "(T-1)(T-2)/2 for T=3..12; T=4 block [y1 0 0; 0 y1 y2]".into())
}

fn c10_descriptive() -> Outcome {
    let mut panels: Vec<PanelDataset> = (0..5).map(|s| generate_panel(&turkey_like(10_000 + s)).unwrap()).collect();
    panels.extend((0..5).map(|s| random_panel(10_100 + s, 7, 9, 3)));
    let mut worst: f64 = 0.0;
    for p in &panels {
        for v in p.column_names() {
            let s = summarize(p, v).map_err(fail)?;
            worst = worst.max((s.ss_overall - s.ss_between - s.ss_within).abs() / s.ss_overall.max(f64::MIN_POSITIVE));
        }
    }
    let mut buf = Vec::new();
    write_panel(&panels[0], &mut buf, b',').map_err(fail)?;
    let back = load_panel(buf.as_slice(), &[]).map_err(fail)?;
    let s = summarize(&back, "NIM").map_err(fail)?;
    check(
        worst <= 1e-10 && (s.n_obs, s.n_banks, s.periods) == (966, 23, 42),
        format!("max rel SS gap {worst:.1e}; ingest N={} n={} T={}", s.n_obs, s.n_banks, s.periods),
    )
}

fn header(text: &str) -> Vec<String> {
    text.lines()
        .find(|l| l.starts_with("VARIABLES") || l.starts_with("Group"))
        .map(|l| l.split_whitespace().map(String::from).collect())
        .unwrap_or_default()
}

fn c11_conventions() -> Outcome {
    let mut notes = Vec::new();

    // RE collapses to POLS when the effect variance is clamped
    let mut clamped = None;
    for seed in 0..100 {
        let mut dgp = with_x(DgpSpec::ar1(10, 5, 0.0, 11_000 + seed), 0.0);
        dgp.sigma_mu = 0.0;
        let data = generate_panel(&dgp).map_err(fail)?;
        let re = nimpanel::estimate(&static_spec(Estimator::Re), &data).map_err(fail)?;
        if re.has_flag(flags::SIGMA_MU_CLAMPED) {
            let pols = nimpanel::estimate(&static_spec(Estimator::Pols), &data).map_err(fail)?;
            clamped = Some(re.coefficients == pols.coefficients && re.standard_errors == pols.standard_errors);
            let bp = bp_lm_test(&pols, &data).map_err(fail)?;
            if bp.statistic == 0.0 {
                let text = render_test(&bp);
                if !(text.contains("statistic = 0.00") && text.contains("Prob = 1.0000")) {
                    return Err(format!("boundary BP-LM printed {text}"));
                }
                notes.push("BP-LM boundary 0 / 1.0000");
            }
            break;
        }
    }
    if clamped != Some(true) {
        return Err(format!("RE vs POLS under clamped variance: {clamped:?}"));
    }
    notes.push("RE = POLS at sigma_mu = 0");
    if notes.len() < 2 {
        return Err("no boundary BP-LM case found".into());
    }

    // Hausman df counts slopes only, and a non-PD difference is flagged
    let data = generate_panel(&with_x(DgpSpec::ar1(30, 6, 0.0, 11_200), 0.3)).map_err(fail)?;
    let fe = nimpanel::estimate(&static_spec(Estimator::Fe), &data).map_err(fail)?;
    let re = nimpanel::estimate(&static_spec(Estimator::Re), &data).map_err(fail)?;
    let h = hausman_test(&fe, &re).map_err(fail)?;
    let mut inflated = re.clone();
    inflated.covariance *= 4.0;
    let bad = hausman_test(&fe, &inflated).map_err(fail)?;
    if format!("{:?}", h.df) != format!("{:?}", nimpanel::model::Df::Single(1))
        || !fe.terms.iter().any(|t| t == CONSTANT)
        || !bad.has_flag(flags::NOT_POSITIVE_DEFINITE)
    {
        return Err(format!("Hausman df {:?}, non-PD flags {:?}", h.df, bad.flags));
    }
    notes.push("Hausman df excludes constant, non-PD flagged");

    // table layouts
    let data = generate_panel(&turkey_like(11_300)).map_err(fail)?;
    let mut gmm = ModelSpec::baseline(Estimator::SysGmm);
    gmm.instruments.collapse = true;
    let mut cols = Vec::new();
    for e in [Estimator::Pols, Estimator::Fe, Estimator::Re] {
        let mut s = gmm.clone().with_estimator(e);
        s.dep_lags = 0;
        cols.push((e.column_label().to_string(), nimpanel::estimate(&s, &data).map_err(fail)?));
    }
    cols.push(("GMM".into(), nimpanel::estimate(&gmm, &data).map_err(fail)?));
    let main = CoefficientTable::new("", cols).render_text();
    let footer: Vec<&str> = main
        .lines()
        .filter_map(|l| {
            ["Observations", "R-squared", "Sargan", "A-Bond", "AR(2)", "Number of Banks"]
                .into_iter()
                .find(|f| l.starts_with(f))
        })
        .collect();

    let mut own = Vec::new();
    for g in [Ownership::Foreign, Ownership::State, Ownership::Private] {
        let sub = data.filter_banks(|b| b.ownership == g);
        own.push((g.as_str().to_uppercase(), nimpanel::estimate(&gmm, &sub).map_err(fail)?));
    }
    own.push(("MAIN".into(), nimpanel::estimate(&gmm, &data).map_err(fail)?));
    let own_text = CoefficientTable::new("", own).render_text();
    let mut static_fe = gmm.clone().with_estimator(Estimator::Fe);
    static_fe.dep_lags = 0;
    let fe = nimpanel::estimate(&static_fe, &data).map_err(fail)?;
    let chow_text = render_chow(&chow_test(&fe, &data).map_err(fail)?);

    let drop = default_ssmpl_drop(&data);
    let mut rob = Vec::new();
    for s in Scenario::ALL {
        let (sp, d) = apply_scenario(s, &gmm, &data, &drop).map_err(fail)?;
        rob.push((s.label().to_string(), nimpanel::estimate(&sp, &d).map_err(fail)?));
    }
    let rob_text = CoefficientTable::new("", rob).render_text();
    let absent = rob_text.lines().find(|l| l.starts_with("LOGTA")).map_or(0, |l| l.matches("------").count());

    let ok = header(&main) == ["VARIABLES", "POLS", "FE", "RE", "GMM"]
        && footer == ["Observations", "R-squared", "Sargan", "A-Bond", "AR(2)", "Number of Banks"]
        && header(&own_text) == ["VARIABLES", "FOREIGN", "STATE", "PRIVATE", "MAIN"]
        && header(&chow_text).first().map(String::as_str) == Some("Group")
        && header(&rob_text) == ["VARIABLES", "SSMPL", "NOSTT", "NOFRGN", "NEWSIZE", "CRDT", "IIRATE"]
        && absent == 1;
    if !ok {
        return Err(format!(
            "layouts: {:?} {footer:?} {:?} {:?} {:?}, LOGTA absent {absent}",
            header(&main),
            header(&own_text),
            header(&chow_text),
            header(&rob_text)
        ));
    }
    notes.push("main, ownership and robustness layouts");
    Ok(notes.join("; "))
}

fn c12_fisher() -> Outcome {
    // dyadic rationals keep every product and sum exact in binary floating point
    let grid = |v: f64| (v * 256.0).round() / 256.0;
    let l = uniform_draws(12_000, 1000, -0.5, 0.5);
    let d = uniform_draws(12_001, 1000, -0.5, 0.5);
    let p = uniform_draws(12_002, 1000, -0.5, 0.5);
    let mut mismatches = 0;
    for i in 0..1000 {
        let f = FisherInputs::new(grid(l[i]), grid(d[i]), grid(p[i])).map_err(fail)?;
        if nominal_margin(f) != nominal_margin_expanded(f) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches} of 1000 differ"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("static estimators match normal-equation oracle", c1_static_oracle),
        ("just-identified difference GMM equals IV ratio", c2_iv_ratio),
        ("difference GMM recovers psi = 0.5", c3_psi_recovery),
        ("system GMM beats difference GMM at psi = 0.9", c4_system_vs_difference),
        ("Nickell bias in FE", c5_nickell),
        ("test size at 5%", c6_size),
        ("test power", c7_power),
        ("Sargan calibration", c8_sargan),
        ("instrument count formula", c9_instrument_count),
        ("descriptive identities and panel shape", c10_descriptive),
        ("reporting conventions", c11_conventions),
        ("Fisher margin identity", c12_fisher),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{:.1?}]", i + 1, start.elapsed());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
