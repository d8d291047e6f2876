use filippov_core::bifurc::{
    self, BsCase, ClassifyOptions, CurveLabel, CurveStatus, Detected, DscCase, Family,
};
use filippov_core::models::{pendulum_model, pendulum_region_fixture, polynomial_model, PolyParams, Region};
use filippov_core::retmap::Stability;

fn quick() -> ClassifyOptions {
    ClassifyOptions {
        detect_cycles: false,
        ..ClassifyOptions::default()
    }
}

#[test]
fn poly_is_bs3_with_ratio_dependent_dsc() {
    for m in [-0.1, 0.0, 0.1] {
        let z3 = polynomial_model(PolyParams::new(3.0, -1.0, 1.2, m));
        assert_eq!(bifurc::classify_bs(&z3).unwrap(), BsCase::BS3);
        assert_eq!(bifurc::classify_dsc(&z3).unwrap(), DscCase::DSC31);
        let zh = polynomial_model(PolyParams::new(0.5, -1.0, 1.2, m));
        assert_eq!(bifurc::classify_dsc(&zh).unwrap(), DscCase::DSC32);
    }
    let z1 = polynomial_model(PolyParams::new(1.0, -1.0, 1.2, 0.0));
    assert_eq!(bifurc::classify_dsc(&z1).unwrap(), DscCase::NotApplicable);
}

#[test]
fn pendulum_fixtures_are_dsc11() {
    for region in Region::ALL {
        let z = pendulum_model(pendulum_region_fixture(region).params);
        assert_eq!(bifurc::classify_dsc(&z).unwrap(), DscCase::DSC11, "{region:?}");
    }
}

#[test]
fn alpha_and_beta_signs_on_pendulum_fixtures() {
    let expect = [
        (Region::R1, '-', '-'),
        (Region::R2, '+', '-'),
        (Region::AlphaPlus, '+', '0'),
        (Region::R4, '-', '+'),
        (Region::R7, '-', '+'),
        (Region::AlphaMinus, '-', '0'),
    ];
    for (region, a, b) in expect {
        let z = pendulum_model(pendulum_region_fixture(region).params);
        let p = bifurc::classify_point(&z, vec![], quick());
        let sig = p.region.expect("classified");
        assert!(sig.starts_with(&format!("a{a}b{b}|")), "{region:?}: {sig}");
    }
}

#[test]
fn sliding_cycle_in_r1_and_limit_cycle_in_r2() {
    let r1 = pendulum_model(pendulum_region_fixture(Region::R1).params);
    let p = bifurc::classify_point(&r1, vec![], ClassifyOptions::default());
    assert!(p.detected.contains(&Detected::SlidingCycle), "{:?}", p.detected);
    let r2 = pendulum_model(pendulum_region_fixture(Region::R2).params);
    let p = bifurc::classify_point(&r2, vec![], ClassifyOptions::default());
    assert!(p
        .detected
        .iter()
        .any(|d| matches!(d, Detected::LimitCycle { x0, stability: Stability::Attracting } if *x0 > -3.1 && *x0 < -2.9)));
}

#[test]
fn pendulum_region_walk_crosses_curves_in_order() {
    // Fixed a3 < 0 (β > 0), a1 from −0.1 to −0.2: PE, then P1, then F, then α.
    let fam = Family::pendulum_a1a3(-0.77, 0.1);
    let mut changes: Vec<(usize, f64)> = Vec::new();
    let mut last: Option<String> = None;
    for i in 0..=100 {
        let a1 = -0.1 - 0.1 * i as f64 / 100.0;
        let sig = bifurc::classify_point(&fam.system(a1, -0.1), vec![], quick()).region.unwrap();
        if let Some(prev) = &last {
            let a: Vec<&str> = prev.split('|').collect();
            let b: Vec<&str> = sig.split('|').collect();
            for k in 0..a.len() {
                if a[k] != b[k] {
                    changes.push((k, a1));
                }
            }
        }
        last = Some(sig);
    }
    let order: Vec<usize> = changes.iter().map(|c| c.0).collect();
    // Components: 0 = signs of α and β, 1 = pe, 2 = fold, 3 = p1.
    assert_eq!(order, vec![1, 3, 2, 0], "{changes:?}");
}

#[test]
fn traced_curves_have_small_residuals() {
    let fam = Family::poly_md(1.5, -1.0);
    let sweep: Vec<f64> = (0..6).map(|i| -0.45 + 0.1 * i as f64).collect();
    for label in [CurveLabel::GammaF, CurveLabel::GammaP1, CurveLabel::GammaPE] {
        let tr = bifurc::trace_curve(&fam, label, &sweep, (1.0, 1.5));
        assert_eq!(tr.points.len(), sweep.len());
        for p in tr.solved() {
            assert!(p.residual.unwrap().abs() <= 1e-8, "{label:?}: {p:?}");
            let z = fam.system(p.sweep, p.solve.unwrap());
            let r = bifurc::curve_residual(&z, label).unwrap();
            assert!(r.abs() <= 1e-8);
        }
    }
    // γ_F with β ≤ 0 (m ≥ 0) is the α axis.
    let tr = bifurc::trace_curve(&fam, CurveLabel::GammaF, &[0.0, 0.2], (1.0, 1.5));
    assert!(tr.points.iter().all(|p| p.status == CurveStatus::AlphaAxis));
}

#[test]
fn grid_scan_is_deterministic_and_complete() {
    let fam = Family::poly_md(1.5, -1.0);
    let xs: Vec<f64> = (0..8).map(|i| -0.4 + 0.1 * i as f64).collect();
    let ys: Vec<f64> = (0..6).map(|j| 1.0 + 0.1 * j as f64).collect();
    let a = bifurc::scan_grid(&fam, &xs, &ys);
    let b = bifurc::scan_grid(&fam, &xs, &ys);
    assert_eq!(a, b);
    assert_eq!(a.cells.len(), 48);
    assert_eq!(a.success_fraction(), 1.0);
    assert_eq!((a.cell(3, 2).i, a.cell(3, 2).j), (3, 2));
    assert!(a.isolated_islands().is_empty());
}

#[test]
fn curve_labels_round_trip() {
    for l in [CurveLabel::GammaF, CurveLabel::GammaP1, CurveLabel::GammaPE, CurveLabel::GammaPETilde] {
        assert_eq!(CurveLabel::parse(l.as_str()).unwrap(), l);
    }
    assert!(CurveLabel::parse("gamma_Q").is_err());
}
