//! Property checks over randomly drawn systems.

use filippov_core::models::{polynomial_model, PolyParams};
use filippov_core::psys::{SigmaPointClass, SigmaTag};
use filippov_core::{retmap, sliding, Mat2, PiecewiseSystem, SmoothField, SwitchingFunction, Vec2};
use proptest::prelude::*;

fn quadratic(c: [f64; 12]) -> SmoothField {
    SmoothField::with_jacobian(
        move |p| {
            Vec2::new(
                c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.x * p.x + c[4] * p.x * p.y + c[5] * p.y * p.y,
                c[6] + c[7] * p.x + c[8] * p.y + c[9] * p.x * p.x + c[10] * p.x * p.y + c[11] * p.y * p.y,
            )
        },
        move |p| {
            Mat2::new(
                c[1] + 2.0 * c[3] * p.x + c[4] * p.y,
                c[2] + c[4] * p.x + 2.0 * c[5] * p.y,
                c[7] + 2.0 * c[9] * p.x + c[10] * p.y,
                c[8] + c[10] * p.x + 2.0 * c[11] * p.y,
            )
        },
    )
}

fn coeffs() -> impl Strategy<Value = [f64; 12]> {
    prop::array::uniform12(-1.0f64..1.0)
}

fn system(cx: [f64; 12], cy: [f64; 12], slope: f64, off: f64) -> PiecewiseSystem {
    PiecewiseSystem::new(quadratic(cx), quadratic(cy), SwitchingFunction::affine(slope, 1.0, off))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sliding_field_is_tangent(cx in coeffs(), cy in coeffs(), slope in -1.0..1.0f64, off in -0.5..0.5f64, u in -2.0..2.0f64) {
        let z = system(cx, cy, slope, off);
        let p = z.param(u);
        let (xh, yh) = (z.xh(p), z.yh(p));
        let cls = SigmaPointClass::from_lie(xh, yh);
        prop_assume!(matches!(cls.tag, SigmaTag::Sliding | SigmaTag::Escaping) && (yh - xh).abs() >= 0.1);
        let zs = sliding::sliding_field(&z, p).unwrap();
        prop_assert!(zs.dot(z.grad_h(p)).abs() <= 1e-12);
    }

    #[test]
    fn normalized_field_is_a_rescaling(cx in coeffs(), cy in coeffs(), slope in -1.0..1.0f64, off in -0.5..0.5f64, u in -2.0..2.0f64) {
        let z = system(cx, cy, slope, off);
        let p = z.param(u);
        let (xh, yh) = (z.xh(p), z.yh(p));
        let cls = SigmaPointClass::from_lie(xh, yh);
        prop_assume!(matches!(cls.tag, SigmaTag::Sliding | SigmaTag::Escaping) && (yh - xh).abs() >= 0.1);
        let zs = sliding::sliding_field(&z, p).unwrap();
        let zn = sliding::normalized_sliding_field(&z, p).unwrap();
        prop_assert!((zn - zs * (yh - xh)).norm() <= 1e-12 * (1.0 + zn.norm()));
        // Same orientation on Σs, reversed on Σe.
        let d = zn.dot(zs);
        let oriented = if cls.tag == SigmaTag::Sliding { d >= 0.0 } else { d <= 0.0 };
        prop_assert!(oriented, "orientation {}", d);
    }

    #[test]
    fn chart_round_trip(slope in -2.0..2.0f64, off in -1.0..1.0f64, u in -5.0..5.0f64) {
        let z = system([0.0; 12], [0.0; 12], slope, off);
        let p = z.param(u);
        prop_assert!(z.h(p).abs() <= 1e-12);
        prop_assert!((z.chart_of(p) - u).abs() <= 1e-12);
    }

    #[test]
    fn normal_form_transition_is_increasing(k in -1.0..1.0f64, r in 0.3..3.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let base = retmap::normal_form_base(k, r);
        let (lo, hi) = (base + 1e-3 + a.min(b), base + 1e-3 + a.max(b) + 1e-6);
        let (fl, fh) = (retmap::normal_form_transition(k, r, lo).unwrap(), retmap::normal_form_transition(k, r, hi).unwrap());
        prop_assert!(fh > fl);
    }

    #[test]
    fn resonant_radicand_positive(yt in -0.5..0.5f64, x in 0.0..2.0f64, e in 0.01..3.0f64) {
        let (a, b) = (2.0f64, 0.5f64);
        let xt = if yt <= 0.0 { 0.0 } else { -yt * (a / b).sqrt() };
        let eps = yt.max(0.0) + e;
        prop_assert!(retmap::resonant_radicand(a, b, -b * xt, -a * yt, eps, x) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn polynomial_return_maps_are_monotone(r in 0.5..3.0f64, m in -0.3..0.3f64, d in 1.0..1.5f64) {
        let z = polynomial_model(PolyParams::new(r, -1.0, d, m));
        let bp = retmap::base_point(&z);
        prop_assume!(bp.is_ok());
        let bp = bp.unwrap();
        let delta = retmap::discover_domain(&z, &bp, 0.05, 1.0);
        let xs = retmap::uniform_points(bp.a, delta, 48);
        let map = retmap::sample_return_map(&z, &bp, delta, &xs);
        prop_assert!(map.is_monotone(1e-10));
    }
}
