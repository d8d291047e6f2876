use filippov_core::models::{self, pendulum_region_fixture_by_label, PolyParams, Region};
use filippov_core::{flow, Error, Vec2};

#[test]
fn builtin_specs_parse() {
    let p = models::parse_builtin("poly(3, -1, 1.2, 0)").unwrap();
    assert_eq!(p, models::BuiltinModel::Poly(PolyParams::new(3.0, -1.0, 1.2, 0.0)));
    assert!(models::parse_builtin("pendulum(-0.1,-0.77,0.1,0.1)").is_ok());
    assert!(models::parse_builtin("poly(3,-1,1.2)").is_err());
    assert!(models::parse_builtin("poly(-3,-1,1.2,0)").is_err());
    assert!(models::parse_builtin("pendulum(0.1,-0.77,0.1,0.1)").is_err());
    assert!(models::parse_builtin("spiral(1)").is_err());
}

#[test]
fn model_file_and_builtin_agree() {
    let text = "model = poly(3, -1, 1.2, 0.1)\nwindow = -5, 5, -5, 5\n";
    let z = models::load_model(text).unwrap();
    let b = models::polynomial_model(PolyParams::new(3.0, -1.0, 1.2, 0.1));
    for p in [Vec2::new(0.3, -0.2), Vec2::new(-1.0, 0.5)] {
        assert_eq!(z.plus.eval(p), b.plus.eval(p));
        assert_eq!(z.minus.eval(p), b.minus.eval(p));
        assert_eq!(z.h(p), b.h(p));
    }
    assert_eq!(z.window.xmax, 5.0);
}

#[test]
fn model_file_expressions() {
    let text = "const.r = 2\nplus.x = x\nplus.y = -r*y\nminus.x = -1\nminus.y = 1 - x\nh = y - 0.5\n";
    let z = models::load_model(text).unwrap();
    let s = flow::plus_saddle(&z).unwrap();
    assert!((s.ratio - 2.0).abs() <= 1e-8);
    assert!((flow::saddle_height(&z, &s) + 0.5).abs() <= 1e-12);
    assert!(models::load_model("plus.x = x\nbogus = 1\n").is_err());
}

#[test]
fn fixtures_by_label() {
    assert_eq!(pendulum_region_fixture_by_label("R2").unwrap().region, Region::R2);
    let e = pendulum_region_fixture_by_label("R9").unwrap_err();
    assert!(matches!(e, Error::UnknownRegion(_)));
    let r4 = pendulum_region_fixture_by_label("R4").unwrap();
    assert_eq!((r4.params.a1, r4.params.a3), (-0.185, -0.2));
    assert_eq!(r4.q_a, -5.14159);
}

#[test]
fn unstable_manifold_graph() {
    for r in [0.5, 3.0] {
        let p = PolyParams::new(r, -1.0, 1.2, 0.0);
        let z = models::polynomial_model(p);
        let s = flow::plus_saddle(&z).unwrap();
        let mi = flow::manifold_intersections(&z, &s, z.window).unwrap();
        let tip = s.location + mi.away_dir * 1e-6;
        let o = flow::integrate(&z, tip, 1.5, z.window).unwrap();
        let arc: Vec<Vec2> = o.segments[0].samples.iter().map(|s| s.1).filter(|q| z.h(*q) > 0.0).collect();
        assert!(arc.len() >= 5, "{} samples", arc.len());
        for q in arc {
            assert!((q.y - models::poly_unstable_graph(p, q.x)).abs() <= 1e-6, "r={r} at {q:?}");
        }
    }
}
