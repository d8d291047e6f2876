//! Acceptance suite: one PASS/FAIL line per criterion, case details indented below.
//!
//! Runs as a plain binary (`harness = false`) so every line lands in the test log; the
//! process exits non-zero when any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use filippov_core::bifurc::{self, CurveLabel, CurveStatus, Family};
use filippov_core::flow::{self, SaddleData};
use filippov_core::models::*;
use filippov_core::psys::{SigmaPointClass, SigmaTag, SmoothField, SwitchingFunction};
use filippov_core::retmap::{
    self, FixedPoint, LandingOutcome, ProbeResult, ReturnMap, ReturnMapSample, Stability,
};
use filippov_core::sliding;
use filippov_core::{Mat2, PiecewiseSystem, Vec2};

struct Criterion {
    id: &'static str,
    title: &'static str,
    cases: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: &'static str, title: &'static str) -> Self {
        Criterion {
            id,
            title,
            cases: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        self.cases.push((ok, msg.into()));
    }

    fn passed(&self) -> bool {
        !self.cases.is_empty() && self.cases.iter().all(|c| c.0)
    }

    fn report(&self) -> bool {
        let ok = self.passed();
        let n_ok = self.cases.iter().filter(|c| c.0).count();
        println!(
            "{} criterion {}: {} ({}/{} cases)",
            if ok { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            n_ok,
            self.cases.len()
        );
        for (c, m) in &self.cases {
            println!("    {} {}", if *c { "ok  " } else { "MISS" }, m);
        }
        ok
    }
}

/// Maps computed anywhere in the suite, for the monotonicity property.
struct MapLog(Vec<(String, bool)>);

impl MapLog {
    fn add(&mut self, name: String, map: &ReturnMap) {
        self.0.push((name, map.is_monotone(MONO_NOISE)));
    }
}

const MONO_NOISE: f64 = 1e-10;

fn exact_return(z: &PiecewiseSystem) -> impl Fn(f64) -> Option<f64> + '_ {
    move |x| {
        retmap::first_return(z, x)
            .ok()
            .filter(|l| l.outcome == LandingOutcome::Return)
            .map(|l| l.chart)
    }
}

fn pendulum_regression() -> Criterion {
    let mut c = Criterion::new("1", "pendulum regression (p_a, q_a to 1e-4; pi(x02) to 1e-3; < 30 s)");
    let t0 = Instant::now();
    for region in Region::ALL {
        let f = pendulum_region_fixture(region);
        let z = pendulum_model(f.params);
        let s = flow::plus_saddle(&z).expect("saddle");
        let pa = flow::fold_point_near(&z, z.chart_of(s.location));
        let qa = flow::pe_point(&z, &s);
        match pa {
            Ok(v) => c.check((v - f.p_a).abs() <= f.tol_root, format!("{}: p_a = {v:.6} (reference {})", region.label(), f.p_a)),
            Err(e) => c.check(false, format!("{}: p_a failed: {e}", region.label())),
        }
        match qa {
            Ok(Some(v)) => c.check((v - f.q_a).abs() <= f.tol_root, format!("{}: q_a = {v:.6} (reference {})", region.label(), f.q_a)),
            other => c.check(false, format!("{}: q_a unavailable: {other:?}", region.label())),
        }
        match retmap::first_return(&z, f.x02) {
            Ok(l) => c.check(
                (l.chart - f.pi_x02).abs() <= f.tol_pi,
                format!(
                    "{}: pi(x02) = {:.6} (reference {}, diff {:.2e})",
                    region.label(),
                    l.chart,
                    f.pi_x02,
                    (l.chart - f.pi_x02).abs()
                ),
            ),
            Err(e) => c.check(false, format!("{}: pi(x02) failed: {e}", region.label())),
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    c.check(dt < 30.0, format!("runtime {dt:.2} s"));
    c
}

fn limit_cycle_brackets(log: &mut MapLog) -> Criterion {
    let mut c = Criterion::new("2", "attracting fixed point inside (-3.1, -2.9) with bracketing values to 1e-3");
    for region in [Region::R2, Region::AlphaPlus, Region::R3] {
        let f = pendulum_region_fixture(region);
        let z = pendulum_model(f.params);
        let xs: Vec<f64> = (0..=40).map(|i| -3.1 + 0.2 * i as f64 / 40.0).collect();
        let samples: Vec<ReturnMapSample> = xs
            .iter()
            .map(|&x| match retmap::first_return(&z, x) {
                Ok(l) => ReturnMapSample {
                    x,
                    pi: l.chart,
                    outcome: Some(l.outcome),
                },
                Err(_) => ReturnMapSample {
                    x,
                    pi: f64::NAN,
                    outcome: None,
                },
            })
            .collect();
        let map = ReturnMap {
            base: -3.1,
            domain_len: 0.2,
            samples,
            beta_sign: 0,
            base_value: None,
        };
        // Left of a_Z the samples are not part of the map's domain.
        if let Ok(bp) = retmap::base_point(&z) {
            let own = ReturnMap {
                base: bp.a,
                samples: map.samples.iter().filter(|s| s.x > bp.a).cloned().collect(),
                ..map.clone()
            };
            log.add(format!("pendulum {} on (a_Z, -2.9]", region.label()), &own);
        }
        let fp = retmap::find_fixed_point(&map, Some(exact_return(&z)));
        let inside = matches!(fp, FixedPoint::Fixed { x0, stability: Stability::Attracting, .. } if x0 > -3.1 && x0 < -2.9);
        c.check(inside, format!("{}: fixed point {fp:?}", region.label()));
        for chk in &f.bracket {
            let got = retmap::first_return(&z, chk.x);
            let (val, outcome) = match &got {
                Ok(l) => (l.chart, format!("{:?}", l.outcome)),
                Err(e) => (f64::NAN, e.to_string()),
            };
            c.check(
                (val - chk.expected).abs() <= f.tol_pi,
                format!("{}: pi({}) = {val:.6} [{outcome}] (reference {})", region.label(), chk.x, chk.expected),
            );
            // π(−3.1) > −3.1 and π(−2.9) < −2.9.
            let ineq = if chk.x < -3.0 { val > chk.x } else { val < chk.x };
            c.check(ineq, format!("{}: bracketing inequality at {}", region.label(), chk.x));
        }
    }
    c
}

fn normal_form_oracle() -> Criterion {
    let mut c = Criterion::new("3", "normal-form transition vs closed form to 1e-8; fold base k/(1+r) to 1e-10");
    let roots = [2f64.sqrt(), 1.0 / 2f64.sqrt()];
    for k in [-1.0, 0.0, 1.0] {
        for r in roots {
            let z = normal_form_model(k, r);
            let base = retmap::normal_form_base(k, r);
            if k < 0.0 {
                match retmap::base_point(&z) {
                    Ok(bp) => c.check(
                        (bp.a - k / (1.0 + r)).abs() <= 1e-10,
                        format!("k={k}, r={r:.4}: fold base {:.12} vs {:.12}", bp.a, k / (1.0 + r)),
                    ),
                    Err(e) => c.check(false, format!("k={k}, r={r:.4}: base point failed: {e}")),
                }
            }
            let xs = retmap::geometric_points(base, 0.25, 64, 20.0);
            let mut worst = 0.0f64;
            let mut failed = None;
            for &x in &xs {
                let p0 = Vec2::new(x, x - k);
                match retmap::transition_to_section(&z.plus, p0, 1.0, 200.0) {
                    Ok(v) => {
                        let cf = retmap::normal_form_transition(k, r, x).expect("domain");
                        worst = worst.max((v - cf).abs());
                    }
                    Err(e) => failed = Some(format!("{x}: {e}")),
                }
            }
            c.check(
                failed.is_none() && worst <= 1e-8,
                format!("k={k}, r={r:.4}: 64 points, max |numeric - closed| = {worst:.2e} {}", failed.unwrap_or_default()),
            );
        }
    }
    c
}

fn resonant_oracle() -> Criterion {
    let mut c = Criterion::new("4", "resonant transition vs linear-field integration to 1e-8; radicand positive");
    let (a, b) = (2.0, 0.5);
    for yt in [-0.3, 0.0, 0.3] {
        let xt = ResonantParams {
            a,
            b,
            yt,
            d: 0.0,
            kappa: 0.0,
            xc: 0.0,
        }
        .xt();
        let w = linear_resonant_field(a, b, xt, yt);
        let (c1, c2) = (-b * xt, -a * yt);
        for eps in [yt.max(0.0) + 0.2, yt.max(0.0) + 1.0] {
            let mut worst = 0.0f64;
            let mut failed = None;
            for i in 0..32 {
                let x = 0.01 + i as f64 * (1.0 - 0.01) / 31.0;
                match (
                    retmap::transition_to_section(&w, Vec2::new(x, 0.0), eps, 200.0),
                    retmap::resonant_transition(a, b, c1, c2, eps, x),
                ) {
                    (Ok(n), Ok(cf)) => worst = worst.max((n - cf).abs()),
                    (n, cf) => failed = Some(format!("x={x}: {n:?} {cf:?}")),
                }
            }
            c.check(
                failed.is_none() && worst <= 1e-8,
                format!("yt={yt}, eps={eps}: max diff {worst:.2e} {}", failed.unwrap_or_default()),
            );
        }
        let mut min_q = f64::INFINITY;
        for i in 0..=50 {
            let x = 2.0 * i as f64 / 50.0;
            for j in 1..=50 {
                let eps = yt.max(0.0) + 3.0 * j as f64 / 50.0;
                min_q = min_q.min(retmap::resonant_radicand(a, b, c1, c2, eps, x));
            }
        }
        c.check(min_q > 0.0, format!("yt={yt}: min radicand over x in [0,2], eps > max(0,yt): {min_q:.3e}"));
    }
    c
}

fn derivative_asymptotics() -> Criterion {
    let mut c = Criterion::new("5", "derivative asymptotics on normal-form return maps (12 cases)");
    let s2 = 2f64.sqrt();
    let e = std::f64::consts::E;
    // (k sign, r, order, expect zero?)
    let cases: [(f64, f64, usize, bool); 12] = [
        (-1.0, s2, 1, true),
        (-1.0, 1.0 / s2, 1, true),
        (0.0, s2, 1, true),
        (0.0, s2, 2, true),
        (0.0, s2, 3, false),
        (0.0, 1.0 / s2, 1, false),
        (0.0, 1.0 / 3f64.sqrt(), 1, false),
        (1.0, s2, 1, true),
        (1.0, s2, 2, false),
        (0.0, e, 3, true),
        (0.0, e, 4, false),
        (1.0, e, 3, false),
    ];
    for (k, r, order, zero) in cases {
        let xs = retmap::geometric_points(0.0, 0.25, 64, 20.0);
        let map = retmap::synthetic_normal_form_map(k, r, &xs);
        let beta = if k < 0.0 {
            "beta<0"
        } else if k == 0.0 {
            "beta=0"
        } else {
            "beta>0"
        };
        let want = if zero { ProbeResult::LimitZero } else { ProbeResult::LimitInfinite };
        match retmap::derivative_probe(&map, order) {
            Ok(p) => c.check(
                p.result == want,
                format!("{beta}, r={r:.4}, order {order}: {:?} (slope {:.3}), expected {want:?}", p.result, p.slope),
            ),
            Err(err) => c.check(false, format!("{beta}, r={r:.4}, order {order}: {err}")),
        }
    }
    c
}

#[derive(Debug, PartialEq)]
enum Expect {
    Attracting,
    Repelling,
    NoFixedPoint,
    NotRepelling,
}

fn expected_fixed_point(alpha: f64, r: f64, beta: f64) -> Expect {
    if alpha > 0.0 {
        if r > 1.0 || beta <= 0.0 {
            Expect::Attracting
        } else {
            Expect::NotRepelling
        }
    } else if r < 1.0 && beta > 0.0 {
        Expect::Repelling
    } else {
        Expect::NoFixedPoint
    }
}

fn trichotomy(log: &mut MapLog) -> Criterion {
    let mut c = Criterion::new("6", "fixed-point trichotomy on 5x5 (m, d) grids, r in {1/2, 3/2}");
    for r in [0.5, 1.5] {
        let mut good = 0;
        let mut total = 0;
        let mut degenerate = 0;
        for m in [-0.2, -0.1, 0.0, 0.1, 0.2] {
            // α is affine in d with slope 2 (the Y arc maps x to 2d − 1/2 − x).
            let probe = polynomial_model(PolyParams::new(r, -1.0, 1.2, m));
            let dstar = match bifurc::alpha(&probe) {
                Ok(a) => 1.2 - a / 2.0,
                Err(e) => {
                    c.check(false, format!("r={r}, m={m}: alpha failed: {e}"));
                    continue;
                }
            };
            for off in [-1e-4, -5e-5, 0.0, 5e-5, 1e-4] {
                let z = polynomial_model(PolyParams::new(r, -1.0, dstar + off, m));
                let bp = match retmap::base_point(&z) {
                    Ok(b) => b,
                    Err(e) => {
                        total += 1;
                        c.check(false, format!("r={r}, m={m}, d*{off:+e}: base point failed: {e}"));
                        continue;
                    }
                };
                let delta = retmap::discover_domain(&z, &bp, 0.05, 1.0);
                let xs = retmap::geometric_points(bp.a, delta, 160, 40.0);
                let map = retmap::sample_return_map(&z, &bp, delta, &xs);
                log.add(format!("poly r={r} m={m} d*{off:+e}"), &map);
                let Some(base_value) = map.base_value else {
                    total += 1;
                    c.check(false, format!("r={r}, m={m}, d*{off:+e}: no base landing"));
                    continue;
                };
                let alpha = base_value - bp.a;
                let fp = retmap::find_fixed_point(&map, Some(exact_return(&z)));
                if alpha.abs() <= bifurc::ZERO_TOL {
                    degenerate += 1;
                    if fp != FixedPoint::Boundary {
                        c.check(false, format!("r={r}, m={m}: alpha=0 cell not reported as boundary: {fp:?}"));
                    }
                    continue;
                }
                total += 1;
                let want = expected_fixed_point(alpha, r, bp.beta);
                let ok = match (&want, fp) {
                    (Expect::Attracting, FixedPoint::Fixed { stability: Stability::Attracting, .. }) => true,
                    (Expect::Repelling, FixedPoint::Fixed { stability: Stability::Repelling, .. }) => true,
                    (Expect::NoFixedPoint, FixedPoint::None) => true,
                    (Expect::NotRepelling, FixedPoint::None) => true,
                    (Expect::NotRepelling, FixedPoint::Fixed { stability: Stability::Attracting, .. }) => true,
                    _ => false,
                };
                if ok {
                    good += 1;
                } else {
                    c.check(false, format!("r={r}, m={m}, alpha={alpha:+.2e}: expected {want:?}, got {fp:?}"));
                }
            }
        }
        c.check(
            good == total && total > 0,
            format!("r={r}: {good}/{total} non-degenerate cells match ({degenerate} alpha=0 cells excluded)"),
        );
    }
    c
}

fn resonant_expansion(log: &mut MapLog) -> Criterion {
    let mut c = Criterion::new("7", "resonant quadratic expansion: k1, k2 signs; attracting cycle when alpha > 0");
    for (a, b) in [(1.0, 1.0), (2.0, 0.5)] {
        for yt in [-0.1, 0.0, 0.1] {
            let p0 = ResonantParams {
                a,
                b,
                yt,
                d: 0.0,
                kappa: 1.0,
                xc: 0.5,
            };
            // With d = 0 the minus arc reflects the landing L to −L; α = 2d − L.
            let z0 = resonant_model(p0);
            let landing = retmap::base_point(&z0).and_then(|bp| retmap::base_landing(&z0, &bp));
            let big_l = match landing {
                Ok(l) => -l.chart,
                Err(e) => {
                    c.check(false, format!("a={a}, b={b}, yt={yt}: loop failed: {e}"));
                    continue;
                }
            };
            for alpha in [-0.01, 0.01] {
                let z = resonant_model(ResonantParams {
                    d: (big_l + alpha) / 2.0,
                    ..p0
                });
                let tag = format!("a={a}, b={b}, yt={yt}, alpha={alpha:+}");
                let bp = match retmap::base_point(&z) {
                    Ok(bp) => bp,
                    Err(e) => {
                        c.check(false, format!("{tag}: {e}"));
                        continue;
                    }
                };
                let xs = retmap::uniform_points(bp.a, 0.04, 256);
                let map = retmap::sample_return_map(&z, &bp, 0.04, &xs);
                log.add(format!("resonant {tag}"), &map);
                match retmap::quadratic_expansion_fit(&map) {
                    Ok(fit) => {
                        let ok = if bp.beta <= 0.0 {
                            fit.k1.abs() < 1e-3 && fit.k2 > 0.0
                        } else {
                            fit.k1.abs() > 0.0 && fit.k1.abs() < 1.0
                        };
                        c.check(ok, format!("{tag}: beta={:+.2}, k1={:.3e}, k2={:.4}", bp.beta, fit.k1, fit.k2));
                    }
                    Err(e) => c.check(false, format!("{tag}: fit failed: {e}")),
                }
                if alpha > 0.0 {
                    let wide = retmap::uniform_points(bp.a, 0.5, 128);
                    let wmap = retmap::sample_return_map(&z, &bp, 0.5, &wide);
                    log.add(format!("resonant wide {tag}"), &wmap);
                    let fp = retmap::find_fixed_point(&wmap, Some(exact_return(&z)));
                    c.check(
                        matches!(fp, FixedPoint::Fixed { stability: Stability::Attracting, .. }),
                        format!("{tag}: {fp:?}"),
                    );
                }
            }
        }
    }
    c
}

fn poly_closed_forms() -> Criterion {
    let mut c = Criterion::new("8", "polynomial-model closed forms");
    for r in [0.5, 1.5, 3.0] {
        let z = polynomial_model(PolyParams::new(r, -1.0, 1.2, 0.0));
        match flow::plus_saddle(&z) {
            Ok(s) => c.check((s.ratio - r).abs() <= 1e-8, format!("ratio r={r}: {:.12}", s.ratio)),
            Err(e) => c.check(false, format!("ratio r={r}: {e}")),
        }
    }
    for r in [0.5, 3.0] {
        let p = PolyParams::new(r, -1.0, 1.2, 0.0);
        let z = polynomial_model(p);
        let cf = poly_unstable_manifold_x(p).expect("closed form");
        let num = flow::plus_saddle(&z).and_then(|s: SaddleData| flow::manifold_intersections(&z, &s, z.window));
        match num {
            Ok(mi) => {
                let d3 = mi.p3.map(|v| (v - cf.x3).abs()).unwrap_or(f64::INFINITY);
                let d4 = mi.x4.map(|v| (v - cf.x4).abs()).unwrap_or(f64::INFINITY);
                c.check(d3 <= 1e-6, format!("r={r}: x3 numeric {:?} vs {:.10} (diff {d3:.2e})", mi.p3, cf.x3));
                c.check(d4 <= 1e-6, format!("r={r}: x4 numeric {:?} vs {:.10} (diff {d4:.2e})", mi.x4, cf.x4));
            }
            Err(e) => c.check(false, format!("r={r}: manifolds failed: {e}")),
        }
    }
    // Y arc below Σ from x0 > d − 1/4.
    let p = PolyParams::new(3.0, -1.0, 1.2, 0.1);
    let z = polynomial_model(p);
    let mut worst = 0.0f64;
    let mut n = 0;
    for i in 0..20 {
        let x0 = p.d - 0.25 + 0.05 + 0.1 * i as f64;
        let start = Vec2::new(x0, p.m - x0 / 4.0);
        let y = |q: Vec2| z.minus.eval(q);
        let nudged = filippov_core::ode::single_step(&y, start, 1e-6);
        let hits = flow::smooth_hits(&z.minus, nudged, 100.0, z.window, |q| -z.h(q), 1);
        if let Ok(h) = hits {
            if let Some(hit) = h.first() {
                worst = worst.max((hit.point.x - poly_y_return(p, x0)).abs());
                n += 1;
            }
        }
    }
    c.check(n == 20 && worst <= 1e-8, format!("Y-return 2d - 1/2 - x0: {n}/20 arcs, max diff {worst:.2e}"));
    let mut worst = 0.0f64;
    let mut n = 0;
    for (r, k, d, m) in [(3.0, -1.0, 1.2, 0.0), (0.5, -1.0, 1.27, -0.5), (1.5, -1.0, 1.3, 0.2)] {
        let p = PolyParams::new(r, k, d, m);
        let z = polynomial_model(p);
        for i in 0..200 {
            let x = -2.0 + 4.0 * i as f64 / 199.0;
            let q = z.param(x);
            let cls = SigmaPointClass::from_lie(z.xh(q), z.yh(q));
            if !matches!(cls.tag, SigmaTag::Sliding | SigmaTag::Escaping) {
                continue;
            }
            if let Ok(v) = sliding::sliding_field(&z, q) {
                let cf = poly_sliding_closed_form(p, x);
                worst = worst.max((v.x - cf).abs() / (1.0 + cf.abs()));
                n += 1;
            }
        }
    }
    c.check(n > 50 && worst <= 1e-10, format!("sliding field vs displayed quotient: {n} points, max rel diff {worst:.2e}"));
    c
}

/// Random quadratic vector field with coefficients in [−1, 1].
fn random_field(rng: &mut ChaCha8Rng) -> SmoothField {
    let c: [f64; 12] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
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

fn invariants(log: &MapLog) -> Criterion {
    let mut c = Criterion::new("9", "algebraic invariants: tangency, Z^s vs Z^s_N, monotone return maps");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    let mut worst_tan = 0.0f64;
    let mut agree = 0;
    let mut attempts = 0;
    while checked < 1000 && attempts < 1_000_000 {
        attempts += 1;
        let slope = rng.gen_range(-1.0..1.0);
        let off = rng.gen_range(-0.5..0.5);
        let z = PiecewiseSystem::new(
            random_field(&mut rng),
            random_field(&mut rng),
            SwitchingFunction::affine(slope, 1.0, off),
        );
        for _ in 0..10 {
            let p = z.param(rng.gen_range(-2.0..2.0));
            let (xh, yh) = (z.xh(p), z.yh(p));
            let cls = SigmaPointClass::from_lie(xh, yh);
            // Admissible: in Σs ∪ Σe with the convex-combination denominator bounded away from 0.
            if !matches!(cls.tag, SigmaTag::Sliding | SigmaTag::Escaping) || (yh - xh).abs() < 0.1 {
                continue;
            }
            let zs = sliding::sliding_field(&z, p).expect("admissible");
            let zn = sliding::normalized_sliding_field(&z, p).expect("on sigma");
            worst_tan = worst_tan.max(zs.dot(z.grad_h(p)).abs());
            // Z^s_N = (Yh − Xh) Z^s: same zeros, direction by the sign of Yh − Xh.
            let scaled = zs * (yh - xh);
            let parallel = (zn - scaled).norm() <= 1e-12 * (1.0 + zn.norm());
            let dir_ok = if cls.tag == SigmaTag::Sliding {
                zn.dot(zs) >= 0.0
            } else {
                zn.dot(zs) <= 0.0
            };
            if parallel && dir_ok {
                agree += 1;
            }
            checked += 1;
            if checked >= 1000 {
                break;
            }
        }
    }
    c.check(checked == 1000 && worst_tan <= 1e-12, format!("<Z^s, grad h> over {checked} points: max {worst_tan:.2e}"));
    c.check(agree == checked, format!("Z^s / Z^s_N agreement: {agree}/{checked}"));
    let bad: Vec<&String> = log.0.iter().filter(|m| !m.1).map(|m| &m.0).collect();
    c.check(
        bad.is_empty() && !log.0.is_empty(),
        format!("{} computed return maps monotone (noise {MONO_NOISE:e}); non-monotone: {bad:?}", log.0.len()),
    );
    c
}

/// Region signatures on a 50×50 grid must not form isolated islands, and every flip of a
/// landing-order component between vertically adjacent cells must contain a traced point
/// of the matching curve.
fn consistency_scan() -> Criterion {
    let mut c = Criterion::new("diagram", "region-signature consistency on 50x50 grids");
    let n = 50;
    let lin = |lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect() };
    let setups = [
        (Family::poly_md(1.5, -1.0), lin(-0.5, 0.5), lin(1.0, 1.5)),
        (Family::pendulum_a1a3(-0.77, 0.1), lin(-0.2, -0.1), lin(-0.05, 0.05)),
    ];
    for (fam, xs, ys) in setups {
        let t0 = Instant::now();
        let scan = bifurc::scan_grid(&fam, &xs, &ys);
        let frac = scan.success_fraction();
        let islands = scan.isolated_islands();
        c.check(frac >= 0.9, format!("{}: {:.1}% cells classified", fam.name, 100.0 * frac));
        c.check(islands.is_empty(), format!("{}: isolated islands {islands:?}", fam.name));
        // Components: 1 = pe, 2 = fold, 3 = p1 in "aXbY|peZ|fZ|p1Z|.."
        let comp = |s: &str, k: usize| s.split('|').nth(k).map(|t| t.to_string());
        let mut flips = 0;
        let mut explained = 0;
        let mut unexplained = Vec::new();
        for i in 0..xs.len() {
            for j in 0..ys.len() - 1 {
                let (a, b) = (scan.cell(i, j), scan.cell(i, j + 1));
                let (Some(ra), Some(rb)) = (&a.region, &b.region) else { continue };
                for (k, label) in [(1, CurveLabel::GammaPE), (2, CurveLabel::GammaF), (3, CurveLabel::GammaP1)] {
                    let (ca, cb) = (comp(ra, k), comp(rb, k));
                    let signs = |s: &Option<String>| s.as_deref().map(|t| t.chars().last().unwrap_or('n'));
                    let (sa, sb) = (signs(&ca), signs(&cb));
                    // Only sign flips of a present target count; 'n' means absent.
                    if sa == sb || sa == Some('n') || sb == Some('n') {
                        continue;
                    }
                    flips += 1;
                    let tr = bifurc::trace_curve(&fam, label, &[xs[i]], (ys[j], ys[j + 1]));
                    let pt = &tr.points[0];
                    let ok = match pt.status {
                        CurveStatus::Solved => pt.residual.map(|r| r <= 1e-8).unwrap_or(false),
                        CurveStatus::AlphaAxis => a.alpha.zip(b.alpha).map(|(x, y)| x * y <= 0.0).unwrap_or(false),
                        CurveStatus::BracketFailure => false,
                    };
                    if ok {
                        explained += 1;
                    } else {
                        unexplained.push(format!("({},{}) {} {:?}", i, j, label.as_str(), pt));
                    }
                }
            }
        }
        c.check(
            unexplained.is_empty(),
            format!(
                "{}: {explained}/{flips} signature flips lie on traced curves (residual <= 1e-8) {:?}; {:.1} s",
                fam.name,
                unexplained.iter().take(3).collect::<Vec<_>>(),
                t0.elapsed().as_secs_f64()
            ),
        );
    }
    c
}

fn main() {
    let mut log = MapLog(Vec::new());
    let crits = vec![
        pendulum_regression(),
        limit_cycle_brackets(&mut log),
        normal_form_oracle(),
        resonant_oracle(),
        derivative_asymptotics(),
        trichotomy(&mut log),
        resonant_expansion(&mut log),
        poly_closed_forms(),
    ];
    let mut all = crits;
    all.push(invariants(&log));
    all.push(consistency_scan());
    let failed: Vec<&str> = all.iter().filter(|c| !c.report()).map(|c| c.id).collect();
    if failed.is_empty() {
        println!("acceptance: all criteria PASS");
    } else {
        println!("acceptance: FAIL in criteria {failed:?}");
        std::process::exit(1);
    }
}
