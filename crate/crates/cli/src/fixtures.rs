//! Regression table over the pendulum region fixtures and closed-form oracles.

use filippov_core::models::{
    self, pendulum_model, pendulum_region_fixture, poly_sliding_closed_form, poly_unstable_manifold_x, poly_y_return,
    PolyParams, Region,
};
use filippov_core::psys::{SigmaPointClass, SigmaTag};
use filippov_core::{flow, retmap, sliding, Vec2};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub group: String,
    pub name: String,
    pub expected: f64,
    pub computed: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    fn new(group: &str, name: impl Into<String>, expected: f64, computed: Result<f64, String>, tol: f64) -> Check {
        let (computed, error) = match computed {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e)),
        };
        Check {
            group: group.to_string(),
            name: name.into(),
            expected,
            computed,
            tolerance: tol,
            pass: computed.map(|v| (v - expected).abs() <= tol).unwrap_or(false),
            error,
        }
    }
}

/// `pi_tol` overrides the tolerance on return-map values.
pub struct Settings {
    pub pi_tol: Option<f64>,
    pub only: Option<String>,
}

pub const ORACLES: [&str; 7] = [
    "nf_fold_base",
    "nf_transition",
    "poly_ratio",
    "poly_manifold",
    "poly_y_return",
    "poly_sliding",
    "resonant",
];

pub fn known_group(name: &str) -> bool {
    Region::parse(name).is_ok() || ORACLES.contains(&name)
}

pub fn run(s: &Settings) -> Vec<Check> {
    let wanted = |g: &str| match &s.only {
        None => true,
        Some(o) => match (Region::parse(o), Region::parse(g)) {
            (Ok(a), Ok(b)) => a == b,
            _ => o == g,
        },
    };
    let mut out = Vec::new();
    for region in Region::ALL {
        if wanted(region.label()) {
            out.extend(region_checks(region, s.pi_tol));
        }
    }
    for name in ORACLES {
        if wanted(name) {
            out.extend(oracle(name));
        }
    }
    out
}

fn region_checks(region: Region, pi_tol: Option<f64>) -> Vec<Check> {
    let f = pendulum_region_fixture(region);
    let g = region.label();
    let z = pendulum_model(f.params);
    let tol_pi = pi_tol.unwrap_or(f.tol_pi);
    let mut out = Vec::new();
    match flow::plus_saddle(&z) {
        Ok(s) => {
            let pa = flow::fold_point_near(&z, z.chart_of(s.location)).map_err(|e| e.to_string());
            out.push(Check::new(g, "p_a", f.p_a, pa, f.tol_root));
            let qa = match flow::pe_point(&z, &s) {
                Ok(Some(v)) => Ok(v),
                Ok(None) => Err("no pseudo-equilibrium branch".to_string()),
                Err(e) => Err(e.to_string()),
            };
            out.push(Check::new(g, "q_a", f.q_a, qa, f.tol_root));
        }
        Err(e) => {
            out.push(Check::new(g, "p_a", f.p_a, Err(e.to_string()), f.tol_root));
            out.push(Check::new(g, "q_a", f.q_a, Err(e.to_string()), f.tol_root));
        }
    }
    let pi = |x: f64| retmap::first_return(&z, x).map(|l| l.chart).map_err(|e| e.to_string());
    out.push(Check::new(g, format!("pi({})", f.x02), f.pi_x02, pi(f.x02), tol_pi));
    for b in f.bracket.iter().filter(|b| b.x != f.x02) {
        out.push(Check::new(g, format!("pi({})", b.x), b.expected, pi(b.x), tol_pi));
    }
    out
}

fn worst<I>(group: &str, name: &str, pairs: I, tol: f64) -> Check
where
    I: IntoIterator<Item = Result<(f64, f64), String>>,
{
    // Report the pair with the largest discrepancy.
    let mut best: Option<(f64, f64)> = None;
    for p in pairs {
        match p {
            Ok((e, c)) => {
                if best.map(|(be, bc)| (c - e).abs() > (bc - be).abs()).unwrap_or(true) {
                    best = Some((e, c));
                }
            }
            Err(err) => return Check::new(group, name, f64::NAN, Err(err), tol),
        }
    }
    match best {
        Some((e, c)) => Check::new(group, name, e, Ok(c), tol),
        None => Check::new(group, name, f64::NAN, Err("no samples".into()), tol),
    }
}

fn oracle(name: &str) -> Vec<Check> {
    let s = |e: filippov_core::Error| e.to_string();
    match name {
        "nf_fold_base" => [2f64.sqrt(), 0.5f64.sqrt()]
            .iter()
            .map(|&r| {
                let z = models::normal_form_model(-1.0, r);
                let got = retmap::base_point(&z).map(|b| b.a).map_err(s);
                Check::new(name, format!("k=-1 r={r:.6}"), -1.0 / (1.0 + r), got, 1e-10)
            })
            .collect(),
        "nf_transition" => {
            let mut out = Vec::new();
            for k in [-1.0, 0.0, 1.0] {
                for r in [2f64.sqrt(), 0.5f64.sqrt()] {
                    let z = models::normal_form_model(k, r);
                    let base = retmap::normal_form_base(k, r);
                    let pairs = retmap::geometric_points(base, 0.25, 64, 20.0).into_iter().map(|x| {
                        let num = retmap::transition_to_section(&z.plus, Vec2::new(x, x - k), 1.0, 200.0).map_err(s)?;
                        let cf = retmap::normal_form_transition(k, r, x).map_err(s)?;
                        Ok((cf, num))
                    });
                    out.push(worst(name, &format!("k={k} r={r:.6}"), pairs, 1e-8));
                }
            }
            out
        }
        "poly_ratio" => [0.5, 1.5, 3.0]
            .iter()
            .map(|&r| {
                let z = models::polynomial_model(PolyParams::new(r, -1.0, 1.2, 0.0));
                Check::new(name, format!("r={r}"), r, flow::plus_saddle(&z).map(|sd| sd.ratio).map_err(s), 1e-8)
            })
            .collect(),
        "poly_manifold" => {
            let mut out = Vec::new();
            for r in [0.5, 3.0] {
                let p = PolyParams::new(r, -1.0, 1.2, 0.0);
                let z = models::polynomial_model(p);
                let num = flow::plus_saddle(&z).and_then(|sd| flow::manifold_intersections(&z, &sd, z.window));
                match (poly_unstable_manifold_x(p), num) {
                    (Ok(cf), Ok(mi)) => {
                        let need = |v: Option<f64>| v.ok_or_else(|| "intersection missing".to_string());
                        out.push(Check::new(name, format!("x3 r={r}"), cf.x3, need(mi.p3), 1e-6));
                        out.push(Check::new(name, format!("x4 r={r}"), cf.x4, need(mi.x4), 1e-6));
                    }
                    (Err(e), _) | (_, Err(e)) => out.push(Check::new(name, format!("r={r}"), f64::NAN, Err(s(e)), 1e-6)),
                }
            }
            out
        }
        "poly_y_return" => {
            let p = PolyParams::new(3.0, -1.0, 1.2, 0.1);
            let z = models::polynomial_model(p);
            let pairs = (0..20).map(|i| {
                let x0 = p.d - 0.2 + 0.1 * i as f64;
                let start = Vec2::new(x0, p.m - x0 / 4.0);
                let nudged = filippov_core::ode::single_step(&|q| z.minus.eval(q), start, 1e-6);
                let hits = flow::smooth_hits(&z.minus, nudged, 100.0, z.window, |q| -z.h(q), 1).map_err(s)?;
                let hit = hits.first().ok_or_else(|| format!("x0={x0}: no return"))?;
                Ok((poly_y_return(p, x0), hit.point.x))
            });
            vec![worst(name, "2d - 1/2 - x0", pairs, 1e-8)]
        }
        "poly_sliding" => {
            let mut out = Vec::new();
            for (r, k, d, m) in [(3.0, -1.0, 1.2, 0.0), (0.5, -1.0, 1.27, -0.5), (1.5, -1.0, 1.3, 0.2)] {
                let p = PolyParams::new(r, k, d, m);
                let z = models::polynomial_model(p);
                let pairs = (0..200).filter_map(|i| {
                    let x = -2.0 + 4.0 * i as f64 / 199.0;
                    let q = z.param(x);
                    let cls = SigmaPointClass::from_lie(z.xh(q), z.yh(q));
                    if !matches!(cls.tag, SigmaTag::Sliding | SigmaTag::Escaping) {
                        return None;
                    }
                    // Relative comparison: the quotient grows near its poles.
                    let cf = poly_sliding_closed_form(p, x);
                    Some(sliding::sliding_field(&z, q).map(|v| (1.0, 1.0 + (v.x - cf) / (1.0 + cf.abs()))).map_err(s))
                });
                out.push(worst(name, &format!("poly({r},{k},{d},{m}) relative"), pairs, 1e-10));
            }
            out
        }
        "resonant" => {
            let (a, b) = (2.0f64, 0.5f64);
            let mut out = Vec::new();
            for yt in [-0.3f64, 0.0, 0.3] {
                let xt = if yt <= 0.0 { 0.0 } else { -yt * (a / b).sqrt() };
                let w = models::linear_resonant_field(a, b, xt, yt);
                let (c1, c2) = (-b * xt, -a * yt);
                let eps = yt.max(0.0) + 0.5;
                let pairs = (0..32).map(|i| {
                    let x = 0.01 + i as f64 * 0.99 / 31.0;
                    let num = retmap::transition_to_section(&w, Vec2::new(x, 0.0), eps, 200.0).map_err(s)?;
                    let cf = retmap::resonant_transition(a, b, c1, c2, eps, x).map_err(s)?;
                    Ok((cf, num))
                });
                out.push(worst(name, &format!("yt={yt} eps={eps}"), pairs, 1e-8));
            }
            out
        }
        _ => unreachable!("oracle names are fixed"),
    }
}

/// Plain-text table: group, name, expected, computed, tolerance, verdict.
pub fn table(checks: &[Check]) -> String {
    let mut s = format!(
        "{:<14} {:<34} {:>16} {:>16} {:>9}  result\n",
        "group", "check", "expected", "computed", "tol"
    );
    for c in checks {
        let computed = match (c.computed, &c.error) {
            (Some(v), _) => format!("{v:.10}"),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "-".into(),
        };
        s.push_str(&format!(
            "{:<14} {:<34} {:>16.10} {:>16} {:>9.1e}  {}\n",
            c.group,
            c.name,
            c.expected,
            computed,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        ));
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    s.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
    s
}
