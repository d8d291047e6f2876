//! Built-in model families and the pendulum regression fixtures.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow;
use crate::geom::{Mat2, Rect, Vec2};
use crate::psys::{modelfile, PiecewiseSystem, SigmaChart, SmoothField, SwitchingFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyParams {
    pub r: f64,
    pub k: f64,
    pub d: f64,
    pub m: f64,
}

impl PolyParams {
    pub fn new(r: f64, k: f64, d: f64, m: f64) -> Self {
        PolyParams { r, k, d, m }
    }
}

/// Cubic model with a saddle of ratio `r` at the origin.
///
/// `X = (x, −r y − x³ − k x)`, `Y = (−1, d − x)`, `h = y + x/4 − m`.
pub fn polynomial_model(p: PolyParams) -> PiecewiseSystem {
    assert!(p.r > 0.0, "ratio must be positive");
    let PolyParams { r, k, d, m } = p;
    let plus = SmoothField::with_jacobian(
        move |q| Vec2::new(q.x, -r * q.y - q.x.powi(3) - k * q.x),
        move |q| Mat2::new(1.0, 0.0, -3.0 * q.x * q.x - k, -r),
    );
    let minus = SmoothField::with_jacobian(
        move |q| Vec2::new(-1.0, d - q.x),
        |_| Mat2::new(0.0, 0.0, -1.0, 0.0),
    );
    PiecewiseSystem::new(plus, minus, SwitchingFunction::affine(0.25, 1.0, -m))
        .with_saddle_hint(Vec2::ZERO)
        .with_window(Rect::new(-6.0, 6.0, -8.0, 8.0))
        .with_chart(SigmaChart {
            orientation: 1.0,
            y_guess: m,
        })
        .with_name(format!("poly({r},{k},{d},{m})"))
}

/// Abscissa where the `Y` orbit from `(x0, m − x0/4)` meets Σ again.
pub fn poly_y_return(p: PolyParams, x0: f64) -> f64 {
    2.0 * p.d - 0.5 - x0
}

/// First component of the sliding field of the polynomial model on Σ, closed form.
pub fn poly_sliding_closed_form(p: PolyParams, x: f64) -> f64 {
    let PolyParams { r, k, d, m } = p;
    let num = 4.0 * x.powi(3) + 4.0 * x * x + (4.0 * k - 4.0 * d - r) * x + 4.0 * r * m;
    let den = 4.0 * x.powi(3) - (5.0 - 4.0 * k + r) * x + 4.0 * r * m + 4.0 * d - 1.0;
    -num / den
}

/// Unstable manifold graph `y = −x³/(r+3) − k x/(r+1)`.
pub fn poly_unstable_graph(p: PolyParams, x: f64) -> f64 {
    -x.powi(3) / (p.r + 3.0) - p.k * x / (p.r + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyManifoldX {
    pub x1: f64,
    pub x3: f64,
    pub x4: f64,
}

/// Abscissae where the unstable manifold meets Σ: closed form for `m = 0`, numeric
/// separatrix integration otherwise.
pub fn poly_unstable_manifold_x(p: PolyParams) -> Result<PolyManifoldX> {
    if p.m == 0.0 {
        let q = (p.r + 1.0 - 4.0 * p.k) * (p.r + 3.0) / (4.0 * (p.r + 1.0));
        if q <= 0.0 {
            return Err(Error::FewerIntersections);
        }
        let x3 = q.sqrt();
        return Ok(PolyManifoldX { x1: 0.0, x3, x4: -x3 });
    }
    let z = polynomial_model(p);
    let s = flow::plus_saddle(&z)?;
    let mi = flow::manifold_intersections(&z, &s, z.window)?;
    match (mi.p1, mi.p3, mi.x4) {
        (Some(x1), Some(x3), Some(x4)) => Ok(PolyManifoldX { x1, x3, x4 }),
        _ => Err(Error::FewerIntersections),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl PendulumParams {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Self {
        PendulumParams { a1, a2, a3, a4 }
    }
}

/// Damped pendulum with a switched driving term `a2 (x + π/2)` below the line
/// `y + a4 (x + π) = a3`.
pub fn pendulum_model(p: PendulumParams) -> PiecewiseSystem {
    let PendulumParams { a1, a2, a3, a4 } = p;
    let plus = SmoothField::with_jacobian(
        move |q| Vec2::new(q.y, a1 * q.y - q.x.sin()),
        move |q| Mat2::new(0.0, 1.0, -q.x.cos(), a1),
    );
    let minus = SmoothField::with_jacobian(
        move |q| Vec2::new(q.y, a1 * q.y - q.x.sin() + a2 * (q.x + PI / 2.0)),
        move |q| Mat2::new(0.0, 1.0, -q.x.cos() + a2, a1),
    );
    PiecewiseSystem::new(plus, minus, SwitchingFunction::affine(a4, 1.0, a4 * PI - a3))
        .with_saddle_hint(Vec2::new(-PI, 0.0))
        .with_window(Rect::new(-12.0, 6.0, -8.0, 8.0))
        .with_name(format!("pendulum({a1},{a2},{a3},{a4})"))
}

/// Hyperbolicity ratio of the pendulum saddle.
pub fn pendulum_ratio(a1: f64) -> f64 {
    let s = (a1 * a1 + 4.0).sqrt();
    -(a1 - s) / (a1 + s)
}

/// Point of the pendulum's Σ with abscissa `x`.
pub fn pendulum_sigma_point(p: PendulumParams, x: f64) -> Vec2 {
    Vec2::new(x, p.a3 - p.a4 * (x + PI))
}

/// Local normal form: `X = (−r x, y)` with Σ the line `y = x − k`.
///
/// The saddle sits at the origin; `k < 0` puts it below Σ (virtual), `k > 0` above.
pub fn normal_form_model(k: f64, r: f64) -> PiecewiseSystem {
    let plus = SmoothField::with_jacobian(move |q| Vec2::new(-r * q.x, q.y), move |_| Mat2::new(-r, 0.0, 0.0, 1.0));
    let minus = SmoothField::with_jacobian(|_| Vec2::new(0.0, 1.0), |_| Mat2::new(0.0, 0.0, 0.0, 0.0));
    PiecewiseSystem::new(plus, minus, SwitchingFunction::affine(-1.0, 1.0, k))
        .with_window(Rect::new(-10.0, 10.0, -10.0, 10.0))
        .with_name(format!("normal_form({k},{r})"))
}

/// Linear saddle `x' = a (y − ỹ)`, `y' = b (x − x̃)`.
pub fn linear_resonant_field(a: f64, b: f64, xt: f64, yt: f64) -> SmoothField {
    SmoothField::with_jacobian(
        move |q| Vec2::new(a * (q.y - yt), b * (q.x - xt)),
        move |_| Mat2::new(0.0, a, b, 0.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantParams {
    pub a: f64,
    pub b: f64,
    /// Saddle ordinate ỹ; `β = ỹ`.
    pub yt: f64,
    /// Return abscissa offset of the minus field (`Y` maps `x` to `2d − x`).
    pub d: f64,
    pub kappa: f64,
    pub xc: f64,
}

impl ResonantParams {
    /// Saddle abscissa: 0 for `ỹ ≤ 0`, else `−ỹ √(a/b)` so the stable separatrix meets Σ at 0.
    pub fn xt(&self) -> f64 {
        if self.yt <= 0.0 {
            0.0
        } else {
            -self.yt * (self.a / self.b).sqrt()
        }
    }
}

/// A ratio-one system whose degenerate cycle has base point 0 for every `ỹ`.
///
/// The plus field is the linear saddle near the origin; a cubic term beyond `x = xc`
/// bends the unstable separatrix back to Σ (`h = y`). The minus field `(−1, d − x)`
/// reflects landing points about `x = d`.
pub fn resonant_model(p: ResonantParams) -> PiecewiseSystem {
    let ResonantParams { a, b, yt, d, kappa, xc } = p;
    let xt = p.xt();
    let plus = SmoothField::with_jacobian(
        move |q| {
            let e = (q.x - xc).max(0.0);
            Vec2::new(a * (q.y - yt), b * (q.x - xt) - kappa * e * e * e)
        },
        move |q| {
            let e = (q.x - xc).max(0.0);
            Mat2::new(0.0, a, b - 3.0 * kappa * e * e, 0.0)
        },
    );
    let minus = SmoothField::with_jacobian(move |q| Vec2::new(-1.0, d - q.x), |_| Mat2::new(0.0, 0.0, -1.0, 0.0));
    PiecewiseSystem::new(plus, minus, SwitchingFunction::affine(0.0, 1.0, 0.0))
        .with_saddle_hint(Vec2::new(xt, yt))
        .with_window(Rect::new(-6.0, 8.0, -8.0, 8.0))
        .with_name(format!("resonant({a},{b},{yt},{d},{kappa},{xc})"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    R1,
    R2,
    AlphaPlus,
    R3,
    R4,
    R5_6,
    R7,
    AlphaMinus,
}

impl Region {
    pub const ALL: [Region; 8] = [
        Region::R1,
        Region::R2,
        Region::AlphaPlus,
        Region::R3,
        Region::R4,
        Region::R5_6,
        Region::R7,
        Region::AlphaMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Region::R1 => "R1",
            Region::R2 => "R2",
            Region::AlphaPlus => "alpha_plus",
            Region::R3 => "R3",
            Region::R4 => "R4",
            Region::R5_6 => "R5_6",
            Region::R7 => "R7",
            Region::AlphaMinus => "alpha_minus",
        }
    }

    pub fn parse(s: &str) -> Result<Region> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '/', '+', ' '], "_");
        Ok(match key.as_str() {
            "r1" => Region::R1,
            "r2" => Region::R2,
            "alpha_plus" | "alpha_" | "alphaplus" => Region::AlphaPlus,
            "r3" => Region::R3,
            "r4" => Region::R4,
            "r5_6" | "r5" | "r6" | "r56" => Region::R5_6,
            "r7" => Region::R7,
            "alpha_minus" | "alphaminus" => Region::AlphaMinus,
            _ => return Err(Error::UnknownRegion(s.to_string())),
        })
    }
}

/// A first-return value `π(x) = expected` with the chart start value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnCheck {
    pub x: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendulumFixture {
    pub region: Region,
    pub params: PendulumParams,
    /// Starting point in Σ+ (off Σ).
    pub x01: Vec2,
    pub pi_x01: f64,
    /// Starting chart value on Σ.
    pub x02: f64,
    pub pi_x02: f64,
    pub p_a: f64,
    pub q_a: f64,
    /// Values of `π` at the bracket ends of an attracting cycle, where stated.
    pub bracket: Vec<ReturnCheck>,
    pub tol_pi: f64,
    pub tol_root: f64,
}

pub fn pendulum_region_fixture(region: Region) -> PendulumFixture {
    let (a1, a3, x01, pi_x01, x02, pi_x02, p_a, q_a, bracket): (f64, f64, Vec2, f64, f64, f64, f64, f64, Vec<ReturnCheck>) =
        match region {
            Region::R1 => (-0.1, 0.1, Vec2::new(-PI, 0.5), -4.51446, -2.8, -4.37873, -3.14159, -2.14159, vec![]),
            Region::R2 => (
                -0.2,
                0.1,
                Vec2::new(-PI, 0.5),
                -3.06627,
                -2.5,
                -2.90533,
                -3.13169,
                -2.14159,
                vec![
                    ReturnCheck { x: -3.1, expected: -3.00766 },
                    ReturnCheck { x: -2.9, expected: -2.9955 },
                ],
            ),
            Region::AlphaPlus => (
                -0.2,
                0.0,
                Vec2::new(-PI, 0.5),
                -3.02473,
                -2.8,
                -2.93979,
                -3.14159,
                -3.14159,
                vec![
                    ReturnCheck { x: -3.1, expected: -2.96489 },
                    ReturnCheck { x: -2.9, expected: -2.95331 },
                ],
            ),
            Region::R3 => (
                -0.2,
                -0.1,
                Vec2::new(-PI, 0.6),
                -2.99339,
                -2.9,
                -2.89616,
                -3.15149,
                -4.14159,
                vec![
                    ReturnCheck { x: -3.1, expected: -3.31943 },
                    ReturnCheck { x: -2.9, expected: -2.89616 },
                ],
            ),
            Region::R4 => (-0.185, -0.2, Vec2::new(-PI, 0.5), -3.33481, -2.8, -2.9545, -3.15845, -5.14159, vec![]),
            Region::R5_6 => (-0.15, -0.1, Vec2::new(-PI, 0.5), -3.57493, -2.7, -3.41217, -3.14657, -4.14159, vec![]),
            Region::R7 => (
                -0.1,
                -0.1,
                Vec2::new(-2.9, -0.1 - 0.1 * (PI - 2.9)),
                -4.46432,
                -2.9,
                -4.30114,
                -3.14159,
                -4.14159,
                vec![],
            ),
            Region::AlphaMinus => (-0.1, 0.0, Vec2::new(-PI, 0.5), -4.54177, -2.8, -4.33775, -3.14159, -3.14159, vec![]),
        };
    PendulumFixture {
        region,
        params: PendulumParams::new(a1, -0.77, a3, 0.1),
        x01,
        pi_x01,
        x02,
        pi_x02,
        p_a,
        q_a,
        bracket,
        tol_pi: 1e-3,
        tol_root: 1e-4,
    }
}

/// Fixture by label; `UnknownRegion` for anything else.
pub fn pendulum_region_fixture_by_label(label: &str) -> Result<PendulumFixture> {
    Region::parse(label).map(pendulum_region_fixture)
}

fn call_args(spec: &str, name: &str, n: usize) -> Result<Option<Vec<f64>>> {
    let s = spec.trim();
    let Some(rest) = s.strip_prefix(name) else { return Ok(None) };
    let rest = rest.trim();
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("`{s}`: expected {name}(...)")))?;
    let vals: Vec<f64> = inner
        .split(',')
        .map(|t| {
            crate::psys::expr::Expr::parse(t.trim())
                .map(|e| e.eval(0.0, 0.0))
                .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != n {
        return Err(Error::Parse(format!("`{s}`: {name} takes {n} arguments, got {}", vals.len())));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("`{s}`: non-finite argument")));
    }
    Ok(Some(vals))
}

/// Which built-in family a system came from, for closed-form side information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BuiltinModel {
    Poly(PolyParams),
    Pendulum(PendulumParams),
}

impl BuiltinModel {
    pub fn system(&self) -> PiecewiseSystem {
        match *self {
            BuiltinModel::Poly(p) => polynomial_model(p),
            BuiltinModel::Pendulum(p) => pendulum_model(p),
        }
    }
}

/// Parse `poly(r,k,d,m)` or `pendulum(a1,a2,a3,a4)`.
pub fn parse_builtin(spec: &str) -> Result<BuiltinModel> {
    if let Some(v) = call_args(spec, "poly", 4)? {
        if v[0] <= 0.0 {
            return Err(Error::Parse(format!("`{spec}`: ratio r must be positive")));
        }
        return Ok(BuiltinModel::Poly(PolyParams::new(v[0], v[1], v[2], v[3])));
    }
    if let Some(v) = call_args(spec, "pendulum", 4)? {
        if v[0] >= 0.0 {
            return Err(Error::Parse(format!("`{spec}`: damping a1 must be negative")));
        }
        return Ok(BuiltinModel::Pendulum(PendulumParams::new(v[0], v[1], v[2], v[3])));
    }
    Err(Error::Parse(format!("unknown model `{spec}` (expected poly(r,k,d,m) or pendulum(a1,a2,a3,a4))")))
}

/// A built-in spec, or the text of a model file.
pub fn load_model(spec_or_file_text: &str) -> Result<PiecewiseSystem> {
    let s = spec_or_file_text.trim();
    if !s.contains('=') {
        return Ok(parse_builtin(s)?.system());
    }
    let mf = modelfile::parse(s)?;
    let mut z = match (mf.builtin.as_deref(), mf.system) {
        (Some(b), _) => parse_builtin(b)?.system(),
        (None, Some(z)) => return Ok(z),
        (None, None) => unreachable!("model file parser returns one of the two"),
    };
    if let Some(sh) = mf.saddle {
        z.saddle_hint = sh;
    }
    if let Some(w) = mf.window {
        z.window = w;
    }
    if let Some(o) = mf.orientation {
        z.chart.orientation = o;
    }
    Ok(z)
}
