//! One-sided first-return maps on Σ near the degenerate cycle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, Control, EventKind, FlowOptions, ManifoldIntersections, Orbit, SaddleData, SegmentKind, Termination};
use crate::geom::{Rect, Vec2};
use crate::psys::{PiecewiseSystem, SigmaTag, SmoothField};
use crate::roots::brent;

pub use crate::psys::SigmaChart;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandingOutcome {
    /// Arrived from Σ− in the crossing region.
    Return,
    /// Arrived in the sliding region (legal; consumed by the bifurcation analysis).
    Sliding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landing {
    pub chart: f64,
    pub point: Vec2,
    pub outcome: LandingOutcome,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnOptions {
    pub tmax: f64,
    /// Extra crossing pairs to pass over before taking the landing.
    pub skip: usize,
    pub window: Option<Rect>,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        ReturnOptions {
            tmax: 400.0,
            skip: 0,
            window: None,
        }
    }
}

/// `π_Z(u)`: follow the loop from chart value `u` until it first arrives at Σ from the
/// minus side, or enters sliding.
pub fn first_return(z: &PiecewiseSystem, u: f64) -> Result<Landing> {
    first_return_with(z, z.param(u), ReturnOptions::default()).map_err(|e| match e {
        Error::NoReturn(_, why) => Error::NoReturn(u, why),
        e => e,
    })
}

/// Landing of the loop started at an arbitrary point (on Σ or in Σ+).
pub fn first_return_with(z: &PiecewiseSystem, p0: Vec2, opts: ReturnOptions) -> Result<Landing> {
    traced_return(z, p0, opts, false).map(|(l, _)| l)
}

/// Like [`first_return_with`], also returning the recorded loop up to the landing.
pub fn first_return_orbit(z: &PiecewiseSystem, p0: Vec2, opts: ReturnOptions) -> Result<(Landing, Orbit)> {
    traced_return(z, p0, opts, true)
}

fn traced_return(z: &PiecewiseSystem, p0: Vec2, opts: ReturnOptions, record: bool) -> Result<(Landing, Orbit)> {
    if !p0.is_finite() {
        return Err(Error::DomainError(format!("start point {p0:?} is not on Σ")));
    }
    let on_sigma = z.h(p0).abs() <= 1e-10;
    // On Σ, start along X whenever X does not point into Σ−: at a fold this is the
    // visible-fold departure.
    let start = if on_sigma && z.xh(p0) >= -crate::TOL_TANG {
        Some(SegmentKind::SmoothPlus)
    } else {
        None
    };
    let mut fo = FlowOptions::new(opts.window.unwrap_or(z.window));
    fo.record = record;
    let mut skip = opts.skip;
    let mut landing: Option<(Vec2, f64, LandingOutcome)> = None;
    let orbit = flow::integrate_with(z, p0, start, opts.tmax, fo, |ev| match (ev.from, ev.kind) {
        (SegmentKind::SmoothPlus, EventKind::SlidingEntry) | (SegmentKind::SmoothMinus, EventKind::SlidingEntry) => {
            landing = Some((ev.point, ev.t, LandingOutcome::Sliding));
            Control::Stop
        }
        (SegmentKind::SmoothMinus, EventKind::Crossing) => {
            if skip > 0 {
                skip -= 1;
                Control::Continue
            } else {
                landing = Some((ev.point, ev.t, LandingOutcome::Return));
                Control::Stop
            }
        }
        _ => Control::Continue,
    })?;
    match (orbit.termination, landing) {
        (Termination::Stopped, Some((p, t, outcome))) => Ok((
            Landing {
                chart: z.chart_of(p),
                point: p,
                outcome,
                time: t,
            },
            orbit,
        )),
        (term, _) => Err(Error::NoReturn(z.chart_of(p0), format!("{term:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    /// `a_Z` in chart units.
    pub a: f64,
    pub beta: f64,
    pub beta_sign: i8,
    pub saddle: SaddleData,
    pub manifolds: ManifoldIntersections,
    /// Fold of X on Σ nearest the saddle, if any.
    pub fold: Option<f64>,
}

/// Largest chart distance between the saddle and the fold it organizes.
pub const FOLD_REACH: f64 = 1.0;

/// `a_Z`: the fold for β<0, the saddle for β=0, the stable separatrix crossing for β>0.
pub fn base_point(z: &PiecewiseSystem) -> Result<BasePoint> {
    let s = flow::plus_saddle(z)?;
    let beta = flow::saddle_height(z, &s);
    let manifolds = flow::manifold_intersections(z, &s, z.window)?;
    let s_chart = z.chart_of(s.location);
    // Only a fold close to the saddle organizes the cycle; a distant one belongs to
    // another configuration, e.g. after a fold-fold collision.
    let fold = flow::fold_point_near(z, s_chart)
        .ok()
        .filter(|u| (u - s_chart).abs() <= FOLD_REACH);
    let (a, sign) = if beta < 0.0 {
        (fold.ok_or(Error::NoFold(s_chart))?, -1)
    } else if beta == 0.0 {
        (s_chart, 0)
    } else {
        let p2 = manifolds
            .p2
            .ok_or_else(|| Error::DegenerateConfiguration("stable separatrix does not meet Σ".into()))?;
        (p2, 1)
    };
    Ok(BasePoint {
        a,
        beta,
        beta_sign: sign,
        saddle: s,
        manifolds,
        fold,
    })
}

/// `π_Z(a_Z)`: from the fold for β<0, along the unstable separatrix into Σ+ for β≥0.
pub fn base_landing(z: &PiecewiseSystem, bp: &BasePoint) -> Result<Landing> {
    base_landing_with(z, bp, ReturnOptions::default())
}

pub fn base_landing_with(z: &PiecewiseSystem, bp: &BasePoint, opts: ReturnOptions) -> Result<Landing> {
    let p0 = if bp.beta_sign < 0 {
        z.param(bp.a)
    } else {
        bp.saddle.location + bp.manifolds.away_dir * flow::MANIFOLD_SEED
    };
    first_return_with(z, p0, opts).map_err(|e| match e {
        Error::NoReturn(_, why) => Error::NoReturn(bp.a, why),
        e => e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapSample {
    pub x: f64,
    /// NaN when the orbit did not return.
    pub pi: f64,
    pub outcome: Option<LandingOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMap {
    pub base: f64,
    pub domain_len: f64,
    pub samples: Vec<ReturnMapSample>,
    pub beta_sign: i8,
    /// `π(a_Z)` when known.
    pub base_value: Option<f64>,
}

impl ReturnMap {
    /// Samples with a defined value, in increasing `x`.
    pub fn defined(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|s| s.outcome.is_some() && s.pi.is_finite())
            .map(|s| (s.x, s.pi))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    /// Non-decreasing up to `noise`. Where `π` is flat at the base (π' → 0) consecutive
    /// values agree to integration accuracy, so strict increase is not observable there.
    pub fn is_monotone(&self, noise: f64) -> bool {
        self.defined().windows(2).all(|w| w[1].1 - w[0].1 >= -noise)
    }
}

/// `base + δ (i + ½)/n`.
pub fn uniform_points(base: f64, delta: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| base + delta * (i as f64 + 0.5) / n as f64).collect()
}

/// `base + δ q^i` with `q` chosen so the last point is `base + δ 2^{−depth}`.
pub fn geometric_points(base: f64, delta: f64, n: usize, depth: f64) -> Vec<f64> {
    let q = 2f64.powf(-depth / (n.max(2) - 1) as f64);
    (0..n).map(|i| base + delta * q.powi(i as i32)).collect()
}

/// Evaluate `π` at the given chart values in parallel; order follows `xs`.
pub fn sample_return_map(z: &PiecewiseSystem, bp: &BasePoint, delta: f64, xs: &[f64]) -> ReturnMap {
    let samples: Vec<ReturnMapSample> = xs
        .par_iter()
        .map(|&x| match first_return(z, x) {
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
    ReturnMap {
        base: bp.a,
        domain_len: delta,
        samples,
        beta_sign: bp.beta_sign,
        base_value: base_landing(z, bp).ok().map(|l| l.chart),
    }
}

/// Grow `δ_Z` by doubling from `start` while the start point stays in the crossing region
/// (X pointing into Σ+) and the loop still lands on Σ.
pub fn discover_domain(z: &PiecewiseSystem, bp: &BasePoint, start: f64, max_len: f64) -> f64 {
    let ok = |d: f64| {
        let u = bp.a + d;
        let p = z.param(u);
        if !p.is_finite() || !z.window.contains(p) {
            return false;
        }
        let c = crate::psys::SigmaPointClass::from_lie(z.xh(p), z.yh(p));
        c.tag == SigmaTag::Crossing && c.lie_x > 0.0 && first_return(z, u).is_ok()
    };
    let mut d = start;
    if !ok(d) {
        // Shrink until something works.
        while d > 1e-6 && !ok(d) {
            d *= 0.5;
        }
        return d;
    }
    while d * 2.0 <= max_len && ok(d * 2.0) {
        d *= 2.0;
    }
    d
}

/// `ρ̃(x) = k (x−k)^r + (x−k)^{r+1}`.
pub fn normal_form_transition(k: f64, r: f64, x: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::DomainError(format!("ratio r={r} must be positive")));
    }
    if !(x > k) {
        return Err(Error::DomainError(format!("x={x} must exceed k={k}")));
    }
    let t = x - k;
    Ok(k * t.powf(r) + t.powf(r + 1.0))
}

/// Fold of the normal form on Σ: `k/(1+r)` for `k < 0`, and `k` (the stable separatrix)
/// for `k ≥ 0`.
pub fn normal_form_base(k: f64, r: f64) -> f64 {
    if k < 0.0 {
        k / (1.0 + r)
    } else {
        k
    }
}

/// Radicand of the resonant transition.
pub fn resonant_radicand(a: f64, b: f64, c1: f64, c2: f64, eps: f64, x: f64) -> f64 {
    x * x + 2.0 * c1 * x / b + a * eps * eps / b + 2.0 * c2 * eps / b + c1 * c1 / (b * b)
}

/// Transition of `W = (a(y−ỹ), b(x−x̃))` from `(x, 0)` to the section `y = eps`, with
/// `c1 = −b x̃`, `c2 = −a ỹ`.
pub fn resonant_transition(a: f64, b: f64, c1: f64, c2: f64, eps: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::DomainError("a and b must be positive".into()));
    }
    let q = resonant_radicand(a, b, c1, c2, eps, x);
    if !(q > 0.0) {
        return Err(Error::DomainError(format!("radicand {q} is not positive")));
    }
    Ok(-c1 / b + q.sqrt())
}

/// Integrate a smooth field from `p0` until `y` first reaches `section_y` from below and
/// return the abscissa there.
pub fn transition_to_section(f: &SmoothField, p0: Vec2, section_y: f64, tmax: f64) -> Result<f64> {
    let hits = flow::smooth_hits(f, p0, tmax, Rect::new(-1e6, 1e6, -1e6, 1e6), |p| section_y - p.y, 1)?;
    hits.first()
        .filter(|h| h.downward)
        .map(|h| h.point.x)
        .ok_or_else(|| Error::NoReturn(p0.x, "section not reached".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub alpha: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Least-squares `π(s) ≈ α + k1 s + k2 s²` in `s = x − base` over the first quarter of
/// the domain.
pub fn quadratic_expansion_fit(map: &ReturnMap) -> Result<QuadraticFit> {
    let pts: Vec<(f64, f64)> = map
        .defined()
        .into_iter()
        .map(|(x, p)| (x - map.base, p))
        .filter(|&(s, _)| s >= 0.0 && s <= map.domain_len / 4.0)
        .collect();
    if pts.len() < 8 {
        return Err(Error::InsufficientSamples { need: 8, got: pts.len() });
    }
    // Scale s to [0, 1] for conditioning.
    let smax = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(s, v) in &pts {
        let u = s / smax;
        let row = [1.0, u, u * u];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * v;
        }
    }
    let c = solve3(ata, atb).ok_or(Error::DegenerateConfiguration("singular least-squares system".into()))?;
    Ok(QuadraticFit {
        alpha: c[0],
        k1: c[1] / smax,
        k2: c[2] / (smax * smax),
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeResult {
    LimitZero,
    LimitInfinite,
    Finite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub result: ProbeResult,
    /// Log-log slope of |D^order π| against `x − base` near the base.
    pub slope: f64,
}

const PROBE_SLOPE: f64 = 0.2;

/// One-sided asymptotics of the `order`-th derivative of `π` at the base point.
///
/// Derivatives are estimated by divided differences over consecutive samples of a
/// geometric sequence approaching the base; the trend of `log|D|` against `log(x − base)`
/// over the samples nearest the base decides the answer.
pub fn derivative_probe(map: &ReturnMap, order: usize) -> Result<Probe> {
    derivative_probe_with(map, order, 0.0)
}

/// Same probe on data carrying absolute errors of about `noise`: windows over which
/// `π` varies by less than `1e3 · noise` are discarded, since their differences
/// measure the error rather than the map.
pub fn derivative_probe_with(map: &ReturnMap, order: usize, noise: f64) -> Result<Probe> {
    if !(1..=4).contains(&order) {
        return Err(Error::DomainError(format!("order {order} not in 1..=4")));
    }
    let mut pts: Vec<(f64, f64)> = map
        .defined()
        .into_iter()
        .map(|(x, p)| (x - map.base, p))
        .filter(|&(s, _)| s > 0.0)
        .collect();
    if pts.len() < 64 {
        return Err(Error::InsufficientSamples { need: 64, got: pts.len() });
    }
    // Nearest the base last.
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let fact: f64 = (1..=order).map(|i| i as f64).product();
    let mut est: Vec<(f64, f64)> = Vec::new();
    for w in pts.windows(order + 1) {
        let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.1), h.max(p.1)));
        if hi - lo < 1e3 * noise {
            continue;
        }
        // Divided-difference table on this window.
        let mut dd: Vec<f64> = w.iter().map(|p| p.1).collect();
        for lvl in 1..=order {
            for i in 0..=order - lvl {
                dd[i] = (dd[i + 1] - dd[i]) / (w[i + lvl].0 - w[i].0);
            }
        }
        let d = fact * dd[0];
        let s = w.iter().map(|p| p.0.ln()).sum::<f64>() / w.len() as f64;
        if d != 0.0 && d.is_finite() {
            est.push((s, d.abs().ln()));
        }
    }
    let tail = &est[est.len() / 2..];
    if tail.len() < 4 {
        return Err(Error::InsufficientSamples { need: 4, got: tail.len() });
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let result = if slope > PROBE_SLOPE {
        ProbeResult::LimitZero
    } else if slope < -PROBE_SLOPE {
        ProbeResult::LimitInfinite
    } else {
        let last = &tail[tail.len() * 3 / 4..];
        let vals: Vec<f64> = last.iter().map(|p| p.1.exp()).collect();
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        if (hi - lo) <= 0.05 * hi.abs() {
            ProbeResult::Finite(*vals.last().expect("non-empty"))
        } else {
            return Err(Error::Inconclusive(slope));
        }
    };
    Ok(Probe { result, slope })
}

/// Return map built from the normal-form transition composed with increasing maps,
/// `π(s) = Φ(ρ̃(ã + ψ(s)))` with `Φ(u) = u + 0.3u²`, `ψ(s) = s + 0.2s²`, base 0.
///
/// The argument of `ρ̃` is formed as `(ã − k) + ψ(s)` so that for `k ≥ 0` no constant is
/// added to the small quantity and high-order differences keep full precision.
pub fn synthetic_normal_form_map(k: f64, r: f64, xs: &[f64]) -> ReturnMap {
    let a = normal_form_base(k, r);
    let off = if k >= 0.0 { 0.0 } else { -k * r / (1.0 + r) };
    let phi = |u: f64| u + 0.3 * u * u;
    let psi = |s: f64| s + 0.2 * s * s;
    let rho = |t: f64| k * t.powf(r) + t.powf(r + 1.0);
    let samples = xs
        .iter()
        .map(|&s| ReturnMapSample {
            x: s,
            pi: phi(rho(off + psi(s))),
            outcome: Some(LandingOutcome::Return),
        })
        .collect();
    let _ = a;
    ReturnMap {
        base: 0.0,
        domain_len: xs.iter().cloned().fold(0.0, f64::max),
        samples,
        beta_sign: if k < 0.0 {
            -1
        } else if k == 0.0 {
            0
        } else {
            1
        },
        base_value: Some(phi(rho(off))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attracting,
    Repelling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedPoint {
    None,
    Fixed { x0: f64, stability: Stability, derivative: f64 },
    /// `π(a_Z) = a_Z`: the degenerate cycle itself.
    Boundary,
}

/// Fixed point of `π` nearest the base: sign change of `π(x) − x` over the samples, refined
/// with `pi` when given (bisection-type solve to 1e-10), else by linear interpolation.
pub fn find_fixed_point<F>(map: &ReturnMap, pi: Option<F>) -> FixedPoint
where
    F: Fn(f64) -> Option<f64>,
{
    if let Some(v) = map.base_value {
        if (v - map.base).abs() <= 1e-8 {
            return FixedPoint::Boundary;
        }
    }
    let pts = map.defined();
    for (i, w) in pts.windows(2).enumerate() {
        let (x0, p0) = w[0];
        let (x1, p1) = w[1];
        let (g0, g1) = (p0 - x0, p1 - x1);
        if g0 == 0.0 || g0.signum() != g1.signum() {
            let (xf, deriv) = match &pi {
                Some(f) => {
                    let g = |x: f64| f(x).map(|v| v - x).unwrap_or(f64::NAN);
                    let xf = brent(g, x0, x1, g0, g1, 1e-12, 0.0, 200).unwrap_or(0.5 * (x0 + x1));
                    let e = 1e-5 * (x1 - x0).abs().max(1e-3);
                    let d = match (f(xf + e), f(xf - e)) {
                        (Some(a), Some(b)) => (a - b) / (2.0 * e),
                        _ => (p1 - p0) / (x1 - x0),
                    };
                    (xf, d)
                }
                None => (x0 - g0 * (x1 - x0) / (g1 - g0), (p1 - p0) / (x1 - x0)),
            };
            // Bracket pattern: π > x before and π < x after means attracting.
            let pattern_attracting = g0 > 0.0 && g1 < 0.0;
            let stability = if deriv.abs() < 1.0 || (deriv.is_nan() && pattern_attracting) {
                Stability::Attracting
            } else {
                Stability::Repelling
            };
            let _ = i;
            return FixedPoint::Fixed {
                x0: xf,
                stability,
                derivative: deriv,
            };
        }
    }
    FixedPoint::None
}
