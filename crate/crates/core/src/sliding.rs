//! Sliding vector fields on Σ and pseudo-equilibria.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::psys::{PiecewiseSystem, SigmaPointClass, SigmaTag};
use crate::roots::{brent, scan_brackets};

/// The convex combination of `X` and `Y` tangent to Σ, on Σs ∪ Σe.
pub fn sliding_field(z: &PiecewiseSystem, p: Vec2) -> Result<Vec2> {
    let cls = z.classify_sigma_point(p)?;
    if !matches!(cls.tag, SigmaTag::Sliding | SigmaTag::Escaping) {
        return Err(Error::NotSlidingRegion(p));
    }
    sliding_field_unchecked(z, p, cls.lie_x, cls.lie_y)
}

pub(crate) fn sliding_field_unchecked(z: &PiecewiseSystem, p: Vec2, xh: f64, yh: f64) -> Result<Vec2> {
    let den = yh - xh;
    if den.abs() < 1e-12 {
        return Err(Error::DegenerateDenominator(p));
    }
    Ok((z.plus.eval(p) * yh - z.minus.eval(p) * xh) * (1.0 / den))
}

/// `Yh·X − Xh·Y`, defined on all of Σ.
pub fn normalized_sliding_field(z: &PiecewiseSystem, p: Vec2) -> Result<Vec2> {
    let hv = z.h(p);
    if !(hv.abs() <= 1e-9) {
        return Err(Error::NotOnSigma(p, hv));
    }
    Ok(zsn(z, p))
}

fn zsn(z: &PiecewiseSystem, p: Vec2) -> Vec2 {
    z.plus.eval(p) * z.yh(p) - z.minus.eval(p) * z.xh(p)
}

/// Chart component of `Z^s_N` at chart value `u`.
pub fn zsn_chart(z: &PiecewiseSystem, u: f64) -> f64 {
    let p = z.param(u);
    z.chart.component(zsn(z, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoKind {
    Pseudonode,
    Pseudosaddle,
    /// Non-hyperbolic root, `|slope| ≤ 1e-6`.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlidingRegion {
    Sliding,
    Escaping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoEquilibrium {
    pub chart: f64,
    pub location: Vec2,
    pub kind: PseudoKind,
    pub region: SlidingRegion,
    pub slope: f64,
}

/// Every root of the chart component of `Z^s_N` in `[u0, u1]`, with its Σ class.
///
/// Roots in the crossing region (e.g. where `X` and `Y` are parallel and point the same
/// way) are returned too; `find_pseudo_equilibria` filters them.
pub fn zsn_roots(z: &PiecewiseSystem, u0: f64, u1: f64) -> Vec<(f64, SigmaPointClass)> {
    let g = |u: f64| zsn_chart(z, u);
    let mut out = Vec::new();
    for (a, b) in scan_brackets(g, u0, u1, 1024) {
        let r = if a == b {
            Some(a)
        } else {
            brent(g, a, b, g(a), g(b), 1e-13, 0.0, 200)
        };
        if let Some(u) = r {
            if out.iter().any(|(v, _): &(f64, _)| (v - u).abs() < 1e-10) {
                continue;
            }
            let p = z.param(u);
            out.push((u, SigmaPointClass::from_lie(z.xh(p), z.yh(p))));
        }
    }
    out
}

/// Pseudo-equilibria (roots of the sliding field) inside Σs ∪ Σe on a chart interval.
pub fn find_pseudo_equilibria(z: &PiecewiseSystem, u0: f64, u1: f64) -> Vec<PseudoEquilibrium> {
    zsn_roots(z, u0, u1)
        .into_iter()
        .filter_map(|(u, cls)| {
            let region = match cls.tag {
                SigmaTag::Sliding => SlidingRegion::Sliding,
                SigmaTag::Escaping => SlidingRegion::Escaping,
                _ => return None,
            };
            let slope = sliding_chart_slope(z, u);
            let kind = if slope.abs() <= 1e-6 {
                PseudoKind::Degenerate
            } else if (region == SlidingRegion::Sliding) == (slope < 0.0) {
                PseudoKind::Pseudonode
            } else {
                PseudoKind::Pseudosaddle
            };
            Some(PseudoEquilibrium {
                chart: u,
                location: z.param(u),
                kind,
                region,
                slope,
            })
        })
        .collect()
}

/// Derivative of the chart component of `Z^s` along the chart, central difference.
fn sliding_chart_slope(z: &PiecewiseSystem, u: f64) -> f64 {
    let s = 1e-6;
    let f = |v: f64| {
        let p = z.param(v);
        let (xh, yh) = (z.xh(p), z.yh(p));
        sliding_field_unchecked(z, p, xh, yh)
            .map(|w| z.chart.component(w))
            .unwrap_or(f64::NAN)
    };
    (f(u + s) - f(u - s)) / (2.0 * s)
}

/// `μ` in `Z^s_N = μ x + O(x²)` at `s`: derivative of the chart component of `Z^s_N`.
pub fn mu_coefficient(z: &PiecewiseSystem, s: Vec2) -> Result<f64> {
    let hv = z.h(s);
    if !(hv.abs() <= 1e-9) {
        return Err(Error::NotOnSigma(s, hv));
    }
    let u = z.chart_of(s);
    let st = 1e-6;
    Ok((zsn_chart(z, u + st) - zsn_chart(z, u - st)) / (2.0 * st))
}

/// BS(3) hyperbolicity test on `μ`.
pub fn is_hyperbolic_mu(mu: f64) -> bool {
    mu.abs() > 1e-6
}
