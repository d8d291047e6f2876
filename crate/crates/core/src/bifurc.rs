//! Bifurcation parameters α and β, local/global case classification, curve tracing,
//! cycle taxonomy and parameter-plane scans.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, Orbit, SaddleData, SegmentKind};
use crate::geom::Vec2;
use crate::models::{pendulum_model, polynomial_model, PendulumParams, PolyParams};
use crate::psys::{PiecewiseSystem, SigmaPointClass, SigmaTag};
use crate::retmap::{self, BasePoint, FixedPoint, LandingOutcome, QuadraticFit, ReturnOptions, Stability};
use crate::roots::{brent, scan_brackets};

/// Chart differences below this count as zero.
pub const ZERO_TOL: f64 = 1e-8;

/// `h(S_X)` at the continued saddle of the plus field.
pub fn beta(z: &PiecewiseSystem) -> Result<f64> {
    let s = flow::plus_saddle(z)?;
    Ok(flow::saddle_height(z, &s))
}

/// `π_Z(a_Z) − a_Z`.
pub fn alpha(z: &PiecewiseSystem) -> Result<f64> {
    let bp = retmap::base_point(z)?;
    let l = retmap::base_landing(z, &bp)?;
    Ok(l.chart - bp.a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BsCase {
    BS1,
    BS2,
    BS3,
    #[serde(rename = "not_applicable")]
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DscCase {
    DSC11,
    DSC12,
    DSC21,
    DSC22,
    DSC31,
    DSC32,
    #[serde(rename = "not_applicable")]
    NotApplicable,
}

impl DscCase {
    pub fn from_parts(bs: BsCase, ratio: f64) -> DscCase {
        if (ratio - 1.0).abs() <= 1e-6 {
            return DscCase::NotApplicable;
        }
        let big = ratio > 1.0;
        match (bs, big) {
            (BsCase::BS1, true) => DscCase::DSC11,
            (BsCase::BS1, false) => DscCase::DSC12,
            (BsCase::BS2, true) => DscCase::DSC21,
            (BsCase::BS2, false) => DscCase::DSC22,
            (BsCase::BS3, true) => DscCase::DSC31,
            (BsCase::BS3, false) => DscCase::DSC32,
            (BsCase::NotApplicable, _) => DscCase::NotApplicable,
        }
    }
}

/// Directions (angles in `(0, π)` measured from the Σ tangent towards Σ+) at which the
/// curves through the saddle leave it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsAngles {
    pub tangency: f64,
    pub parallel: f64,
    pub unstable: f64,
    pub stable: f64,
}

const BS_RADIUS: f64 = 1e-3;
const BS_ANGLE_TOL: f64 = 1e-6;

pub fn bs_angles(z: &PiecewiseSystem, s: &SaddleData) -> Result<BsAngles> {
    let c = s.location;
    let n = z.grad_h(c).normalized();
    let t = Vec2::new(n.y, -n.x);
    let at = |th: f64| c + (t * th.cos() + n * th.sin()) * BS_RADIUS;
    let root = |g: &dyn Fn(f64) -> f64, what: &str| -> Result<f64> {
        let lo = 1e-9;
        let hi = PI - 1e-9;
        let br = scan_brackets(g, lo, hi, 720);
        let (a, b) = *br
            .first()
            .ok_or_else(|| Error::DegenerateConfiguration(format!("{what} does not enter Σ+ near the saddle")))?;
        if a == b {
            return Ok(a);
        }
        brent(g, a, b, g(a), g(b), 1e-13, 0.0, 200)
            .ok_or_else(|| Error::DegenerateConfiguration(format!("no angle for {what}")))
    };
    let tangency = root(&|th| z.xh(at(th)), "T_X")?;
    let parallel = root(&|th| z.det_xy(at(th)), "PE_Z")?;
    let dir_angle = |v: Vec2| {
        let v = if v.dot(n) < 0.0 { -v } else { v };
        v.dot(n).atan2(v.dot(t))
    };
    Ok(BsAngles {
        tangency,
        parallel,
        unstable: dir_angle(s.eigvecs.0),
        stable: dir_angle(s.eigvecs.1),
    })
}

fn between(x: f64, a: f64, b: f64) -> bool {
    (a < x && x < b) || (b < x && x < a)
}

/// Local case from the angular order of `T_X`, `PE_Z` and `W^u_+` on a small circle about
/// the saddle.
pub fn classify_bs(z: &PiecewiseSystem) -> Result<BsCase> {
    let s = flow::plus_saddle(z)?;
    let a = bs_angles(z, &s)?;
    let v = [a.tangency, a.parallel, a.unstable];
    for i in 0..3 {
        for j in i + 1..3 {
            if (v[i] - v[j]).abs() <= BS_ANGLE_TOL {
                return Err(Error::DegenerateConfiguration(format!(
                    "curves coincide at angle {:.9}",
                    v[i]
                )));
            }
        }
    }
    Ok(if between(a.unstable, a.tangency, a.parallel) {
        BsCase::BS1
    } else if between(a.parallel, a.tangency, a.unstable) {
        BsCase::BS2
    } else {
        BsCase::BS3
    })
}

pub fn classify_dsc(z: &PiecewiseSystem) -> Result<DscCase> {
    let bs = classify_bs(z)?;
    let s = flow::plus_saddle(z)?;
    Ok(DscCase::from_parts(bs, s.ratio))
}

/// Signed chart differences of the loop landing against the special points of Σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandingOrder {
    pub base: f64,
    pub landing: f64,
    pub outcome: LandingOutcome,
    pub pe: Option<f64>,
    pub fold: Option<f64>,
    pub p1: Option<f64>,
    pub minus_pe: Option<f64>,
    pub minus_fold: Option<f64>,
    pub minus_p1: Option<f64>,
    /// Whether `P_E` lies in the sliding region.
    pub pe_in_sliding: bool,
}

/// Fold of X and `P_E` near the saddle, with the manifold data, without the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaMarks {
    pub base: BasePoint,
    pub pe: Option<f64>,
    pub pe_in_sliding: bool,
}

pub fn sigma_marks(z: &PiecewiseSystem) -> Result<SigmaMarks> {
    let base = retmap::base_point(z)?;
    let pe = flow::pe_point(z, &base.saddle)?;
    let pe_in_sliding = pe
        .map(|u| {
            let p = z.param(u);
            SigmaPointClass::from_lie(z.xh(p), z.yh(p)).tag == SigmaTag::Sliding
        })
        .unwrap_or(false);
    Ok(SigmaMarks { base, pe, pe_in_sliding })
}

pub fn landing_order(z: &PiecewiseSystem) -> Result<LandingOrder> {
    landing_order_with(z, 0)
}

/// `skip` extra crossing pairs before the landing (γ̃_PE uses one).
pub fn landing_order_with(z: &PiecewiseSystem, skip: usize) -> Result<LandingOrder> {
    let marks = sigma_marks(z)?;
    let bp = marks.base;
    let l = retmap::base_landing_with(z, &bp, ReturnOptions { skip, ..ReturnOptions::default() })?;
    let diff = |t: Option<f64>| t.map(|v| l.chart - v);
    // For β = 0 the fold degenerates into the saddle.
    let fold = if bp.beta_sign == 0 {
        Some(bp.a)
    } else {
        bp.fold
    };
    Ok(LandingOrder {
        base: bp.a,
        landing: l.chart,
        outcome: l.outcome,
        pe: marks.pe,
        fold,
        p1: bp.manifolds.p1,
        minus_pe: diff(marks.pe),
        minus_fold: diff(fold),
        minus_p1: diff(bp.manifolds.p1),
        pe_in_sliding: marks.pe_in_sliding,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveLabel {
    #[serde(rename = "gamma_F")]
    GammaF,
    #[serde(rename = "gamma_P1")]
    GammaP1,
    #[serde(rename = "gamma_PE")]
    GammaPE,
    #[serde(rename = "gamma_PE_tilde")]
    GammaPETilde,
}

impl CurveLabel {
    pub fn parse(s: &str) -> Result<CurveLabel> {
        match s.trim().to_ascii_lowercase().trim_start_matches("gamma_") {
            "f" => Ok(CurveLabel::GammaF),
            "p1" => Ok(CurveLabel::GammaP1),
            "pe" => Ok(CurveLabel::GammaPE),
            "pe_tilde" | "pet" => Ok(CurveLabel::GammaPETilde),
            _ => Err(Error::Parse(format!("unknown curve label {s:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CurveLabel::GammaF => "gamma_F",
            CurveLabel::GammaP1 => "gamma_P1",
            CurveLabel::GammaPE => "gamma_PE",
            CurveLabel::GammaPETilde => "gamma_PE_tilde",
        }
    }
}

/// Defining residual of a curve at one system: `π(a_Z)` minus the curve's target.
pub fn curve_residual(z: &PiecewiseSystem, label: CurveLabel) -> Result<f64> {
    let skip = usize::from(label == CurveLabel::GammaPETilde);
    let o = landing_order_with(z, skip)?;
    let missing = |what: &str| Error::DegenerateConfiguration(format!("{what} is absent"));
    match label {
        CurveLabel::GammaF => o.minus_fold.ok_or_else(|| missing("fold")),
        CurveLabel::GammaP1 => o.minus_p1.ok_or_else(|| missing("P1")),
        CurveLabel::GammaPE | CurveLabel::GammaPETilde => {
            if !o.pe_in_sliding {
                return Err(missing("pseudo-equilibrium in Σs"));
            }
            o.minus_pe.ok_or_else(|| missing("pseudo-equilibrium"))
        }
    }
}

/// A two-parameter model family.
#[derive(Clone)]
pub struct Family {
    pub name: String,
    pub params: [String; 2],
    build: Arc<dyn Fn(f64, f64) -> PiecewiseSystem + Send + Sync>,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Family").field("name", &self.name).field("params", &self.params).finish()
    }
}

impl Family {
    pub fn new(
        name: impl Into<String>,
        params: [&str; 2],
        build: impl Fn(f64, f64) -> PiecewiseSystem + Send + Sync + 'static,
    ) -> Self {
        Family {
            name: name.into(),
            params: [params[0].to_string(), params[1].to_string()],
            build: Arc::new(build),
        }
    }

    pub fn system(&self, p0: f64, p1: f64) -> PiecewiseSystem {
        (self.build)(p0, p1)
    }

    /// Polynomial model over `(m, d)`.
    pub fn poly_md(r: f64, k: f64) -> Self {
        Family::new(format!("poly(r={r},k={k})"), ["m", "d"], move |m, d| {
            polynomial_model(PolyParams::new(r, k, d, m))
        })
    }

    /// Pendulum over `(a1, a3)`.
    pub fn pendulum_a1a3(a2: f64, a4: f64) -> Self {
        Family::new(format!("pendulum(a2={a2},a4={a4})"), ["a1", "a3"], move |a1, a3| {
            pendulum_model(PendulumParams::new(a1, a2, a3, a4))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveStatus {
    Solved,
    /// `γ_F` with β ≤ 0 coincides with the α axis.
    AlphaAxis,
    BracketFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sweep: f64,
    pub solve: Option<f64>,
    pub residual: Option<f64>,
    pub status: CurveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTrace {
    pub label: CurveLabel,
    pub sweep_param: String,
    pub solve_param: String,
    pub points: Vec<CurvePoint>,
}

impl CurveTrace {
    pub fn solved(&self) -> impl Iterator<Item = &CurvePoint> {
        self.points.iter().filter(|p| p.status == CurveStatus::Solved)
    }
}

/// Trace a curve by solving the residual in the second family parameter for each value of
/// the first. Points where the residual has no sign change over `solve` are recorded as
/// bracket failures.
pub fn trace_curve(family: &Family, label: CurveLabel, sweep: &[f64], solve: (f64, f64)) -> CurveTrace {
    let points = sweep
        .par_iter()
        .map(|&u| trace_point(family, label, u, solve))
        .collect();
    CurveTrace {
        label,
        sweep_param: family.params[0].clone(),
        solve_param: family.params[1].clone(),
        points,
    }
}

fn trace_point(family: &Family, label: CurveLabel, u: f64, (lo, hi): (f64, f64)) -> CurvePoint {
    let fail = |e: String| CurvePoint {
        sweep: u,
        solve: None,
        residual: None,
        status: CurveStatus::BracketFailure,
        error: Some(e),
    };
    if label == CurveLabel::GammaF {
        // β does not depend on the solved parameter in the shipped families, so check it at
        // the bracket midpoint.
        if let Ok(b) = beta(&family.system(u, 0.5 * (lo + hi))) {
            if b <= 0.0 {
                return CurvePoint {
                    sweep: u,
                    solve: None,
                    residual: Some(0.0),
                    status: CurveStatus::AlphaAxis,
                    error: None,
                };
            }
        }
    }
    let res = |v: f64| curve_residual(&family.system(u, v), label);
    let (flo, fhi) = match (res(lo), res(hi)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e.to_string()),
    };
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return fail(Error::BracketFailure(lo, hi).to_string());
    }
    let g = |v: f64| res(v).unwrap_or(f64::NAN);
    // Bisection keeps the bracket even where the residual is only piecewise smooth.
    let (mut a, mut b, mut fa) = (lo, hi, flo);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = g(m);
        if !fm.is_finite() {
            return fail(format!("residual undefined at {m}"));
        }
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let v = 0.5 * (a + b);
    let r = g(v);
    CurvePoint {
        sweep: u,
        solve: Some(v),
        residual: Some(r.abs()),
        status: CurveStatus::Solved,
        error: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Simple,
    Limit,
    RegularPolycycle,
    SlidingCycle,
    PseudoCycle,
}

const CLOSE_TOL: f64 = 1e-6;
const SHARE_TOL: f64 = 1e-8;

/// Taxonomy of a closed orbit.
///
/// `singular` lists equilibria and Σ-singularities (folds at a saddle, pseudo-equilibria)
/// that may sit in the closure of the orbit. Crossing-only cycles are reported as
/// `Simple`; use [`classify_periodic`] to promote a hyperbolic one to `Limit`.
pub fn classify_cycle(orbit: &Orbit, singular: &[Vec2]) -> Result<CycleKind> {
    let gap = (orbit.end() - orbit.start()).norm();
    if !(gap <= CLOSE_TOL) {
        return Err(Error::NotClosed(gap));
    }
    let segs = &orbit.segments;
    // Consecutive arcs meeting head-to-head or tail-to-tail.
    for w in segs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let head = (a.end() - b.end()).norm() <= SHARE_TOL && (a.end() - b.start()).norm() > SHARE_TOL;
        let tail = (a.start() - b.start()).norm() <= SHARE_TOL && (a.end() - b.start()).norm() > SHARE_TOL;
        if head || tail {
            return Ok(CycleKind::PseudoCycle);
        }
    }
    if segs
        .iter()
        .any(|s| s.kind == SegmentKind::Sliding && (s.end() - s.start()).norm() > SHARE_TOL)
    {
        return Ok(CycleKind::SlidingCycle);
    }
    let touches_singular = singular.iter().any(|q| {
        segs.iter()
            .flat_map(|s| s.samples.iter())
            .any(|(_, p)| (*p - *q).norm() <= CLOSE_TOL)
    });
    if touches_singular {
        return Ok(CycleKind::RegularPolycycle);
    }
    Ok(CycleKind::Simple)
}

/// Closed orbit through the fixed point `x0` of `π`, classified; a crossing cycle with
/// `|π'(x0)| ≠ 1` is isolated and reported as `Limit`.
pub fn classify_periodic(z: &PiecewiseSystem, x0: f64, derivative: f64) -> Result<(Orbit, CycleKind)> {
    let l = retmap::first_return(z, x0)?;
    let p0 = z.param(x0);
    let mut fo = flow::FlowOptions::new(z.window);
    fo.max_events = 64;
    let mut seen_minus = false;
    let mut stop_at = None;
    let t_end = l.time;
    let orbit = flow::integrate_with(z, p0, Some(SegmentKind::SmoothPlus), t_end, fo, |ev| {
        if ev.from == SegmentKind::SmoothMinus {
            seen_minus = true;
        }
        if seen_minus && ev.to == SegmentKind::SmoothPlus {
            stop_at = Some(ev.t);
            return flow::Control::Stop;
        }
        flow::Control::Continue
    })?;
    let mut kind = classify_cycle(&orbit, &[])?;
    if kind == CycleKind::Simple && (derivative.abs() - 1.0).abs() > 1e-9 {
        kind = CycleKind::Limit;
    }
    Ok((orbit, kind))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum Detected {
    LimitCycle { x0: f64, stability: Stability },
    DegenerateCycle,
    SlidingCycle,
    PseudoCycle,
    Polycycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub params: Vec<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub ratio: Option<f64>,
    pub bs_case: BsCase,
    pub dsc_case: DscCase,
    pub landing: Option<LandingOrder>,
    pub detected: Vec<Detected>,
    pub region: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic_fit: Option<QuadraticFit>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Sample the return map and search it for a fixed point.
    pub detect_cycles: bool,
    pub samples: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            detect_cycles: true,
            samples: 64,
        }
    }
}

fn sign_char(v: f64) -> char {
    if v.abs() <= ZERO_TOL {
        '0'
    } else if v > 0.0 {
        '+'
    } else {
        '-'
    }
}

/// Region signature from (sign α, sign β, landing order, pseudo-equilibrium presence).
pub fn region_signature(alpha: f64, beta: f64, o: &LandingOrder) -> String {
    let opt = |v: Option<f64>| v.map(sign_char).unwrap_or('n');
    format!(
        "a{}b{}|pe{}|f{}|p1{}|{}",
        sign_char(alpha),
        sign_char(beta),
        if o.pe_in_sliding { opt(o.minus_pe) } else { 'n' },
        opt(o.minus_fold),
        opt(o.minus_p1),
        if o.pe_in_sliding { "PE" } else { "noPE" }
    )
}

/// Full classification at one parameter value. Component failures are recorded in
/// `errors`; the record is returned regardless.
pub fn classify_point(z: &PiecewiseSystem, params: Vec<f64>, opts: ClassifyOptions) -> BifurcationPoint {
    let mut errors = Vec::new();
    let mut note = |e: Error| errors.push(e.to_string());
    let beta_v = beta(z).map_err(&mut note).ok();
    let ratio = flow::plus_saddle(z).map(|s| s.ratio).ok();
    let bs = classify_bs(z).map_err(&mut note).unwrap_or(BsCase::NotApplicable);
    let dsc = ratio.map(|r| DscCase::from_parts(bs, r)).unwrap_or(DscCase::NotApplicable);
    let order = landing_order(z).map_err(&mut note).ok();
    let alpha_v = order.map(|o| o.landing - o.base);
    let mut detected = Vec::new();
    let mut quadratic_fit = None;
    if let (Some(a), Some(b), Some(o)) = (alpha_v, beta_v, order) {
        if a.abs() <= ZERO_TOL {
            detected.push(Detected::DegenerateCycle);
            if b >= 0.0 {
                detected.push(Detected::Polycycle);
            }
        }
        if b > 0.0 && o.minus_p1.map(|d| d.abs() <= ZERO_TOL).unwrap_or(false) {
            detected.push(Detected::PseudoCycle);
        }
        if b < 0.0 && o.outcome == LandingOutcome::Sliding {
            // Sliding carries the landing back to the fold unless a pseudo-equilibrium
            // sits in between.
            let blocked = o.pe_in_sliding && o.pe.map(|pe| between(pe, o.landing, o.base)).unwrap_or(false);
            if !blocked {
                detected.push(Detected::SlidingCycle);
            }
        }
        if opts.detect_cycles {
            if let Ok(bp) = retmap::base_point(z) {
                let delta = retmap::discover_domain(z, &bp, 0.05, 1.0);
                let xs = retmap::uniform_points(bp.a, delta, opts.samples);
                let map = retmap::sample_return_map(z, &bp, delta, &xs);
                let exact = |x: f64| {
                    retmap::first_return(z, x)
                        .ok()
                        .filter(|l| l.outcome == LandingOutcome::Return)
                        .map(|l| l.chart)
                };
                if let FixedPoint::Fixed { x0, stability, .. } = retmap::find_fixed_point(&map, Some(exact)) {
                    detected.push(Detected::LimitCycle { x0, stability });
                }
                if ratio.map(|r| (r - 1.0).abs() <= 1e-6).unwrap_or(false) {
                    quadratic_fit = retmap::quadratic_expansion_fit(&map).ok();
                }
            }
        }
    }
    let region = match (alpha_v, beta_v, order) {
        (Some(a), Some(b), Some(o)) => Some(region_signature(a, b, &o)),
        _ => None,
    };
    BifurcationPoint {
        params,
        alpha: alpha_v,
        beta: beta_v,
        ratio,
        bs_case: bs,
        dsc_case: dsc,
        landing: order,
        detected,
        region,
        quadratic_fit,
        errors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub i: usize,
    pub j: usize,
    pub p0: f64,
    pub p1: f64,
    pub region: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScan {
    pub params: [String; 2],
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<GridCell>,
}

impl GridScan {
    pub fn cell(&self, i: usize, j: usize) -> &GridCell {
        &self.cells[j * self.nx + i]
    }

    pub fn success_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.cells.iter().filter(|c| c.region.is_some()).count() as f64 / self.cells.len() as f64
    }

    /// Interior cells whose signature differs from all four neighbours while those
    /// neighbours agree with each other.
    pub fn isolated_islands(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if self.nx < 3 || self.ny < 3 {
            return out;
        }
        for j in 1..self.ny - 1 {
            for i in 1..self.nx - 1 {
                let me = &self.cell(i, j).region;
                let nb = [
                    &self.cell(i - 1, j).region,
                    &self.cell(i + 1, j).region,
                    &self.cell(i, j - 1).region,
                    &self.cell(i, j + 1).region,
                ];
                if me.is_some() && nb.iter().all(|n| n.is_some() && *n == nb[0]) && nb[0] != me {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Region signature on the grid `xs × ys` (cells in row-major order, `x` fastest).
pub fn scan_grid(family: &Family, xs: &[f64], ys: &[f64]) -> GridScan {
    let coords: Vec<(usize, usize)> = (0..ys.len()).flat_map(|j| (0..xs.len()).map(move |i| (i, j))).collect();
    let opts = ClassifyOptions {
        detect_cycles: false,
        ..ClassifyOptions::default()
    };
    let cells = coords
        .par_iter()
        .map(|&(i, j)| {
            let (u, v) = (xs[i], ys[j]);
            let z = family.system(u, v);
            let bp = classify_point(&z, vec![u, v], opts);
            GridCell {
                i,
                j,
                p0: u,
                p1: v,
                region: bp.region,
                alpha: bp.alpha,
                beta: bp.beta,
                error: if bp.errors.is_empty() {
                    None
                } else {
                    Some(bp.errors.join("; "))
                },
            }
        })
        .collect();
    GridScan {
        params: family.params.clone(),
        nx: xs.len(),
        ny: ys.len(),
        cells,
    }
}
