//! Event-driven Filippov integration, saddles and their invariant manifolds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};
use crate::ode::{locate_event, DenseStep, OdeOptions, Stepper};
use crate::psys::{PiecewiseSystem, SigmaPointClass, SigmaTag, SmoothField};
use crate::roots::{brent, scan_brackets};
use crate::TOL_TANG;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    SmoothPlus,
    SmoothMinus,
    Sliding,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::SmoothPlus => "smooth_plus",
            SegmentKind::SmoothMinus => "smooth_minus",
            SegmentKind::Sliding => "sliding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    None,
    Crossing,
    SlidingEntry,
    TangencyExit,
    WindowExit,
    TimeLimit,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::None => "none",
            EventKind::Crossing => "crossing",
            EventKind::SlidingEntry => "sliding_entry",
            EventKind::TangencyExit => "tangency_exit",
            EventKind::WindowExit => "window_exit",
            EventKind::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub kind: SegmentKind,
    pub t0: f64,
    pub t1: f64,
    pub samples: Vec<(f64, Vec2)>,
    pub entry_event: EventKind,
    pub exit_event: EventKind,
}

impl OrbitSegment {
    pub fn start(&self) -> Vec2 {
        self.samples[0].1
    }

    pub fn end(&self) -> Vec2 {
        self.samples[self.samples.len() - 1].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TimeLimit,
    WindowExit,
    /// The event callback asked to stop.
    Stopped,
    EventLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub segments: Vec<OrbitSegment>,
    pub termination: Termination,
    /// Integrated with negated fields; times are then elapsed backward time.
    pub backward: bool,
}

impl Orbit {
    pub fn end(&self) -> Vec2 {
        self.segments.last().map(|s| s.end()).unwrap_or(Vec2::new(f64::NAN, f64::NAN))
    }

    pub fn start(&self) -> Vec2 {
        self.segments.first().map(|s| s.start()).unwrap_or(Vec2::new(f64::NAN, f64::NAN))
    }

    pub fn duration(&self) -> f64 {
        self.segments.last().map(|s| s.t1).unwrap_or(0.0)
    }
}

/// A junction between segments, reported to the event callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub point: Vec2,
    pub from: SegmentKind,
    pub to: SegmentKind,
    pub class: SigmaPointClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub ode: OdeOptions,
    pub window: Rect,
    /// Keep every accepted step in the segments (otherwise only junctions).
    pub record: bool,
    pub max_events: usize,
}

impl FlowOptions {
    pub fn new(window: Rect) -> Self {
        FlowOptions {
            ode: OdeOptions::default(),
            window,
            record: true,
            max_events: 10_000,
        }
    }
}

/// Dense samples per accepted step used to bracket events.
const EVENT_SAMPLES: usize = 8;
/// `|g|` below this at the start of an arc means the arc starts on the event surface.
const START_TOL: f64 = 1e-13;

enum Scan {
    Nothing,
    Bracket(f64, f64, f64, f64),
    /// The event function never became positive: the arc leaves its region at once.
    Immediate,
}

/// First positive→negative transition of `g` over the step. A start value `≤ START_TOL`
/// is treated as "on the surface" and a positive sample is required before a negative one.
fn scan_step<G: Fn(Vec2) -> f64>(step: &DenseStep, g: &G, g0: f64, arc_start: bool) -> Scan {
    let mut prev = if g0 > START_TOL || (!arc_start && g0 > 0.0) {
        Some((0.0, g0))
    } else {
        None
    };
    for i in 1..=EVENT_SAMPLES {
        let tau = step.h * i as f64 / EVENT_SAMPLES as f64;
        let p = if i == EVENT_SAMPLES { step.y1 } else { step.at(tau) };
        let gv = g(p);
        if gv > 0.0 {
            prev = Some((tau, gv));
        } else if gv < 0.0 {
            return match prev {
                Some((t0, gp)) => Scan::Bracket(t0, tau, gp, gv),
                None if arc_start => Scan::Immediate,
                None => Scan::Bracket(0.0, tau, g0, gv),
            };
        }
    }
    Scan::Nothing
}

struct ArcEnd {
    t: f64,
    p: Vec2,
    kind: EventKind,
    next: Option<SegmentKind>,
}

fn sliding_vector(z: &PiecewiseSystem, p: Vec2) -> Vec2 {
    let xh = z.xh(p);
    let yh = z.yh(p);
    (z.plus.eval(p) * yh - z.minus.eval(p) * xh) * (1.0 / (yh - xh))
}

/// Where an orbit arriving at `p` on Σ from `from` continues.
fn continue_after_arrival(z: &PiecewiseSystem, p: Vec2, from: SegmentKind) -> (EventKind, SegmentKind) {
    let (xh, yh) = (z.xh(p), z.yh(p));
    match from {
        SegmentKind::SmoothPlus => {
            if yh < 0.0 {
                (EventKind::Crossing, SegmentKind::SmoothMinus)
            } else {
                (EventKind::SlidingEntry, SegmentKind::Sliding)
            }
        }
        SegmentKind::SmoothMinus => {
            if xh > 0.0 {
                (EventKind::Crossing, SegmentKind::SmoothPlus)
            } else {
                (EventKind::SlidingEntry, SegmentKind::Sliding)
            }
        }
        SegmentKind::Sliding => unreachable!("sliding arcs end through exits"),
    }
}

/// Segment kind an orbit takes when started at `p`.
pub fn initial_kind(z: &PiecewiseSystem, p: Vec2) -> SegmentKind {
    let hv = z.h(p);
    if hv > 1e-10 {
        return SegmentKind::SmoothPlus;
    }
    if hv < -1e-10 {
        return SegmentKind::SmoothMinus;
    }
    let cls = SigmaPointClass::from_lie(z.xh(p), z.yh(p));
    match cls.tag {
        SigmaTag::Crossing if cls.lie_x > 0.0 => SegmentKind::SmoothPlus,
        SigmaTag::Crossing => SegmentKind::SmoothMinus,
        SigmaTag::Sliding | SigmaTag::Escaping => SegmentKind::Sliding,
        SigmaTag::Tangency => {
            if cls.lie_x >= -TOL_TANG && cls.lie_y > TOL_TANG && crate::psys::second_lie(&z.plus, &z.switch, p) > 0.0 {
                SegmentKind::SmoothPlus
            } else if cls.lie_y <= TOL_TANG && cls.lie_x < -TOL_TANG {
                SegmentKind::SmoothMinus
            } else if cls.lie_x >= -TOL_TANG {
                SegmentKind::SmoothPlus
            } else {
                SegmentKind::SmoothMinus
            }
        }
    }
}

struct Engine<'a> {
    z: &'a PiecewiseSystem,
    opts: FlowOptions,
    tmax: f64,
}

impl Engine<'_> {
    fn run_smooth(&self, kind: SegmentKind, t0: f64, p0: Vec2, seg: &mut OrbitSegment) -> Result<ArcEnd> {
        let z = self.z;
        let (field, sgn) = match kind {
            SegmentKind::SmoothPlus => (&z.plus, 1.0),
            _ => (&z.minus, -1.0),
        };
        let f = |p: Vec2| field.eval(p);
        let g = |p: Vec2| sgn * z.h(p);
        let win = self.opts.window;
        let gw = |p: Vec2| win.margin(p);
        let mut st = Stepper::new(&f, t0, p0, self.opts.ode);
        st.limit_next_step(self.tmax - t0);
        let mut first = true;
        loop {
            let step = st.step()?;
            let sig = scan_step(&step, &g, g(step.y0), first);
            let win_scan = scan_step(&step, &gw, gw(step.y0), false);
            first = false;
            let sig_hit = match sig {
                Scan::Immediate => {
                    return Ok(ArcEnd {
                        t: step.t0,
                        p: z.switch.project(step.y0),
                        kind: EventKind::Crossing,
                        next: None,
                    })
                }
                Scan::Bracket(lo, hi, glo, ghi) => locate_event(&f, &step, g, lo, hi, glo, ghi, 1e-12),
                Scan::Nothing => None,
            };
            let win_hit = match win_scan {
                Scan::Bracket(lo, hi, glo, ghi) => locate_event(&f, &step, gw, lo, hi, glo, ghi, 1e-12),
                _ => None,
            };
            match (sig_hit, win_hit) {
                (Some((ts, ps)), w) if w.map_or(true, |(tw, _)| ts <= tw) => {
                    let p = z.switch.project(ps);
                    return Ok(ArcEnd {
                        t: step.t0 + ts,
                        p,
                        kind: EventKind::Crossing,
                        next: None,
                    });
                }
                (_, Some((tw, pw))) => {
                    return Ok(ArcEnd {
                        t: step.t0 + tw,
                        p: pw,
                        kind: EventKind::WindowExit,
                        next: None,
                    });
                }
                _ => {}
            }
            if self.opts.record {
                seg.samples.push((step.t1(), step.y1));
            }
            if step.t1() >= self.tmax {
                return Ok(ArcEnd {
                    t: step.t1(),
                    p: step.y1,
                    kind: EventKind::TimeLimit,
                    next: None,
                });
            }
            st.limit_next_step(self.tmax - st.t());
        }
    }

    fn run_sliding(&self, t0: f64, p0: Vec2, seg: &mut OrbitSegment) -> Result<ArcEnd> {
        let z = self.z;
        let p0 = z.switch.project(p0);
        // Σs: Xh < 0 < Yh. Σe: Yh < 0 < Xh. g1 and g2 are positive inside the region.
        let escaping = z.xh(p0) > 0.0 && z.yh(p0) < 0.0;
        let s = if escaping { -1.0 } else { 1.0 };
        let g1 = |p: Vec2| -s * z.xh(p);
        let g2 = |p: Vec2| s * z.yh(p);
        // Where each exit leads.
        let (exit1, exit2) = if escaping {
            (SegmentKind::SmoothMinus, SegmentKind::SmoothPlus)
        } else {
            (SegmentKind::SmoothPlus, SegmentKind::SmoothMinus)
        };
        let win = self.opts.window;
        let gw = |p: Vec2| win.margin(p);
        let f = |p: Vec2| sliding_vector(z, p);
        let mut st = Stepper::new(&f, t0, p0, self.opts.ode);
        st.limit_next_step(self.tmax - t0);
        let mut first = true;
        loop {
            let step = st.step()?;
            let scans = [
                scan_step(&step, &g1, g1(step.y0), first),
                scan_step(&step, &g2, g2(step.y0), first),
                scan_step(&step, &gw, gw(step.y0), false),
            ];
            first = false;
            let mut best: Option<(f64, Vec2, usize)> = None;
            for (i, sc) in scans.into_iter().enumerate() {
                let hit = match sc {
                    Scan::Immediate => Some((0.0, step.y0)),
                    Scan::Bracket(lo, hi, glo, ghi) => match i {
                        0 => locate_event(&f, &step, g1, lo, hi, glo, ghi, 1e-12),
                        1 => locate_event(&f, &step, g2, lo, hi, glo, ghi, 1e-12),
                        _ => locate_event(&f, &step, gw, lo, hi, glo, ghi, 1e-12),
                    },
                    Scan::Nothing => None,
                };
                if let Some((tau, p)) = hit {
                    if best.map_or(true, |(tb, _, _)| tau < tb) {
                        best = Some((tau, p, i));
                    }
                }
            }
            if let Some((tau, p, i)) = best {
                let p = z.switch.project(p);
                let (kind, next) = match i {
                    0 => (EventKind::TangencyExit, Some(exit1)),
                    1 => (EventKind::TangencyExit, Some(exit2)),
                    _ => (EventKind::WindowExit, None),
                };
                return Ok(ArcEnd {
                    t: step.t0 + tau,
                    p,
                    kind,
                    next,
                });
            }
            let y1 = z.switch.project(step.y1);
            st.reset_state(y1);
            if self.opts.record {
                seg.samples.push((step.t1(), y1));
            }
            if step.t1() >= self.tmax {
                return Ok(ArcEnd {
                    t: step.t1(),
                    p: y1,
                    kind: EventKind::TimeLimit,
                    next: None,
                });
            }
            st.limit_next_step(self.tmax - st.t());
        }
    }
}

/// Integrate `Z` from `p0` for time `|tmax|` inside `window`; negative `tmax` integrates
/// backward (negated fields).
pub fn integrate(z: &PiecewiseSystem, p0: Vec2, tmax: f64, window: Rect) -> Result<Orbit> {
    let opts = FlowOptions::new(window);
    if tmax < 0.0 {
        let r = z.reversed();
        let mut o = integrate_with(&r, p0, None, -tmax, opts, |_| Control::Continue)?;
        o.backward = true;
        return Ok(o);
    }
    integrate_with(z, p0, None, tmax, opts, |_| Control::Continue)
}

/// Full-control integration: optional starting kind and an event callback that sees every
/// junction on Σ and may stop the orbit there.
pub fn integrate_with<C>(
    z: &PiecewiseSystem,
    p0: Vec2,
    start: Option<SegmentKind>,
    tmax: f64,
    opts: FlowOptions,
    mut on_event: C,
) -> Result<Orbit>
where
    C: FnMut(&Event) -> Control,
{
    if !p0.is_finite() {
        return Err(Error::DomainError(format!("initial point {p0:?} is not finite")));
    }
    let engine = Engine { z, opts, tmax };
    let mut kind = start.unwrap_or_else(|| initial_kind(z, p0));
    let mut p = if kind == SegmentKind::Sliding { z.switch.project(p0) } else { p0 };
    let mut t = 0.0;
    let mut entry = EventKind::None;
    let mut segments = Vec::new();
    let mut immediate_run = 0usize;

    if opts.window.margin(p) < 0.0 {
        segments.push(OrbitSegment {
            kind,
            t0: 0.0,
            t1: 0.0,
            samples: vec![(0.0, p)],
            entry_event: EventKind::None,
            exit_event: EventKind::WindowExit,
        });
        return Ok(Orbit {
            segments,
            termination: Termination::WindowExit,
            backward: false,
        });
    }

    for _ in 0..opts.max_events {
        let mut seg = OrbitSegment {
            kind,
            t0: t,
            t1: t,
            samples: vec![(t, p)],
            entry_event: entry,
            exit_event: EventKind::None,
        };
        let end = match kind {
            SegmentKind::Sliding => engine.run_sliding(t, p, &mut seg)?,
            _ => engine.run_smooth(kind, t, p, &mut seg)?,
        };
        if end.t == t {
            immediate_run += 1;
            if immediate_run > 4 {
                return Err(Error::EventAmbiguity(t));
            }
        } else {
            immediate_run = 0;
        }
        seg.t1 = end.t;
        if seg.samples.last().map_or(true, |&(ts, _)| ts != end.t) || end.kind != EventKind::TimeLimit {
            if seg.samples.last().map(|s| s.0) == Some(end.t) {
                seg.samples.pop();
            }
            seg.samples.push((end.t, end.p));
        }
        let (ev_kind, next) = match (end.kind, kind) {
            (EventKind::Crossing, from) => {
                let (k, n) = continue_after_arrival(z, end.p, from);
                (k, Some(n))
            }
            (EventKind::TangencyExit, _) => (EventKind::TangencyExit, end.next),
            (other, _) => (other, None),
        };
        seg.exit_event = ev_kind;
        let from = kind;
        segments.push(seg);
        t = end.t;
        p = end.p;
        match next {
            None => {
                let termination = match ev_kind {
                    EventKind::WindowExit => Termination::WindowExit,
                    _ => Termination::TimeLimit,
                };
                return Ok(Orbit {
                    segments,
                    termination,
                    backward: false,
                });
            }
            Some(n) => {
                let ev = Event {
                    kind: ev_kind,
                    t,
                    point: p,
                    from,
                    to: n,
                    class: SigmaPointClass::from_lie(z.xh(p), z.yh(p)),
                };
                if on_event(&ev) == Control::Stop {
                    return Ok(Orbit {
                        segments,
                        termination: Termination::Stopped,
                        backward: false,
                    });
                }
                kind = n;
                entry = ev_kind;
                if t >= tmax {
                    return Ok(Orbit {
                        segments,
                        termination: Termination::TimeLimit,
                        backward: false,
                    });
                }
            }
        }
    }
    Ok(Orbit {
        segments,
        termination: Termination::EventLimit,
        backward: false,
    })
}

/// A crossing of a scalar event surface by a smooth orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub t: f64,
    pub point: Vec2,
    /// `g` goes from positive to negative.
    pub downward: bool,
}

/// Integrate a single smooth field and collect up to `max_hits` sign changes of `g`,
/// stopping at the window boundary or `tmax`.
pub fn smooth_hits<G: Fn(Vec2) -> f64>(
    f: &SmoothField,
    p0: Vec2,
    tmax: f64,
    window: Rect,
    g: G,
    max_hits: usize,
) -> Result<Vec<SurfaceHit>> {
    let fe = |p: Vec2| f.eval(p);
    let mut st = Stepper::new(&fe, 0.0, p0, OdeOptions::default());
    st.limit_next_step(tmax);
    let mut out = Vec::new();
    let neg = |p: Vec2| -g(p);
    loop {
        let step = st.step()?;
        let g0 = g(step.y0);
        // Search from whichever side the step starts on; a zero start looks both ways.
        let mut hit: Option<(f64, Vec2, bool)> = None;
        if g0 >= 0.0 {
            if let Scan::Bracket(lo, hi, glo, ghi) = scan_step(&step, &g, g0, false) {
                if glo > 0.0 {
                    hit = locate_event(&fe, &step, &g, lo, hi, glo, ghi, 1e-13).map(|(t, p)| (t, p, true));
                }
            }
        }
        if g0 <= 0.0 {
            if let Scan::Bracket(lo, hi, glo, ghi) = scan_step(&step, &neg, -g0, false) {
                if glo > 0.0 {
                    let h = locate_event(&fe, &step, &neg, lo, hi, glo, ghi, 1e-13).map(|(t, p)| (t, p, false));
                    if hit.map_or(true, |(t, _, _)| h.map_or(false, |(th, _, _)| th < t)) {
                        hit = h.or(hit);
                    }
                }
            }
        }
        if let Some((tau, p, down)) = hit {
            out.push(SurfaceHit {
                t: step.t0 + tau,
                point: p,
                downward: down,
            });
            if out.len() >= max_hits {
                return Ok(out);
            }
            // Restart just past the hit so the same root is not found twice.
            st = Stepper::new(&fe, step.t0 + tau, p, OdeOptions::default());
            let nudge = crate::ode::single_step(&fe, p, 1e-9);
            st.reset_state(nudge);
            st.limit_next_step(tmax - st.t());
            continue;
        }
        if window.margin(step.y1) < 0.0 || step.t1() >= tmax {
            return Ok(out);
        }
        st.limit_next_step(tmax - st.t());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleData {
    pub location: Vec2,
    /// `(λ1, λ2)` with `λ2 < 0 < λ1`.
    pub eigvals: (f64, f64),
    /// Unit eigenvectors `(unstable, stable)`.
    pub eigvecs: (Vec2, Vec2),
    pub ratio: f64,
}

/// Newton iteration for an equilibrium of `f`, then eigen-decomposition.
pub fn find_saddle(f: &SmoothField, guess: Vec2) -> Result<SaddleData> {
    let mut p = guess;
    let mut converged = false;
    for _ in 0..50 {
        let v = f.eval(p);
        let j = f.jacobian(p);
        let Some(d) = j.solve(v) else {
            return Err(Error::NoConvergence(format!("singular Jacobian at {p:?}")));
        };
        p = p - d;
        if !p.is_finite() {
            break;
        }
        if d.norm() <= 1e-12 * (1.0 + p.norm()) {
            converged = true;
            break;
        }
    }
    if !converged || f.eval(p).norm() > 1e-9 {
        return Err(Error::NoConvergence(format!("saddle search from {guess:?}")));
    }
    let j = f.jacobian(p);
    let det = j.det();
    if det >= 0.0 {
        return Err(Error::NotASaddle(p, det));
    }
    let [(l2, vs), (l1, vu)] = j.real_eigen().expect("negative determinant has real spectrum");
    Ok(SaddleData {
        location: p,
        eigvals: (l1, l2),
        eigvecs: (vu, vs),
        ratio: -l2 / l1,
    })
}

/// Saddle of the plus field, seeded from the system's hint.
pub fn plus_saddle(z: &PiecewiseSystem) -> Result<SaddleData> {
    find_saddle(&z.plus, z.saddle_hint)
}

/// `h(S)` rounded to zero below 1e-12.
pub fn saddle_height(z: &PiecewiseSystem, s: &SaddleData) -> f64 {
    let b = z.h(s.location);
    if b.abs() <= 1e-12 {
        0.0
    } else {
        b
    }
}

/// Intersections of the plus field's saddle separatrices with Σ, in chart values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldIntersections {
    /// Unstable manifold near the saddle.
    pub p1: Option<f64>,
    /// Stable manifold near the saddle.
    pub p2: Option<f64>,
    /// Far landing of the unstable branch that enters Σ+ (the homoclinic loop point).
    pub p3: Option<f64>,
    /// Remaining crossing of the other unstable branch.
    pub x4: Option<f64>,
    /// Unit vector of the unstable branch pointing into Σ+.
    pub away_dir: Vec2,
}

pub const MANIFOLD_SEED: f64 = 1e-6;
const MANIFOLD_TMAX: f64 = 200.0;

pub fn manifold_intersections(z: &PiecewiseSystem, s: &SaddleData, window: Rect) -> Result<ManifoldIntersections> {
    manifold_intersections_seeded(z, s, window, MANIFOLD_SEED)
}

pub fn manifold_intersections_seeded(
    z: &PiecewiseSystem,
    s: &SaddleData,
    window: Rect,
    seed: f64,
) -> Result<ManifoldIntersections> {
    let so = s.location;
    let gh = z.grad_h(so);
    let (vu, vs) = s.eigvecs;
    let away = if gh.dot(vu) >= 0.0 { vu } else { -vu };
    let hfun = |p: Vec2| z.h(p);
    let back = z.plus.negated();
    let br = |f: &SmoothField, d: Vec2| smooth_hits(f, so + d * seed, MANIFOLD_TMAX, window, hfun, 3);
    let ua = br(&z.plus, away)?;
    let uo = br(&z.plus, -away)?;
    let sa = br(&back, vs)?;
    let sb = br(&back, -vs)?;
    let chart = |h: &SurfaceHit| z.chart_of(h.point);
    let beta = saddle_height(z, s);
    let s_chart = z.chart_of(so);
    let nearest = |c: &[Option<f64>]| {
        c.iter()
            .flatten()
            .copied()
            .min_by(|a, b| (a - s_chart).abs().total_cmp(&(b - s_chart).abs()))
    };
    let p3 = ua.iter().find(|h| h.downward).map(chart);
    let (p1, p2, x4) = if beta == 0.0 {
        (Some(s_chart), Some(s_chart), uo.first().map(chart))
    } else if beta > 0.0 {
        (
            uo.first().map(chart),
            nearest(&[sa.first().map(chart), sb.first().map(chart)]),
            uo.get(1).map(chart),
        )
    } else {
        (
            ua.first().filter(|h| !h.downward).map(chart),
            nearest(&[sa.first().map(chart), sb.first().map(chart)]),
            uo.first().map(chart),
        )
    };
    Ok(ManifoldIntersections {
        p1,
        p2,
        p3,
        x4,
        away_dir: away,
    })
}

/// Root of `Xh` along Σ nearest to `guess_chart`.
pub fn fold_point_near(z: &PiecewiseSystem, guess_chart: f64) -> Result<f64> {
    let g = |u: f64| z.xh(z.param(u));
    for r in [0.05, 0.2, 0.5, 1.0, 2.0, 4.0] {
        let br = scan_brackets(g, guess_chart - r, guess_chart + r, 400);
        let best = br
            .into_iter()
            .min_by(|a, b| ((a.0 + a.1) / 2.0 - guess_chart).abs().total_cmp(&((b.0 + b.1) / 2.0 - guess_chart).abs()));
        if let Some((a, b)) = best {
            if a == b {
                return Ok(a);
            }
            if let Some(u) = brent(g, a, b, g(a), g(b), 1e-14, 0.0, 200) {
                return Ok(u);
            }
        }
    }
    Err(Error::NoFold(guess_chart))
}

/// Chart value where the branch of `det[X|Y] = 0` through the saddle meets Σ.
///
/// Tracing the branch (rather than scanning Σ for parallelism) picks the right root when
/// `det[X|Y]` has other zeros on Σ.
pub fn pe_point(z: &PiecewiseSystem, s: &SaddleData) -> Result<Option<f64>> {
    let beta = saddle_height(z, s);
    if beta == 0.0 {
        return Ok(Some(z.chart_of(s.location)));
    }
    let det = |p: Vec2| z.det_xy(p);
    let grad = |p: Vec2| {
        let e = 1e-7 * (1.0 + p.norm());
        Vec2::new(
            (det(p + Vec2::new(e, 0.0)) - det(p - Vec2::new(e, 0.0))) / (2.0 * e),
            (det(p + Vec2::new(0.0, e)) - det(p - Vec2::new(0.0, e))) / (2.0 * e),
        )
    };
    let mut p = s.location;
    let g0 = grad(p);
    if g0.norm() == 0.0 {
        return Err(Error::DegenerateConfiguration("det[X|Y] is singular at the saddle".into()));
    }
    let mut tan = Vec2::new(-g0.y, g0.x).normalized();
    if z.grad_h(p).dot(tan) * beta > 0.0 {
        tan = -tan;
    }
    let ds = 2e-3;
    let sign0 = beta.signum();
    for _ in 0..20_000 {
        let mut q = p + tan * ds;
        for _ in 0..4 {
            let gq = grad(q);
            q = q - gq * (det(q) / gq.dot(gq));
        }
        if !z.window.contains(q) {
            return Ok(None);
        }
        if z.h(q).signum() != sign0 {
            // Newton on (det, h) = (0, 0) from the midpoint.
            let mut r = (p + q) * 0.5;
            for _ in 0..30 {
                let gd = grad(r);
                let gh = z.grad_h(r);
                let m = crate::geom::Mat2::new(gd.x, gd.y, gh.x, gh.y);
                let Some(d) = m.solve(Vec2::new(det(r), z.h(r))) else { break };
                r = r - d;
                if d.norm() < 1e-15 * (1.0 + r.norm()) {
                    break;
                }
            }
            return Ok(Some(z.chart_of(r)));
        }
        let gq = grad(q);
        let mut nt = Vec2::new(-gq.y, gq.x).normalized();
        if nt.dot(tan) < 0.0 {
            nt = -nt;
        }
        tan = nt;
        p = q;
    }
    Ok(None)
}
