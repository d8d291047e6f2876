//! CSV, JSON and SVG emission.
//!
//! Numbers in CSV and JSON use the shortest representation that round-trips; SVG
//! coordinates are fixed to three decimals in view units. Nothing here depends on
//! thread scheduling or the clock, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use filippov_core::flow::{EventKind, Orbit};
use filippov_core::retmap::{LandingOutcome, ReturnMap};
use filippov_core::{PiecewiseSystem, SegmentKind, Vec2};
use serde::Serialize;

use crate::Failure;

pub const SCHEMA: &str = "filippov-lab/v1";

/// Write to `path`, or standard output for `None` / `-`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::write(p, bytes).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
        }
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| Failure::Config(format!("stdout: {e}")))
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `t,x,y,segment_kind,event`. Junction points appear once, tagged with the event that
/// ended the previous segment; the first and last rows carry the start and final event.
pub fn orbit_csv(orbit: &Orbit) -> Vec<u8> {
    let mut rows = Vec::new();
    for (k, seg) in orbit.segments.iter().enumerate() {
        let n = seg.samples.len();
        for (i, &(t, p)) in seg.samples.iter().enumerate() {
            if k > 0 && i == 0 {
                continue;
            }
            let ev = if i + 1 == n && seg.exit_event != EventKind::None {
                seg.exit_event.as_str()
            } else if k == 0 && i == 0 {
                "start"
            } else {
                ""
            };
            rows.push(vec![t.to_string(), p.x.to_string(), p.y.to_string(), seg.kind.as_str().into(), ev.into()]);
        }
    }
    csv_bytes(&["t", "x", "y", "segment_kind", "event"], rows)
}

pub fn outcome_str(o: Option<LandingOutcome>) -> &'static str {
    match o {
        Some(LandingOutcome::Return) => "return",
        Some(LandingOutcome::Sliding) => "sliding",
        None => "no_return",
    }
}

/// `x,pi_x,outcome`; undefined values are written as empty fields.
pub fn return_map_csv(map: &ReturnMap) -> Vec<u8> {
    let rows = map.samples.iter().map(|s| {
        let pi = if s.pi.is_finite() { s.pi.to_string() } else { String::new() };
        vec![s.x.to_string(), pi, outcome_str(s.outcome).to_string()]
    });
    csv_bytes(&["x", "pi_x", "outcome"], rows)
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 32.0;

/// Affine map from a data box onto the drawing area, `y` pointing up.
struct View {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl View {
    fn fit(points: impl Iterator<Item = Vec2>) -> View {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points.filter(|p| p.is_finite()) {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        if !x0.is_finite() {
            return View { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        }
        let mx = 0.05 * (x1 - x0).max(1e-9);
        let my = 0.05 * (y1 - y0).max(1e-9);
        View {
            x0: x0 - mx,
            x1: x1 + mx,
            y0: y0 - my,
            y1: y1 + my,
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        let sx = PAD + (p.x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD);
        let sy = H - PAD - (p.y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD);
        (sx, sy)
    }

    fn polyline(&self, pts: &[Vec2], style: &str) -> String {
        let mut s = String::from("<polyline points=\"");
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.3},{y:.3}");
        }
        let _ = write!(s, "\" {style}/>");
        s
    }
}

fn svg_doc(title: &str, body: &[String]) -> Vec<u8> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "<title>{}</title>", xml_escape(title));
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    for line in body {
        s.push_str(line);
        s.push('\n');
    }
    s.push_str("</svg>\n");
    s.into_bytes()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn style(kind: SegmentKind) -> &'static str {
    match kind {
        SegmentKind::SmoothPlus => "fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.2\"",
        SegmentKind::SmoothMinus => "fill=\"none\" stroke=\"#2a8a3a\" stroke-width=\"1.2\"",
        SegmentKind::Sliding => "fill=\"none\" stroke=\"#c0392b\" stroke-width=\"3\"",
    }
}

/// Phase portrait: Σ in grey, arcs in Σ+ blue, in Σ− green, sliding arcs thick red.
pub fn phase_portrait_svg(z: &PiecewiseSystem, orbit: &Orbit) -> Vec<u8> {
    let view = View::fit(orbit.segments.iter().flat_map(|s| s.samples.iter().map(|&(_, p)| p)));
    let mut body = Vec::new();
    // Σ is a graph over the chart coordinate; sample it across the view and break the
    // line wherever the chart solve fails or leaves the box.
    let mut run: Vec<Vec2> = Vec::new();
    let n = 400;
    for i in 0..=n {
        let x = view.x0 + (view.x1 - view.x0) * i as f64 / n as f64;
        let p = z.param(z.chart_of(Vec2::new(x, 0.0)));
        if p.is_finite() && p.y >= view.y0 && p.y <= view.y1 {
            run.push(p);
        } else if !run.is_empty() {
            body.push(view.polyline(&run, "fill=\"none\" stroke=\"#888\" stroke-dasharray=\"4 3\""));
            run.clear();
        }
    }
    if run.len() > 1 {
        body.push(view.polyline(&run, "fill=\"none\" stroke=\"#888\" stroke-dasharray=\"4 3\""));
    }
    for seg in &orbit.segments {
        let pts: Vec<Vec2> = seg.samples.iter().map(|&(_, p)| p).collect();
        if pts.len() > 1 {
            body.push(view.polyline(&pts, style(seg.kind)));
        }
    }
    let (sx, sy) = view.map(orbit.start());
    body.push(format!("<circle cx=\"{sx:.3}\" cy=\"{sy:.3}\" r=\"3\" fill=\"black\"/>"));
    svg_doc(&z.name, &body)
}

/// Graph of π with the identity line; sliding landings drawn as red dots.
pub fn return_map_svg(title: &str, map: &ReturnMap) -> Vec<u8> {
    let pts: Vec<Vec2> = map.samples.iter().filter(|s| s.pi.is_finite()).map(|s| Vec2::new(s.x, s.pi)).collect();
    let view = View::fit(pts.iter().copied());
    let lo = view.x0.max(view.y0);
    let hi = view.x1.min(view.y1);
    let mut body = Vec::new();
    if lo < hi {
        body.push(view.polyline(
            &[Vec2::new(lo, lo), Vec2::new(hi, hi)],
            "fill=\"none\" stroke=\"#888\" stroke-dasharray=\"4 3\"",
        ));
    }
    let returns: Vec<Vec2> = map
        .samples
        .iter()
        .filter(|s| s.outcome == Some(LandingOutcome::Return))
        .map(|s| Vec2::new(s.x, s.pi))
        .collect();
    if returns.len() > 1 {
        body.push(view.polyline(&returns, "fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\""));
    }
    for s in map.samples.iter().filter(|s| s.outcome == Some(LandingOutcome::Sliding)) {
        let (x, y) = view.map(Vec2::new(s.x, s.pi));
        body.push(format!("<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"2\" fill=\"#c0392b\"/>"));
    }
    svg_doc(title, &body)
}
