//! Key-value model files.
//!
//! ```text
//! # damped pendulum with a switched driving term
//! const.a1 = -0.1
//! const.a2 = -0.77
//! plus.x  = y
//! plus.y  = a1*y - sin(x)
//! minus.x = y
//! minus.y = a1*y - sin(x) + a2*(x + pi/2)
//! h       = y + 0.1*(x + pi) - 0.1
//! saddle  = -3.14159, 0        # optional Newton guess
//! window  = -8, 2, -4, 4       # optional xmin, xmax, ymin, ymax
//! orientation = 1              # optional chart direction, ±1
//! ```
//!
//! Instead of the five expressions a file may name a built-in family with
//! `model = poly(3, -1, 1, 0)`. Constants may refer to constants defined above them.
//! Unknown keys and duplicate keys are errors.

use std::collections::HashMap;
use std::sync::Arc;

use super::expr::Expr;
use super::{PiecewiseSystem, SigmaChart, SmoothField, SwitchingFunction};
use crate::error::{Error, Result};
use crate::geom::{Mat2, Rect, Vec2};

#[derive(Debug, Clone)]
pub struct ModelFile {
    /// Built-in family call, e.g. `pendulum(-0.1,-0.77,0.1,0.1)`.
    pub builtin: Option<String>,
    pub system: Option<PiecewiseSystem>,
    pub saddle: Option<Vec2>,
    pub window: Option<Rect>,
    pub orientation: Option<f64>,
}

const FIELD_KEYS: [&str; 5] = ["plus.x", "plus.y", "minus.x", "minus.y", "h"];

fn numbers(key: &str, v: &str, n: usize, consts: &HashMap<String, f64>) -> Result<Vec<f64>> {
    let out: Result<Vec<f64>> = v
        .split(',')
        .map(|s| {
            let e = Expr::parse_with(s.trim(), consts).map_err(|e| Error::Parse(format!("{key}: {e}")))?;
            Ok(e.eval(0.0, 0.0))
        })
        .collect();
    let out = out?;
    if out.len() != n {
        return Err(Error::Parse(format!("{key}: expected {n} comma-separated values, got {}", out.len())));
    }
    Ok(out)
}

fn field_from(ex: Expr, ey: Expr) -> SmoothField {
    let j = [ex.diff(0), ex.diff(1), ey.diff(0), ey.diff(1)];
    let (ex, ey) = (Arc::new(ex), Arc::new(ey));
    SmoothField::with_jacobian(
        move |p| Vec2::new(ex.eval(p.x, p.y), ey.eval(p.x, p.y)),
        move |p| Mat2::new(j[0].eval(p.x, p.y), j[1].eval(p.x, p.y), j[2].eval(p.x, p.y), j[3].eval(p.x, p.y)),
    )
}

fn switch_from(eh: Expr) -> SwitchingFunction {
    let gx = eh.diff(0);
    let gy = eh.diff(1);
    let hs = [gx.diff(0), gx.diff(1), gy.diff(1)];
    let eh = Arc::new(eh);
    SwitchingFunction::with_derivatives(
        move |p| eh.eval(p.x, p.y),
        move |p| Vec2::new(gx.eval(p.x, p.y), gy.eval(p.x, p.y)),
        move |p| {
            let b = hs[1].eval(p.x, p.y);
            Mat2::new(hs[0].eval(p.x, p.y), b, b, hs[2].eval(p.x, p.y))
        },
    )
}

pub fn parse(text: &str) -> Result<ModelFile> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", ln + 1)))?;
        let k = k.trim().to_string();
        if entries.iter().any(|(_, e, _)| *e == k) {
            return Err(Error::Parse(format!("line {}: duplicate key `{k}`", ln + 1)));
        }
        entries.push((ln + 1, k, v.trim().to_string()));
    }

    let mut consts = HashMap::new();
    for (ln, k, v) in &entries {
        if let Some(name) = k.strip_prefix("const.") {
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(Error::Parse(format!("line {ln}: bad constant name `{name}`")));
            }
            let e = Expr::parse_with(v, &consts).map_err(|e| Error::Parse(format!("line {ln}: {e}")))?;
            consts.insert(name.to_string(), e.eval(0.0, 0.0));
        }
    }

    let mut mf = ModelFile {
        builtin: None,
        system: None,
        saddle: None,
        window: None,
        orientation: None,
    };
    let mut exprs: HashMap<&str, Expr> = HashMap::new();
    for (ln, k, v) in &entries {
        match k.as_str() {
            k if k.starts_with("const.") => {}
            "model" => mf.builtin = Some(v.clone()),
            "saddle" => {
                let n = numbers(k, v, 2, &consts)?;
                mf.saddle = Some(Vec2::new(n[0], n[1]));
            }
            "window" => {
                let n = numbers(k, v, 4, &consts)?;
                if !(n[0] < n[1] && n[2] < n[3]) {
                    return Err(Error::Parse(format!("line {ln}: window must satisfy xmin<xmax, ymin<ymax")));
                }
                mf.window = Some(Rect::new(n[0], n[1], n[2], n[3]));
            }
            "orientation" => {
                let o = numbers(k, v, 1, &consts)?[0];
                if o != 1.0 && o != -1.0 {
                    return Err(Error::Parse(format!("line {ln}: orientation must be 1 or -1")));
                }
                mf.orientation = Some(o);
            }
            key => {
                let Some(fk) = FIELD_KEYS.iter().find(|f| **f == key) else {
                    return Err(Error::Parse(format!("line {ln}: unknown key `{key}`")));
                };
                let e = Expr::parse_with(v, &consts).map_err(|e| Error::Parse(format!("line {ln}: {e}")))?;
                exprs.insert(fk, e);
            }
        }
    }

    match (mf.builtin.is_some(), exprs.len()) {
        (true, 0) => Ok(mf),
        (true, _) => Err(Error::Parse("`model` cannot be combined with field expressions".into())),
        (false, 5) => {
            let mut take = |k: &str| exprs.remove(k).expect("all keys present");
            let plus = field_from(take("plus.x"), take("plus.y"));
            let minus = field_from(take("minus.x"), take("minus.y"));
            let switch = switch_from(take("h"));
            let mut sys = PiecewiseSystem::new(plus, minus, switch).with_name("file");
            if let Some(s) = mf.saddle {
                sys.saddle_hint = s;
                sys.chart.y_guess = s.y;
            }
            if let Some(w) = mf.window {
                sys.window = w;
            }
            if let Some(o) = mf.orientation {
                sys.chart = SigmaChart {
                    orientation: o,
                    ..sys.chart
                };
            }
            mf.system = Some(sys);
            Ok(mf)
        }
        (false, _) => {
            let missing: Vec<&str> = FIELD_KEYS.iter().copied().filter(|k| !exprs.contains_key(k)).collect();
            Err(Error::Parse(format!("missing keys: {}", missing.join(", "))))
        }
    }
}
