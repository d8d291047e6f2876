//! Model specs from the command line: built-in calls, region fixtures, model files and
//! two-parameter family templates.

use std::path::Path;

use filippov_core::bifurc::Family;
use filippov_core::models::{self, pendulum_region_fixture_by_label};
use filippov_core::PiecewiseSystem;

use crate::Failure;

/// `poly(...)`, `pendulum(...)`, `fixture(R2)`, or a path to a model file.
pub fn load(spec: &str) -> Result<PiecewiseSystem, Failure> {
    let s = spec.trim();
    if let Some(label) = s.strip_prefix("fixture(").and_then(|r| r.strip_suffix(')')) {
        let f = pendulum_region_fixture_by_label(label.trim()).map_err(Failure::config)?;
        return Ok(models::pendulum_model(f.params));
    }
    if Path::new(s).is_file() {
        let text = std::fs::read_to_string(s).map_err(|e| Failure::Config(format!("{s}: {e}")))?;
        return models::load_model(&text).map_err(Failure::config);
    }
    models::load_model(s).map_err(Failure::config)
}

/// One axis of a parameter grid: `name=lo:hi:n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => vec![],
            1 => vec![self.lo],
            n => (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

pub fn parse_grid(spec: &str) -> Result<[Axis; 2], Failure> {
    let axes: Vec<Axis> = spec.split(',').map(parse_axis).collect::<Result<_, _>>()?;
    match <[Axis; 2]>::try_from(axes) {
        Ok(a) if a[0].name != a[1].name => Ok(a),
        Ok(_) => Err(Failure::Config(format!("grid `{spec}` names the same parameter twice"))),
        Err(v) => Err(Failure::Config(format!("grid `{spec}` needs exactly two axes, got {}", v.len()))),
    }
}

fn parse_axis(s: &str) -> Result<Axis, Failure> {
    let bad = || Failure::Config(format!("grid axis `{s}`: expected name=lo:hi:n"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').map(str::trim).collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    let name = name.trim();
    if name.is_empty() || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    Ok(Axis {
        name: name.to_string(),
        lo,
        hi,
        n,
    })
}

/// A family from a built-in call whose free arguments are the grid names, e.g.
/// `poly(3,-1,d,m)` with axes `m` and `d`.
pub fn family(template: &str, axes: &[Axis; 2]) -> Result<Family, Failure> {
    let t = template.trim();
    let open = t.find('(').ok_or_else(|| Failure::Config(format!("`{t}`: expected name(args)")))?;
    let (name, rest) = t.split_at(open);
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Failure::Config(format!("`{t}`: unbalanced parentheses")))?;
    let args: Vec<String> = inner.split(',').map(|a| a.trim().to_string()).collect();
    for ax in axes {
        if args.iter().filter(|a| **a == ax.name).count() != 1 {
            return Err(Failure::Config(format!(
                "`{t}`: grid parameter `{}` must appear exactly once",
                ax.name
            )));
        }
    }
    let name = name.trim().to_string();
    let (n0, n1) = (axes[0].name.clone(), axes[1].name.clone());
    let instantiate = move |u: f64, v: f64| {
        let vals: Vec<String> = args
            .iter()
            .map(|a| {
                if *a == n0 {
                    u.to_string()
                } else if *a == n1 {
                    v.to_string()
                } else {
                    a.clone()
                }
            })
            .collect();
        format!("{name}({})", vals.join(","))
    };
    // Validate once so a bad template is a config error, not a panic in a worker.
    models::parse_builtin(&instantiate(axes[0].lo, axes[1].lo)).map_err(Failure::config)?;
    let label = t.to_string();
    Ok(Family::new(label, [&axes[0].name, &axes[1].name], move |u, v| {
        models::parse_builtin(&instantiate(u, v))
            .expect("template validated")
            .system()
    }))
}
