//! `filippov-lab`: simulate planar Filippov systems, sample first-return maps,
//! classify degenerate cycles and scan two-parameter families.

mod fixtures;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use filippov_core::bifurc::{self, ClassifyOptions, CurveLabel};
use filippov_core::retmap::{self, FixedPoint, ProbeResult, ReturnOptions};
use filippov_core::{flow, Vec2};
use serde_json::json;

use crate::output::SCHEMA;

/// Absolute error level of integrated return-map values.
const PI_NOISE: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Fixtures(String),
    #[error("{0}")]
    PartialSweep(String),
}

impl Failure {
    pub fn config(e: filippov_core::Error) -> Failure {
        Failure::Config(e.to_string())
    }

    fn numerical(e: filippov_core::Error) -> Failure {
        Failure::Numerical(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Fixtures(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::PartialSweep(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "filippov-lab", version, about = "Planar Filippov systems: orbits, return maps, bifurcations")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one orbit and write it as CSV (t,x,y,segment_kind,event).
    Simulate(SimulateArgs),
    /// Sample the first-return map on [a_Z, a_Z + δ) and write x,pi_x,outcome.
    ReturnMap(ReturnMapArgs),
    /// α, β, BS/DSC case, landing order and detected cycles as JSON.
    Classify(ClassifyArgs),
    /// Region signatures over a parameter grid, plus traced connection curves.
    Bifurcate(BifurcateArgs),
    /// Pendulum region fixtures and closed-form oracles.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct ModelArg {
    /// `poly(r,k,d,m)`, `pendulum(a1,a2,a3,a4)`, `fixture(R2)` or a model file path.
    #[arg(long)]
    model: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Initial point `x,y`, or a chart value on Σ with --on-sigma.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Start on Σ at chart value --x0 and stop at the first return.
    #[arg(long)]
    on_sigma: bool,
    #[arg(long, default_value_t = 40.0)]
    tmax: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ReturnMapArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 256)]
    samples: usize,
    /// Space samples geometrically toward a_Z, down to δ·2^-20.
    #[arg(long)]
    geometric: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BifurcateArgs {
    /// Built-in call whose free arguments are the grid names, e.g. `poly(3,-1,d,m)`.
    #[arg(long)]
    model: String,
    /// Two axes `name=lo:hi:n`, first one swept by the curve tracer.
    #[arg(long)]
    grid: String,
    /// Comma-separated curve labels among F, P1, PE, PE_tilde.
    #[arg(long)]
    curves: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixturesArgs {
    /// Override the tolerance on return-map values.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Run one region fixture or oracle group.
    #[arg(long)]
    only: Option<String>,
    /// Also write the table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        eprintln!("filippov-lab: {f}");
        return ExitCode::from(f.code());
    }
    let res = match cli.cmd {
        Command::Simulate(a) => simulate(a),
        Command::ReturnMap(a) => return_map(a),
        Command::Classify(a) => classify(a),
        Command::Bifurcate(a) => bifurcate(a),
        Command::Fixtures(a) => run_fixtures(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("filippov-lab: {f}");
            ExitCode::from(f.code())
        }
    }
}

/// `FILIPPOV_THREADS` caps the worker pool.
fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("FILIPPOV_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("FILIPPOV_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn parse_x0(s: &str, on_sigma: bool) -> Result<Vec<f64>, Failure> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Config(format!("--x0 `{s}`: expected numbers")))?;
    let want = if on_sigma { 1 } else { 2 };
    if vals.len() != want || vals.iter().any(|v| !v.is_finite()) {
        let what = if on_sigma { "one chart value" } else { "a pair x,y" };
        return Err(Failure::Config(format!("--x0 `{s}`: expected {what}")));
    }
    Ok(vals)
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let z = model::load(&a.model.model)?;
    let x0 = parse_x0(&a.x0, a.on_sigma)?;
    if !(a.tmax > 0.0) {
        return Err(Failure::Config("--tmax must be positive".into()));
    }
    let orbit = if a.on_sigma {
        let p0 = z.param(x0[0]);
        if !p0.is_finite() {
            return Err(Failure::Config(format!("chart value {} has no point on Σ", x0[0])));
        }
        let opts = ReturnOptions {
            tmax: a.tmax,
            ..ReturnOptions::default()
        };
        let (landing, orbit) = retmap::first_return_orbit(&z, p0, opts).map_err(Failure::numerical)?;
        eprintln!(
            "first return: chart {} ({}) at t = {}",
            landing.chart,
            output::outcome_str(Some(landing.outcome)),
            landing.time
        );
        orbit
    } else {
        flow::integrate(&z, Vec2::new(x0[0], x0[1]), a.tmax, z.window).map_err(Failure::numerical)?
    };
    output::emit(a.out.as_deref(), &output::orbit_csv(&orbit))?;
    if let Some(p) = &a.svg {
        output::emit(Some(p), &output::phase_portrait_svg(&z, &orbit))?;
    }
    Ok(())
}

fn return_map(a: ReturnMapArgs) -> Result<(), Failure> {
    let z = model::load(&a.model.model)?;
    if a.samples < 2 {
        return Err(Failure::Config("--samples must be at least 2".into()));
    }
    let bp = retmap::base_point(&z).map_err(Failure::numerical)?;
    let delta = retmap::discover_domain(&z, &bp, 0.05, 1.0);
    let xs = if a.geometric {
        retmap::geometric_points(bp.a, delta, a.samples, 20.0)
    } else {
        retmap::uniform_points(bp.a, delta, a.samples)
    };
    let map = retmap::sample_return_map(&z, &bp, delta, &xs);
    output::emit(a.out.as_deref(), &output::return_map_csv(&map))?;
    if let Some(p) = &a.svg {
        output::emit(Some(p), &output::return_map_svg(&z.name, &map))?;
    }

    eprintln!("model {}: a_Z = {} (beta {}), domain length {delta}", z.name, bp.a, bp.beta);
    eprintln!("defined samples: {}/{}", map.defined().len(), map.samples.len());
    eprintln!("monotone: {}", map.is_monotone(1e-10));
    // Slope trend at the base from a dedicated geometric sample.
    let probe_xs = retmap::geometric_points(bp.a, delta, 64, 20.0);
    let probe_map = retmap::sample_return_map(&z, &bp, delta, &probe_xs);
    match retmap::derivative_probe_with(&probe_map, 1, PI_NOISE) {
        Ok(p) => {
            let trend = match p.result {
                ProbeResult::LimitInfinite => "vertical (pi' -> +inf)".to_string(),
                ProbeResult::LimitZero => "horizontal (pi' -> 0)".to_string(),
                ProbeResult::Finite(v) => format!("finite (pi' -> {v})"),
            };
            eprintln!("slope at base: {trend}, log-log exponent {}", p.slope);
        }
        Err(e) => eprintln!("slope at base: {e}"),
    }
    let exact = |x: f64| {
        retmap::first_return(&z, x)
            .ok()
            .filter(|l| l.outcome == filippov_core::LandingOutcome::Return)
            .map(|l| l.chart)
    };
    match retmap::find_fixed_point(&map, Some(exact)) {
        FixedPoint::Fixed {
            x0,
            stability,
            derivative,
        } => eprintln!("fixed point: x0 = {x0}, {stability:?}, pi'(x0) = {derivative}"),
        FixedPoint::Boundary => eprintln!("fixed point: a_Z itself (degenerate cycle)"),
        FixedPoint::None => eprintln!("fixed point: none on the sampled domain"),
    }
    Ok(())
}

fn classify(a: ClassifyArgs) -> Result<(), Failure> {
    let z = model::load(&a.model.model)?;
    let opts = ClassifyOptions {
        detect_cycles: true,
        samples: a.samples.max(8),
    };
    let point = bifurc::classify_point(&z, vec![], opts);
    let doc = json!({ "schema": SCHEMA, "model": z.name, "point": point });
    output::emit(a.out.as_deref(), &output::json(&doc))?;
    if point.errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("partial record: {}", point.errors.join("; "))))
    }
}

fn bifurcate(a: BifurcateArgs) -> Result<(), Failure> {
    let axes = model::parse_grid(&a.grid)?;
    if axes.iter().any(|ax| ax.n == 0) {
        return Err(Failure::Config("empty grid".into()));
    }
    let family = model::family(&a.model, &axes)?;
    let labels: Vec<CurveLabel> = match &a.curves {
        None => vec![],
        Some(s) => s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(CurveLabel::parse)
            .collect::<Result<_, _>>()
            .map_err(Failure::config)?,
    };
    let (xs, ys) = (axes[0].values(), axes[1].values());
    let scan = bifurc::scan_grid(&family, &xs, &ys);
    let solve = (axes[1].lo.min(axes[1].hi), axes[1].lo.max(axes[1].hi));
    let curves: Vec<_> = labels.iter().map(|&l| bifurc::trace_curve(&family, l, &xs, solve)).collect();
    let frac = scan.success_fraction();
    let doc = json!({
        "schema": SCHEMA,
        "family": family.name,
        "params": family.params,
        "success_fraction": frac,
        "isolated_islands": scan.isolated_islands(),
        "grid": scan,
        "curves": curves,
    });
    output::emit(a.out.as_deref(), &output::json(&doc))?;
    eprintln!("{:.1}% of {} cells classified", 100.0 * frac, xs.len() * ys.len());
    if frac >= 0.9 {
        Ok(())
    } else {
        Err(Failure::PartialSweep(format!("only {:.1}% of cells classified", 100.0 * frac)))
    }
}

fn run_fixtures(a: FixturesArgs) -> Result<(), Failure> {
    if let Some(t) = a.tolerance {
        if !(t > 0.0) {
            return Err(Failure::Config("--tolerance must be positive".into()));
        }
    }
    if let Some(o) = &a.only {
        if !fixtures::known_group(o) {
            return Err(Failure::Config(format!(
                "--only `{o}`: not a region fixture or one of {}",
                fixtures::ORACLES.join(", ")
            )));
        }
    }
    let checks = fixtures::run(&fixtures::Settings {
        pi_tol: a.tolerance,
        only: a.only.clone(),
    });
    print!("{}", fixtures::table(&checks));
    if let Some(p) = &a.out {
        output::emit(Some(p), &output::json(&json!({ "schema": SCHEMA, "checks": checks })))?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Fixtures(format!("{failed} of {} checks failed", checks.len())))
    }
}
