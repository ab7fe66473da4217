//! Command-line front end: density evaluation, the fractional BVP solver,
//! particle simulation, subordination, and cross-route comparison, with a
//! JSON manifest written alongside every output for reproducibility.

use clap::{Args, Parser, Subcommand};
use fracdual::density::{self, DensityQuery, Method};
use fracdual::error::Error;
use fracdual::fpde::{self, SolverConfig, TwoSided};
use fracdual::inverse::{self, HRoute, InverseDensitySpec};
use fracdual::mc::{self, Ensemble, GridCdf};
use fracdual::params::{Parametrization, StableParams};
use fracdual::quadrature::QuadPolicy;
use fracdual::subordination::{self, Datum, MixRoute, SpaceDomain, SubordinationSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracdual", version, about = "stable and hitting-time densities by series, finite differences, and particle tracking")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a stable density on a grid.
    Density(DensityArgs),
    /// Evaluate the hitting-time density h(x, t), or run the transform check.
    InverseDensity(InverseArgs),
    /// Explicit finite-difference solve of the fractional equation.
    Solve(SolveArgs),
    /// Particle simulation of E, the conditioned endpoint, or Z.
    Simulate(SimulateArgs),
    /// Subordination solution of the order-gamma Cauchy problem.
    Subordinate(SubordinateArgs),
    /// Cross-route comparison presets.
    Compare(CompareArgs),
    /// Re-run a recorded manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Clone)]
struct DensityArgs {
    #[arg(long)]
    alpha: f64,
    /// Parametrization of --asym/--scale.
    #[arg(long, default_value = "eta")]
    param: String,
    /// Asymmetry parameter; --eta is an alias.
    #[arg(long, alias = "eta", allow_hyphen_values = true)]
    asym: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value = "series")]
    method: String,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, default_value_t = density::DEFAULT_SERIES_CAP)]
    series_cap: usize,
    #[arg(long, default_value_t = density::DEFAULT_SERIES_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct InverseArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// self-similar | duality | both
    #[arg(long, default_value = "self-similar")]
    route: String,
    #[arg(long, default_value_t = 0.05)]
    x_min: f64,
    #[arg(long, default_value_t = 4.0)]
    x_max: f64,
    #[arg(long, default_value_t = 80)]
    points: usize,
    /// `laplace` emits z,lhs,rhs,abs_err instead of a density grid.
    #[arg(long)]
    check: Option<String>,
    #[arg(long, value_delimiter = ',')]
    z: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long)]
    dx: f64,
    #[arg(long)]
    dt: f64,
    #[arg(long, default_value_t = 6.0)]
    x_max: f64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Run dx and 2dx and combine by Richardson extrapolation.
    #[arg(long)]
    extrapolate: bool,
    /// Add analytic h and the absolute error as columns.
    #[arg(long)]
    compare: bool,
    #[arg(long)]
    two_sided: bool,
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SimulateArgs {
    /// E | Ycond | Z
    #[arg(long)]
    process: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    dt_walk: f64,
    #[arg(long, default_value_t = 1e-3)]
    dx_path: f64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SubordinateArgs {
    #[arg(long)]
    gamma: f64,
    /// line | interval
    #[arg(long, default_value = "line")]
    domain: String,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    /// delta:<x0> or file:<path> (CSV x,value rows on a uniform grid).
    #[arg(long, default_value = "delta:0")]
    r: String,
    /// inverse | dual | both
    #[arg(long, default_value = "both")]
    route: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CompareArgs {
    /// fig1 (extrapolated solver vs analytic h) | fig2 (Z particles vs h)
    #[arg(long)]
    mode: String,
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 0.2)]
    dx: f64,
    #[arg(long, default_value_t = 2.5e-4)]
    dt: f64,
    #[arg(long)]
    extrapolate: bool,
    #[arg(long, default_value_t = 200_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    dt_walk: f64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Redirect the replayed output (defaults to the recorded path).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct RunManifest {
    subcommand: String,
    /// Fully defaulted flag list; replaying it reproduces the output.
    argv: Vec<String>,
    seed: Option<u64>,
    tolerances: BTreeMap<String, f64>,
    output: String,
    tool_version: String,
}

fn fmt_g(v: f64) -> String {
    format!("{v:.16e}")
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParams(_) | Error::Domain(_) | Error::GridMismatch(_) => 2,
        Error::NonConverged(_) | Error::QuadratureFail(_) | Error::CflViolation { .. } => 3,
    }
}

struct RunOutput {
    csv: String,
    manifest: RunManifest,
    /// Extra line printed to stdout after file output (simulation summary).
    summary: Option<String>,
}

fn emit(out: Option<&PathBuf>, run: RunOutput) -> Result<(), Error> {
    let io_err = |e: std::io::Error| Error::InvalidParams(format!("io: {e}"));
    match out {
        Some(path) => {
            std::fs::write(path, run.csv.as_bytes()).map_err(io_err)?;
            let mpath = format!("{}.manifest.json", path.display());
            let json = serde_json::to_string_pretty(&run.manifest).expect("serializable");
            std::fs::write(&mpath, json).map_err(io_err)?;
            if let Some(s) = run.summary {
                println!("{s}");
            }
        }
        None => {
            print!("{}", run.csv);
            if let Some(s) = run.summary {
                println!("{s}");
            }
            let json = serde_json::to_string(&run.manifest).expect("serializable");
            eprintln!("{json}");
        }
    }
    Ok(())
}

fn manifest(
    subcommand: &str,
    argv: Vec<String>,
    seed: Option<u64>,
    tol: &[(&str, f64)],
    out: Option<&PathBuf>,
) -> RunManifest {
    RunManifest {
        subcommand: subcommand.into(),
        argv,
        seed,
        tolerances: tol.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        output: out
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "stdout".into()),
        tool_version: env!("CARGO_PKG_VERSION").into(),
    }
}

fn grid(x_min: f64, x_max: f64, points: usize) -> Result<Vec<f64>, Error> {
    if points < 1 {
        return Err(Error::InvalidParams("points must be >= 1".into()));
    }
    if points == 1 {
        return Ok(vec![x_min]);
    }
    if !(x_max > x_min) {
        return Err(Error::InvalidParams(format!(
            "empty grid: x_min = {x_min}, x_max = {x_max}"
        )));
    }
    let h = (x_max - x_min) / (points - 1) as f64;
    Ok((0..points).map(|i| x_min + i as f64 * h).collect())
}

fn run_density(a: &DensityArgs) -> Result<RunOutput, Error> {
    let tag = Parametrization::from_name(&a.param)?;
    let params = StableParams::new(tag, a.alpha, a.asym, a.scale)?;
    let method = Method::from_name(&a.method)?;
    let xs = grid(a.x_min, a.x_max, a.points)?;
    // Validate the whole request before computing anything.
    for &x in &xs {
        DensityQuery {
            x,
            params,
            method,
            series_cap: a.series_cap,
            tol: a.tol,
        }
        .validate()?;
    }
    let mut csv = String::from("x,value\n");
    for &x in &xs {
        let q = DensityQuery {
            x,
            params,
            method,
            series_cap: a.series_cap,
            tol: a.tol,
        };
        let v = density::evaluate(&q)?;
        writeln!(csv, "{},{}", fmt_g(x), fmt_g(v)).unwrap();
    }
    let argv = vec![
        "density".into(),
        format!("--alpha={}", a.alpha),
        format!("--param={}", a.param),
        format!("--asym={}", a.asym),
        format!("--scale={}", a.scale),
        format!("--method={}", a.method),
        format!("--x-min={}", a.x_min),
        format!("--x-max={}", a.x_max),
        format!("--points={}", a.points),
        format!("--series-cap={}", a.series_cap),
        format!("--tol={}", a.tol),
    ];
    Ok(RunOutput {
        csv,
        manifest: manifest("density", argv, None, &[("series_tol", a.tol)], a.out.as_ref()),
        summary: None,
    })
}

fn h_both(x: f64, gamma: f64, b: f64, t: f64, route: &str) -> Result<Vec<f64>, Error> {
    let mut vals = Vec::new();
    if route == "self-similar" || route == "both" {
        let s = InverseDensitySpec::new(gamma, b, t, HRoute::SelfSimilar)?;
        vals.push(inverse::h_density(x, &s)?);
    }
    if route == "duality" || route == "both" {
        let s = InverseDensitySpec::new(gamma, b, t, HRoute::Duality)?;
        vals.push(inverse::h_density(x, &s)?);
    }
    if vals.is_empty() {
        return Err(Error::InvalidParams(format!(
            "unknown route `{route}` (expected self-similar|duality|both)"
        )));
    }
    Ok(vals)
}

fn run_inverse(a: &InverseArgs) -> Result<RunOutput, Error> {
    if let Some(check) = &a.check {
        if check != "laplace" {
            return Err(Error::InvalidParams(format!(
                "unknown check `{check}` (expected laplace)"
            )));
        }
        if a.z.is_empty() {
            return Err(Error::InvalidParams("--check laplace needs --z".into()));
        }
        let route = if a.route == "both" {
            HRoute::SelfSimilar
        } else {
            HRoute::from_name(&a.route)?
        };
        let spec = InverseDensitySpec::new(a.gamma, a.b, a.t, route)?;
        for &z in &a.z {
            if z < 0.0 {
                return Err(Error::InvalidParams(format!("z = {z} must be >= 0")));
            }
        }
        let mut csv = String::from("z,lhs,rhs,abs_err\n");
        for &z in &a.z {
            let (lhs, rhs) = inverse::laplace_check(&spec, z)?;
            writeln!(
                csv,
                "{},{},{},{}",
                fmt_g(z),
                fmt_g(lhs),
                fmt_g(rhs),
                fmt_g((lhs - rhs).abs())
            )
            .unwrap();
        }
        let argv = vec![
            "inverse-density".into(),
            format!("--gamma={}", a.gamma),
            format!("--b={}", a.b),
            format!("--t={}", a.t),
            format!("--route={}", a.route),
            "--check=laplace".into(),
            format!("--z={}", a.z.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(",")),
        ];
        return Ok(RunOutput {
            csv,
            manifest: manifest(
                "inverse-density",
                argv,
                None,
                &[("laplace_quad_tol", 1e-9)],
                a.out.as_ref(),
            ),
            summary: None,
        });
    }
    // Validate before evaluating the grid.
    let _ = h_both(a.x_min.max(1e-12), a.gamma, a.b, a.t, &a.route)?;
    let xs = grid(a.x_min, a.x_max, a.points)?;
    if xs.iter().any(|x| *x <= 0.0) {
        return Err(Error::InvalidParams("grid must satisfy x > 0".into()));
    }
    let header = match a.route.as_str() {
        "both" => "x,h_self_similar,h_duality,abs_err",
        _ => "x,value",
    };
    let mut csv = format!("{header}\n");
    for &x in &xs {
        let vals = h_both(x, a.gamma, a.b, a.t, &a.route)?;
        if vals.len() == 2 {
            writeln!(
                csv,
                "{},{},{},{}",
                fmt_g(x),
                fmt_g(vals[0]),
                fmt_g(vals[1]),
                fmt_g((vals[0] - vals[1]).abs())
            )
            .unwrap();
        } else {
            writeln!(csv, "{},{}", fmt_g(x), fmt_g(vals[0])).unwrap();
        }
    }
    let argv = vec![
        "inverse-density".into(),
        format!("--gamma={}", a.gamma),
        format!("--b={}", a.b),
        format!("--t={}", a.t),
        format!("--route={}", a.route),
        format!("--x-min={}", a.x_min),
        format!("--x-max={}", a.x_max),
        format!("--points={}", a.points),
    ];
    Ok(RunOutput {
        csv,
        manifest: manifest("inverse-density", argv, None, &[], a.out.as_ref()),
        summary: None,
    })
}

fn analytic_h(x: f64, gamma: f64, b: f64, t: f64) -> Result<f64, Error> {
    let route = if gamma >= 0.5 { HRoute::Duality } else { HRoute::SelfSimilar };
    let s = InverseDensitySpec::new(gamma, b, t, route)?;
    // Past the tail cutoff the density is below ~1e-22 and exponentially
    // expensive to certify; it is zero at output precision.
    if x > inverse::h_tail_cutoff(&s) {
        return Ok(0.0);
    }
    inverse::h_density(x, &s)
}

fn run_solve(a: &SolveArgs) -> Result<RunOutput, Error> {
    let cfg = SolverConfig {
        alpha: a.alpha,
        b: a.b,
        dx: a.dx,
        dt: a.dt,
        x_max: a.x_max,
        t_end: a.t_end,
        weights_cap: None,
        two_sided: if a.two_sided {
            Some(TwoSided { q: a.q, delta: a.delta, a: a.a })
        } else {
            None
        },
    };
    cfg.validate()?;
    let sol = if a.two_sided {
        fpde::solve_two_sided(&cfg)?
    } else if a.extrapolate {
        let fine = fpde::solve_bvp(&cfg)?;
        let coarse_cfg = SolverConfig { dx: 2.0 * a.dx, ..cfg.clone() };
        let coarse = fpde::solve_bvp(&coarse_cfg)?;
        fpde::richardson_extrapolate(&fine, &coarse)?
    } else {
        fpde::solve_bvp(&cfg)?
    };
    let gamma = 1.0 / a.alpha;
    let mut csv = if a.compare && !a.two_sided {
        String::from("x,h_numeric,h_analytic,abs_err\n")
    } else {
        String::from("x,h_numeric\n")
    };
    for (i, v) in sol.values.iter().enumerate() {
        let x = sol.x(i);
        if a.compare && !a.two_sided {
            let h = if x > 0.0 {
                analytic_h(x, gamma, a.b, a.t_end)?
            } else {
                f64::NAN
            };
            writeln!(
                csv,
                "{},{},{},{}",
                fmt_g(x),
                fmt_g(*v),
                fmt_g(h),
                fmt_g((v - h).abs())
            )
            .unwrap();
        } else {
            writeln!(csv, "{},{}", fmt_g(x), fmt_g(*v)).unwrap();
        }
    }
    let mut argv = vec![
        "solve".into(),
        format!("--alpha={}", a.alpha),
        format!("--b={}", a.b),
        format!("--dx={}", a.dx),
        format!("--dt={}", a.dt),
        format!("--x-max={}", a.x_max),
        format!("--t-end={}", a.t_end),
    ];
    if a.extrapolate {
        argv.push("--extrapolate".into());
    }
    if a.compare {
        argv.push("--compare".into());
    }
    if a.two_sided {
        argv.push("--two-sided".into());
        argv.push(format!("--q={}", a.q));
        argv.push(format!("--delta={}", a.delta));
        argv.push(format!("--a={}", a.a));
    }
    Ok(RunOutput {
        csv,
        manifest: manifest("solve", argv, None, &[], a.out.as_ref()),
        summary: None,
    })
}

fn run_simulate(a: &SimulateArgs) -> Result<RunOutput, Error> {
    let ens = Ensemble { seed: a.seed, n: a.n, dt_walk: a.dt_walk, dx_path: a.dx_path };
    ens.validate()?;
    if a.bins < 2 {
        return Err(Error::InvalidParams("bins must be >= 2".into()));
    }
    let (samples, gamma_eff) = match a.process.as_str() {
        "E" => {
            let gamma = a.gamma.ok_or_else(|| {
                Error::InvalidParams("process E needs --gamma".into())
            })?;
            let per_target = mc::simulate_e(gamma, a.b, &[a.t], &ens)?;
            (per_target.into_iter().next().unwrap(), gamma)
        }
        "Ycond" => {
            let alpha = a.alpha.ok_or_else(|| {
                Error::InvalidParams("process Ycond needs --alpha".into())
            })?;
            (mc::simulate_y_conditional(alpha, a.b, a.t, &ens)?, 1.0 / alpha)
        }
        "Z" => {
            let alpha = a.alpha.ok_or_else(|| {
                Error::InvalidParams("process Z needs --alpha".into())
            })?;
            (mc::simulate_z(alpha, a.b, a.t, &ens)?, 1.0 / alpha)
        }
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown process `{other}` (expected E|Ycond|Z)"
            )))
        }
    };
    let accepted = samples.len();
    if accepted == 0 {
        return Err(Error::NonConverged("no accepted samples".into()));
    }
    let sorted = mc::sorted(samples);
    let mean = sorted.iter().sum::<f64>() / accepted as f64;
    let hi = sorted[accepted - 1];
    // Histogram against the analytic density.
    let lo = 0.0;
    let width = (hi - lo) / a.bins as f64;
    let mut counts = vec![0usize; a.bins];
    for &s in &sorted {
        let i = (((s - lo) / width) as usize).min(a.bins - 1);
        counts[i] += 1;
    }
    let mut csv = String::from("x_mid,emp_density,analytic\n");
    for (i, c) in counts.iter().enumerate() {
        let xm = lo + (i as f64 + 0.5) * width;
        let emp = *c as f64 / (accepted as f64 * width);
        let ana = analytic_h(xm, gamma_eff, a.b, a.t)?;
        writeln!(csv, "{},{},{}", fmt_g(xm), fmt_g(emp), fmt_g(ana)).unwrap();
    }
    // KS against the analytic CDF.
    let cdf = GridCdf::from_density(
        &|x| analytic_h(x.max(1e-9), gamma_eff, a.b, a.t),
        0.0,
        hi * 1.05 + 1.0,
        4001,
        0.0,
    )?;
    let ks = mc::ks_statistic(&sorted, &|x| cdf.eval(x));
    let summary = format!("accepted,ks,mean\n{},{},{}", accepted, fmt_g(ks), fmt_g(mean));
    let mut argv = vec![
        "simulate".into(),
        format!("--process={}", a.process),
        format!("--b={}", a.b),
        format!("--t={}", a.t),
        format!("--n={}", a.n),
        format!("--seed={}", a.seed),
        format!("--dt-walk={}", a.dt_walk),
        format!("--dx-path={}", a.dx_path),
        format!("--bins={}", a.bins),
    ];
    if let Some(al) = a.alpha {
        argv.insert(2, format!("--alpha={al}"));
    }
    if let Some(g) = a.gamma {
        argv.insert(2, format!("--gamma={g}"));
    }
    Ok(RunOutput {
        csv,
        manifest: manifest("simulate", argv, Some(a.seed), &[], a.out.as_ref()),
        summary: Some(summary),
    })
}

fn parse_datum(s: &str) -> Result<Datum, Error> {
    if let Some(rest) = s.strip_prefix("delta:") {
        let x0: f64 = rest
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad delta position `{rest}`")))?;
        return Ok(Datum::Delta(x0));
    }
    if let Some(path) = s.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParams(format!("cannot read {path}: {e}")))?;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('x') || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',');
            let (Some(xs_s), Some(v_s)) = (it.next(), it.next()) else {
                return Err(Error::InvalidParams(format!("bad row {} in {path}", ln + 1)));
            };
            xs.push(xs_s.trim().parse::<f64>().map_err(|_| {
                Error::InvalidParams(format!("bad x at row {} in {path}", ln + 1))
            })?);
            vs.push(v_s.trim().parse::<f64>().map_err(|_| {
                Error::InvalidParams(format!("bad value at row {} in {path}", ln + 1))
            })?);
        }
        if xs.len() < 2 {
            return Err(Error::InvalidParams(format!("{path}: need at least 2 rows")));
        }
        let dx = xs[1] - xs[0];
        for w in xs.windows(2) {
            if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0) {
                return Err(Error::InvalidParams(format!("{path}: grid is not uniform")));
            }
        }
        return Ok(Datum::Tabulated { x0: xs[0], dx, values: vs });
    }
    Err(Error::InvalidParams(format!(
        "bad datum `{s}` (expected delta:<x0> or file:<path>)"
    )))
}

fn run_subordinate(a: &SubordinateArgs) -> Result<RunOutput, Error> {
    let domain = match a.domain.as_str() {
        "line" => SpaceDomain::FreeLine,
        "interval" => SpaceDomain::Interval(a.length),
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown domain `{other}` (expected line|interval)"
            )))
        }
    };
    let r = parse_datum(&a.r)?;
    let routes: Vec<MixRoute> = match a.route.as_str() {
        "both" => vec![MixRoute::Inverse, MixRoute::Dual],
        name => vec![MixRoute::from_name(name)?],
    };
    let specs: Vec<SubordinationSpec> = routes
        .iter()
        .map(|route| SubordinationSpec {
            gamma: a.gamma,
            domain,
            r: r.clone(),
            route: *route,
            quad: QuadPolicy::with_tol(1e-9),
        })
        .collect();
    for s in &specs {
        s.validate()?;
    }
    if !(a.t > 0.0) {
        return Err(Error::InvalidParams(format!("t = {} must be > 0", a.t)));
    }
    let xs = grid(a.x_min, a.x_max, a.points)?;
    let header = if specs.len() == 2 { "x,m,m_other,abs_err" } else { "x,m" };
    let mut csv = format!("{header}\n");
    for &x in &xs {
        let vals: Vec<f64> = specs
            .iter()
            .map(|s| subordination::subordinate(s, x, a.t))
            .collect::<Result<_, _>>()?;
        if vals.len() == 2 {
            writeln!(
                csv,
                "{},{},{},{}",
                fmt_g(x),
                fmt_g(vals[0]),
                fmt_g(vals[1]),
                fmt_g((vals[0] - vals[1]).abs())
            )
            .unwrap();
        } else {
            writeln!(csv, "{},{}", fmt_g(x), fmt_g(vals[0])).unwrap();
        }
    }
    let argv = vec![
        "subordinate".into(),
        format!("--gamma={}", a.gamma),
        format!("--domain={}", a.domain),
        format!("--length={}", a.length),
        format!("--r={}", a.r),
        format!("--route={}", a.route),
        format!("--t={}", a.t),
        format!("--x-min={}", a.x_min),
        format!("--x-max={}", a.x_max),
        format!("--points={}", a.points),
    ];
    Ok(RunOutput {
        csv,
        manifest: manifest(
            "subordinate",
            argv,
            None,
            &[("mixing_quad_tol", 1e-9)],
            a.out.as_ref(),
        ),
        summary: None,
    })
}

fn run_compare(a: &CompareArgs) -> Result<RunOutput, Error> {
    match a.mode.as_str() {
        "fig1" => {
            let solve_args = SolveArgs {
                alpha: a.alpha,
                b: 1.0,
                dx: a.dx,
                dt: a.dt,
                x_max: 6.0,
                t_end: a.t,
                extrapolate: a.extrapolate,
                compare: true,
                two_sided: false,
                q: 0.5,
                delta: 2.0,
                a: 1.0,
                out: a.out.clone(),
            };
            let mut run = run_solve(&solve_args)?;
            run.manifest.subcommand = "compare".into();
            run.manifest.argv = vec![
                "compare".into(),
                "--mode=fig1".into(),
                format!("--alpha={}", a.alpha),
                format!("--t={}", a.t),
                format!("--dx={}", a.dx),
                format!("--dt={}", a.dt),
                if a.extrapolate { "--extrapolate".into() } else { String::new() },
            ]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect();
            Ok(run)
        }
        "fig2" => {
            let sim_args = SimulateArgs {
                process: "Z".into(),
                alpha: Some(a.alpha),
                gamma: None,
                b: 1.0,
                t: a.t,
                n: a.n,
                seed: a.seed,
                dt_walk: a.dt_walk,
                dx_path: 1e-3,
                bins: a.bins,
                out: a.out.clone(),
            };
            let mut run = run_simulate(&sim_args)?;
            run.manifest.subcommand = "compare".into();
            run.manifest.argv = vec![
                "compare".into(),
                "--mode=fig2".into(),
                format!("--alpha={}", a.alpha),
                format!("--t={}", a.t),
                format!("--n={}", a.n),
                format!("--seed={}", a.seed),
                format!("--dt-walk={}", a.dt_walk),
                format!("--bins={}", a.bins),
            ];
            Ok(run)
        }
        other => Err(Error::InvalidParams(format!(
            "unknown mode `{other}` (expected fig1|fig2)"
        ))),
    }
}

fn run_replay(a: &ReplayArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&a.manifest)
        .map_err(|e| Error::InvalidParams(format!("cannot read manifest: {e}")))?;
    let m: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParams(format!("bad manifest: {e}")))?;
    let mut argv = vec!["fracdual".to_string()];
    argv.extend(m.argv.iter().cloned());
    if let Some(out) = &a.out {
        argv.push(format!("--out={}", out.display()));
    } else if m.output != "stdout" {
        argv.push(format!("--out={}", m.output));
    }
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| Error::InvalidParams(format!("manifest argv invalid: {e}")))?;
    dispatch(cli)
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Density(a) => emit(a.out.as_ref(), run_density(&a)?),
        Cmd::InverseDensity(a) => emit(a.out.as_ref(), run_inverse(&a)?),
        Cmd::Solve(a) => emit(a.out.as_ref(), run_solve(&a)?),
        Cmd::Simulate(a) => emit(a.out.as_ref(), run_simulate(&a)?),
        Cmd::Subordinate(a) => emit(a.out.as_ref(), run_subordinate(&a)?),
        Cmd::Compare(a) => emit(a.out.as_ref(), run_compare(&a)?),
        Cmd::Replay(a) => run_replay(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
