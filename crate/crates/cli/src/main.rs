//! `confmetric`: command-line front end for the confmetric library.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for bad input.

mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use confmetric::decompose::{constructive_theorem_main, DecomposeOptions};
use confmetric::geom::log_space;
use confmetric::isoperimetry::{finn_constant, iso_family_report, DomainFamily, FamilyKind};
use confmetric::mbeta::{
    build_mbeta_on, build_smoothed_cone, identity_samples, verify_potential_identity, MbetaGrid,
};
use confmetric::measures::{total_mass, total_variation};
use confmetric::potential::{basepoint_potential, log_potential, Basepoint, FactorSamples};
use confmetric::qcmaps::{compose_radial, cone_profile, dilatation_radial, volume_matching_profile};
use confmetric::verify::{self, CheckResult};
use confmetric::weights::{
    a1_ratio, ap_constant, reverse_holder, seeded_pairs, strong_ainfty_report, BallFamily,
};
use confmetric::{io, ConformalFactor, Dim, Point, RadialProfile, Scenario, SignedMeasure, WeightField};

use config::{Config, InputError};

#[derive(Parser, Debug)]
#[command(name = "confmetric", version, about = "Conformal metrics from measures: potentials, radial maps, weights, isoperimetry")]
struct Cli {
    /// TOML file with defaults for dimension, seed, count, grid_h, delta and scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel loops.
    #[arg(long, global = true, env = "CONFMETRIC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct PresetArgs {
    /// Cone exponent for `cone` and `smoothed-cone`.
    #[arg(long)]
    beta: Option<f64>,
    /// Ramp width of the smoothed cone, in (0, 0.25].
    #[arg(long)]
    delta: Option<f64>,
    /// Total mass of `gaussian-bump`.
    #[arg(long)]
    mass: Option<f64>,
    /// Width of `gaussian-bump`.
    #[arg(long)]
    width: Option<f64>,
    /// Number of shells in `dirac-cluster` (shells k = 2..=terms).
    #[arg(long)]
    terms: Option<usize>,
    /// Mollification width of each `dirac-cluster` shell.
    #[arg(long)]
    shell_width: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the logarithmic potential, the basepoint potential and the weight.
    Potential {
        /// Density file (`r,value` or planar grid) or preset name.
        #[arg(long)]
        measure: String,
        #[arg(long)]
        dimension: Option<usize>,
        /// Basepoint `x,y[,z,w]`; defaults to the origin or `e1`.
        #[arg(long)]
        basepoint: Option<String>,
        /// Radii `lo:hi:count` along `e1` for radial measures.
        #[arg(long, default_value = "1e-3:1e3:61")]
        radii: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        preset: PresetArgs,
    },
    /// Radial quasiconformal maps: cones, volume matching and composition.
    Qcmap {
        /// Cone map `|x|^{-β} x`.
        #[arg(long, allow_hyphen_values = true)]
        cone: Option<f64>,
        /// Radial weight file `r,value`; builds the map with Jacobian equal to the weight.
        #[arg(long)]
        match_weight: Option<PathBuf>,
        /// Two profile files `r,R`; the first map is applied first.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        compose: Option<Vec<PathBuf>>,
        #[arg(long)]
        dimension: Option<usize>,
        /// Profile output `r,R`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the smoothed-cone measure and check its mass, support and potential.
    Mbeta {
        #[arg(long)]
        dimension: Option<usize>,
        /// Finite-difference step.
        #[arg(long)]
        grid_h: Option<f64>,
        #[arg(long)]
        out_density: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        preset: PresetArgs,
    },
    /// Muckenhoupt-type constants of a weight.
    Weights {
        /// Weight file (`r,value` of the weight, or planar grid) or preset name,
        /// in which case the weight is `e^{nw}`.
        #[arg(long)]
        field: String,
        #[arg(long, value_enum)]
        test: WeightTest,
        /// Exponent of the A_p test.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Reverse Hölder exponent.
        #[arg(long, default_value_t = 1.5)]
        rexp: f64,
        /// Point pairs for the strong-A∞ test.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        /// Balls for the A_p and reverse Hölder tests.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        preset: PresetArgs,
    },
    /// Isoperimetric ratios over a seeded family and Finn constants.
    Iso {
        /// Conformal factor file (`r,value` or planar grid of w) or preset name.
        #[arg(long)]
        metric: String,
        #[arg(long, value_enum, default_value_t = Family::Mixed)]
        family: Family,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Radii `rmin:rmax:steps` for the Finn constants.
        #[arg(long, default_value = "1:1e10:11")]
        finn: String,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        preset: PresetArgs,
    },
    /// Split a measure into a smoothed cone, a small tail and a mean-zero density.
    Decompose {
        /// Density file or preset name.
        #[arg(long)]
        measure: String,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        epsilon0_override: Option<f64>,
        #[arg(long)]
        grid_h: Option<f64>,
        #[arg(long)]
        out_report: Option<PathBuf>,
        /// Profile `r,R` of the constructed map (radial measures only).
        #[arg(long)]
        out_map: Option<PathBuf>,
        #[command(flatten)]
        preset: PresetArgs,
    },
    /// Run the acceptance checks, or the report for one preset.
    VerifyAll {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        dimension: Option<usize>,
        /// Run only these criteria (1..=11).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        /// Domains in the isoperimetric family of a preset report.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        scenario: PresetArgs,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum WeightTest {
    A1,
    Ap,
    Rh,
    Strong,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Balls,
    Stars,
    Annuli,
    Mixed,
}

impl From<Family> for FamilyKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Balls => FamilyKind::Balls,
            Family::Stars => FamilyKind::Stars,
            Family::Annuli => FamilyKind::Annuli,
            Family::Mixed => FamilyKind::Mixed,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let (code, diag) = diagnose(&e);
            eprintln!("{}", serde_json::to_string(&diag).unwrap_or_default());
            ExitCode::from(code)
        }
    }
}

/// Exit code and a JSON diagnostic for an error.
fn diagnose(e: &anyhow::Error) -> (u8, Value) {
    use confmetric::Error as E;
    let message = format!("{e:#}");
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::Parse { line, .. } => (2, json!({"error": "parse", "line": line, "message": message})),
                E::Diagnostic(_) | E::NotMonotone(_) | E::NoTailRadius { .. } => {
                    (1, json!({"error": "check", "message": message}))
                }
                _ => (2, json!({"error": "input", "message": message})),
            };
        }
        if cause.downcast_ref::<InputError>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return (2, json!({"error": "input", "message": message}));
        }
    }
    (2, json!({"error": "input", "message": message}))
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(input("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Potential { measure, dimension, basepoint, radii, out, preset } => {
            let dim = dimension_of(dimension, &cfg)?;
            let mu = resolve_measure(&measure, dim, &preset, &cfg)?;
            potential(&mu, basepoint.as_deref(), &radii, out.as_deref())
        }
        Command::Qcmap { cone, match_weight, compose, dimension, out, report } => {
            let dim = dimension_of(dimension, &cfg)?;
            qcmap(dim, cone, match_weight.as_deref(), compose, out.as_deref(), report.as_deref())
        }
        Command::Mbeta { dimension, grid_h, out_density, report, preset } => {
            let dim = dimension_of(dimension, &cfg)?;
            let grid = grid_of(grid_h, &cfg)?;
            mbeta(dim, grid, &preset, &cfg, out_density.as_deref(), report.as_deref())
        }
        Command::Weights { field, test, p, rexp, pairs, count, seed, dimension, report, preset } => {
            let dim = dimension_of(dimension, &cfg)?;
            let w = resolve_weight(&field, dim, &preset, &cfg)?;
            let count = count.or(cfg.count).unwrap_or(100);
            let seed = seed.or(cfg.seed).unwrap_or(verify::SEED);
            weights(&w, test, p, rexp, pairs, count, seed, report.as_deref())
        }
        Command::Iso { metric, family, count, seed, finn, dimension, report, preset } => {
            let dim = dimension_of(dimension, &cfg)?;
            let f = resolve_factor(&metric, dim, &preset, &cfg)?;
            let count = count.or(cfg.count).unwrap_or(200);
            let seed = seed.or(cfg.seed).unwrap_or(verify::SEED);
            iso(&f, family.into(), count, seed, &finn, report.as_deref())
        }
        Command::Decompose { measure, dimension, epsilon0_override, grid_h, out_report, out_map, preset } => {
            let dim = dimension_of(dimension, &cfg)?;
            let mu = resolve_measure(&measure, dim, &preset, &cfg)?;
            let opts = DecomposeOptions {
                delta: preset.delta.or(cfg.delta).unwrap_or(0.1),
                epsilon0_override,
                grid: grid_of(grid_h, &cfg)?,
                ..Default::default()
            };
            decompose(&mu, &opts, out_report.as_deref(), out_map.as_deref())
        }
        Command::VerifyAll { preset, dimension, only, count, seed, report, scenario } => {
            let dim = dimension_of(dimension, &cfg)?;
            let count = count.or(cfg.count).unwrap_or(200);
            let seed = seed.or(cfg.seed).unwrap_or(verify::SEED);
            match preset {
                Some(name) => {
                    let s = scenario_from(&name, &scenario, &cfg)?;
                    let rep = verify::scenario_report(&s, dim, count, seed)?;
                    for c in &rep.checks {
                        match c.expected {
                            Some(e) => println!("{:<24} {} value={} expected={e}", c.name, pass(c.passed), c.value),
                            None => println!("{:<24} {} value={}", c.name, pass(c.passed), c.value),
                        }
                    }
                    write_json(report.as_deref(), &rep)?;
                    Ok(rep.passed())
                }
                None => {
                    let ids: Vec<usize> = if only.is_empty() { (1..=11).collect() } else { only };
                    let mut results: Vec<CheckResult> = Vec::new();
                    for id in ids {
                        let r = verify::criterion(id).map_err(|e| input(e.to_string()))?;
                        println!("{r}");
                        results.push(r);
                    }
                    let passed = results.iter().all(|r| r.passed);
                    let doc = json!({ "passed": passed, "seed": verify::SEED, "criteria": results });
                    if let Some(p) = &report {
                        write_json(Some(p), &doc)?;
                    }
                    Ok(passed)
                }
            }
        }
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn dimension_of(flag: Option<usize>, cfg: &Config) -> Result<Dim> {
    let n = flag.or(cfg.dimension).unwrap_or(2);
    Dim::new(n).map_err(anyhow::Error::new)
}

fn grid_of(flag: Option<f64>, cfg: &Config) -> Result<MbetaGrid> {
    let h = flag.or(cfg.grid_h).unwrap_or(MbetaGrid::default().h);
    if !(h > 0.0 && h <= 0.01) {
        bail!(input(format!("grid_h = {h} must lie in (0, 0.01]")));
    }
    Ok(MbetaGrid { h, ..MbetaGrid::default() })
}

/// Preset by name, parameters from flags, then the config scenario, then defaults.
fn scenario_from(name: &str, a: &PresetArgs, cfg: &Config) -> Result<Scenario> {
    let base = cfg.scenario.filter(|s| s.name() == name);
    let get = |flag: Option<f64>, pick: fn(&Scenario) -> Option<f64>, default: f64| {
        flag.or_else(|| base.as_ref().and_then(pick)).unwrap_or(default)
    };
    let s = match name {
        "flat" => Scenario::Flat,
        "cone" => Scenario::Cone {
            beta: get(a.beta, |s| if let Scenario::Cone { beta } = s { Some(*beta) } else { None }, 0.5),
        },
        "smoothed-cone" => Scenario::SmoothedCone {
            beta: get(a.beta, |s| if let Scenario::SmoothedCone { beta, .. } = s { Some(*beta) } else { None }, 0.5),
            delta: get(a.delta.or(cfg.delta), |s| if let Scenario::SmoothedCone { delta, .. } = s { Some(*delta) } else { None }, 0.1),
        },
        "gaussian-bump" => Scenario::GaussianBump {
            mass: get(a.mass, |s| if let Scenario::GaussianBump { mass, .. } = s { Some(*mass) } else { None }, 0.5),
            width: get(a.width, |s| if let Scenario::GaussianBump { width, .. } = s { Some(*width) } else { None }, 0.3),
        },
        "dirac-cluster" => {
            let terms = a.terms.or(match base {
                Some(Scenario::DiracCluster { terms, .. }) => Some(terms),
                _ => None,
            });
            Scenario::DiracCluster {
                terms: terms.unwrap_or(20),
                shell_width: get(a.shell_width, |s| if let Scenario::DiracCluster { shell_width, .. } = s { Some(*shell_width) } else { None }, 0.1),
            }
        }
        "cylinder-limit" => Scenario::CylinderLimit,
        other => bail!(input(format!(
            "`{other}` is neither a readable file nor a preset (flat, cone, smoothed-cone, gaussian-bump, dirac-cluster, cylinder-limit)"
        ))),
    };
    s.validate().map_err(anyhow::Error::new)?;
    Ok(s)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn resolve_measure(source: &str, dim: Dim, a: &PresetArgs, cfg: &Config) -> Result<SignedMeasure> {
    let path = Path::new(source);
    if path.is_file() {
        return io::read_measure(open(path)?, dim).with_context(|| format!("reading {source}"));
    }
    let s = scenario_from(source, a, cfg)?;
    Ok(s.measure(dim)?)
}

fn resolve_factor(source: &str, dim: Dim, a: &PresetArgs, cfg: &Config) -> Result<ConformalFactor> {
    let path = Path::new(source);
    if path.is_file() {
        let mut text = String::new();
        std::io::Read::read_to_string(&mut open(path)?, &mut text)?;
        let f = if io::is_radial_text(&text) {
            let d = io::read_radial_density(text.as_bytes(), dim).with_context(|| format!("reading {source}"))?;
            ConformalFactor::from_radial_samples(dim, d.radii().to_vec(), d.values().to_vec())?
        } else {
            if dim != Dim::Two {
                bail!(input("planar factor files need --dimension 2"));
            }
            let d = io::read_planar_density(text.as_bytes()).with_context(|| format!("reading {source}"))?;
            ConformalFactor::from_planar_samples(d.grid, d.values)?
        };
        return Ok(f);
    }
    let s = scenario_from(source, a, cfg)?;
    Ok(s.factor(dim, &Scenario::default_factor_radii())?)
}

fn resolve_weight(source: &str, dim: Dim, a: &PresetArgs, cfg: &Config) -> Result<WeightField> {
    let path = Path::new(source);
    if path.is_file() {
        return io::read_weight_field(open(path)?, dim).with_context(|| format!("reading {source}"));
    }
    let f = resolve_factor(source, dim, a, cfg)?;
    Ok(WeightField::from_factor(&f)?)
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || input(format!("range `{s}` must be lo:hi:count with 0 < lo < hi and count >= 2"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(bad());
    }
    Ok(log_space(lo, hi, n))
}

fn parse_point(s: &str, dim: Dim) -> Result<Point> {
    let c: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| input(format!("point `{s}` must be comma-separated numbers")))?;
    if c.len() != dim.n() && c.len() != 2 {
        bail!(input(format!("point `{s}` needs {} coordinates", dim.n())));
    }
    Ok(Point::from_slice(&c)?)
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, v: &T) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn potential(mu: &SignedMeasure, basepoint: Option<&str>, radii: &str, out: Option<&Path>) -> Result<bool> {
    let dim = mu.dim();
    let x0 = match basepoint {
        Some(s) => Basepoint::new(mu, parse_point(s, dim)?)?,
        None => Basepoint::default_for(mu)?,
    };
    let points: Vec<Point> = match mu.planar_density() {
        Some(p) => {
            let g = p.grid;
            (0..g.ny)
                .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
                .map(|(i, j)| {
                    let (x, y) = g.center(i, j);
                    Point::xy(x, y)
                })
                .collect()
        }
        None => parse_range(radii)?.into_iter().map(Point::on_axis).collect(),
    };
    let coords = ["x1", "x2", "x3", "x4"];
    let mut header: Vec<&str> = coords[..dim.n()].to_vec();
    header.extend(["L", "L_tilde", "w", "omega"]);
    let mut rows = Vec::with_capacity(points.len());
    for x in points {
        // w = 𝔏̃(μ), the factor of P = c_n μ
        let l = log_potential(mu, x)?;
        let lt = basepoint_potential(mu, &x0, x)?;
        let mut row = x.coords(dim).to_vec();
        row.extend([l, lt, lt, (dim.nf() * lt).exp()]);
        rows.push(row);
    }
    io::write_csv(writer(out)?, &header, rows)?;
    Ok(true)
}

fn profile_report(p: &RadialProfile, dim: Dim, source: Value) -> Result<Value> {
    let d = dilatation_radial(p);
    let lo = p.r_min().max(1e-300);
    let hi = p.r_max();
    let samples: Vec<[f64; 2]> = log_space(lo, hi, 25).into_iter().map(|r| [r, p.jacobian(dim, r)]).collect();
    Ok(json!({
        "source": source,
        "dimension": dim.n(),
        "H": d.h,
        "argmax_radius": d.argmax_radius,
        "sigma_min": d.sigma_min,
        "sigma_max": d.sigma_max,
        "jacobian_samples": samples,
        "nodes": p.len(),
    }))
}

fn qcmap(
    dim: Dim,
    cone: Option<f64>,
    match_weight: Option<&Path>,
    compose: Option<Vec<PathBuf>>,
    out: Option<&Path>,
    report: Option<&Path>,
) -> Result<bool> {
    let chosen = cone.is_some() as u8 + match_weight.is_some() as u8 + compose.is_some() as u8;
    if chosen != 1 {
        bail!(input("give exactly one of --cone, --match-weight, --compose"));
    }
    let (p, source) = if let Some(beta) = cone {
        (cone_profile(beta, dim.n())?, json!({"cone": beta}))
    } else if let Some(path) = match_weight {
        let d = io::read_radial_density(open(path)?, dim).with_context(|| format!("reading {}", path.display()))?;
        let (p, _) = volume_matching_profile(d.radii(), d.values(), dim.n())?;
        (p, json!({"match_weight": path.display().to_string()}))
    } else {
        let files = compose.unwrap_or_default();
        let a = io::read_profile(open(&files[0])?).with_context(|| format!("reading {}", files[0].display()))?;
        let b = io::read_profile(open(&files[1])?).with_context(|| format!("reading {}", files[1].display()))?;
        let names: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
        (compose_radial(&a, &b)?, json!({"compose": names}))
    };
    if let Some(o) = out {
        io::write_profile(writer(Some(o))?, &p)?;
    }
    let rep = profile_report(&p, dim, source)?;
    if report.is_some() || out.is_none() {
        write_json(report, &rep)?;
    }
    Ok(true)
}

fn mbeta(
    dim: Dim,
    grid: MbetaGrid,
    a: &PresetArgs,
    cfg: &Config,
    out: Option<&Path>,
    report: Option<&Path>,
) -> Result<bool> {
    let base = match cfg.scenario {
        Some(Scenario::SmoothedCone { beta, delta }) => Some((beta, delta)),
        _ => None,
    };
    let beta = a.beta.or(base.map(|b| b.0)).unwrap_or(0.5);
    let delta = a.delta.or(cfg.delta).or(base.map(|b| b.1)).unwrap_or(0.1);
    let cone = build_smoothed_cone(beta, delta)?;
    let m = build_mbeta_on(&cone, dim.n(), grid)?;
    let (spread, mean) = verify_potential_identity(&m, &cone, dim.n(), &identity_samples())?;
    let d = m.diagnostics;
    let mass_err = if beta != 0.0 { (d.mass - beta).abs() / beta.abs() } else { d.mass.abs() };
    let flux_err = if beta != 0.0 { (d.mass - d.boundary_mass).abs() / beta.abs() } else { 0.0 };
    let spread_tol = if dim == Dim::Two { 1e-2 } else { 5e-2 };
    let checks = vec![
        check("mass", mass_err, 1e-3),
        check("volume_vs_flux", flux_err, 1e-3),
        check("support_leak", d.support_leak, 1e-8),
        check("potential_identity_spread", spread, spread_tol),
    ];
    let passed = checks.iter().all(|c| c["passed"] == json!(true));
    if let Some(o) = out {
        if let Some(rd) = m.measure.radial_density() {
            io::write_radial_density(writer(Some(o))?, rd)?;
        }
    }
    let rep = json!({
        "beta": beta,
        "delta": delta,
        "dimension": dim.n(),
        "grid_h": grid.h,
        "grid_r_max": grid.r_max,
        "diagnostics": d,
        "identity_spread": spread,
        "identity_mean": mean,
        "dilatation": cone.dilatation(),
        "checks": checks,
        "passed": passed,
    });
    write_json(report, &rep)?;
    Ok(passed)
}

fn check(name: &str, value: f64, tol: f64) -> Value {
    json!({"name": name, "value": value, "tolerance": tol, "passed": value <= tol})
}

#[allow(clippy::too_many_arguments)]
fn weights(
    w: &WeightField,
    test: WeightTest,
    p: f64,
    rexp: f64,
    pairs: usize,
    count: usize,
    seed: u64,
    report: Option<&Path>,
) -> Result<bool> {
    let dim = w.dim();
    let balls = match w {
        WeightField::Planar(d) => BallFamily::seeded_in_grid(&d.grid, count, 2.0 * d.grid.dx.max(d.grid.dy), seed),
        WeightField::Radial { .. } => BallFamily::seeded(dim, count, 10.0, 1e-3, count / 4, seed),
    };
    let mut rep: BTreeMap<&str, Value> = BTreeMap::new();
    rep.insert("dimension", json!(dim.n()));
    rep.insert("seed", json!(seed));
    let value = match test {
        WeightTest::A1 => {
            let (points, radii) = match w {
                WeightField::Planar(d) => {
                    let g = d.grid;
                    let (cx, cy) = (g.x0 + 0.5 * g.nx as f64 * g.dx, g.y0 + 0.5 * g.ny as f64 * g.dy);
                    let half = 0.45 * (g.nx as f64 * g.dx).min(g.ny as f64 * g.dy);
                    let pts = [(0.0, 0.0), (0.3, 0.0), (0.0, 0.3), (-0.3, -0.3)]
                        .iter()
                        .map(|(a, b)| Point::xy(cx + a * half, cy + b * half))
                        .collect::<Vec<_>>();
                    (pts, log_space(2.0 * g.dx.max(g.dy), 0.6 * half, 20))
                }
                WeightField::Radial { .. } => (
                    log_space(1e-3, 1.0, 13).into_iter().map(Point::on_axis).collect(),
                    log_space(1e-4, 10.0, 50),
                ),
            };
            rep.insert("test", json!("a1"));
            rep.insert("points", json!(points.len()));
            rep.insert("radii", json!(radii.len()));
            a1_ratio(w, &points, &radii)?
        }
        WeightTest::Ap => {
            rep.insert("test", json!("ap"));
            rep.insert("p", json!(p));
            rep.insert("balls", json!(balls.balls.len()));
            ap_constant(w, p, &balls)?
        }
        WeightTest::Rh => {
            rep.insert("test", json!("rh"));
            rep.insert("r_exponent", json!(rexp));
            rep.insert("balls", json!(balls.balls.len()));
            reverse_holder(w, rexp, &balls)?
        }
        WeightTest::Strong => {
            let list = match w {
                WeightField::Planar(d) => {
                    let g = d.grid;
                    let (cx, cy) = (g.x0 + 0.5 * g.nx as f64 * g.dx, g.y0 + 0.5 * g.ny as f64 * g.dy);
                    let half = 0.3 * (g.nx as f64 * g.dx).min(g.ny as f64 * g.dy);
                    seeded_pairs(Dim::Two, pairs, half, seed)
                        .into_iter()
                        .map(|(a, b)| {
                            let s = |q: Point| Point::xy(q.0[0] + cx, q.0[1] + cy);
                            (s(a), s(b))
                        })
                        .collect::<Vec<_>>()
                }
                WeightField::Radial { .. } => seeded_pairs(dim, pairs, 2.0, seed),
            };
            let s = strong_ainfty_report(w, &list)?;
            rep.insert("test", json!("strong"));
            rep.insert("strong", json!(s));
            rep.insert("is_strong", json!(s.is_strong()));
            if s.is_strong() {
                s.c_upper.max(s.c_lower)
            } else {
                f64::INFINITY
            }
        }
    };
    let passed = value.is_finite();
    rep.insert("value", json!(if passed { json!(value) } else { json!("inf") }));
    rep.insert("passed", json!(passed));
    write_json(report, &rep)?;
    Ok(passed)
}

fn iso(f: &ConformalFactor, kind: FamilyKind, count: usize, seed: u64, finn: &str, report: Option<&Path>) -> Result<bool> {
    let fam = DomainFamily::seeded(f.dim, kind, count, seed)?;
    let fam_rep = iso_family_report(&fam, f)?;
    let (finn_radii, finn_vals) = match f.samples {
        FactorSamples::Radial { .. } => {
            let r = parse_range(finn)?;
            let v = finn_constant(f, &r)?;
            (r, v)
        }
        FactorSamples::Planar { .. } => (Vec::new(), Vec::new()),
    };
    let passed = fam_rep.sup_ratio.is_finite();
    let rep = json!({
        "dimension": f.dim.n(),
        "family": kind,
        "family_report": fam_rep,
        "finn_radii": finn_radii,
        "finn": finn_vals,
        "nu": finn_vals.last(),
        "passed": passed,
    });
    write_json(report, &rep)?;
    Ok(passed)
}

fn decompose(mu: &SignedMeasure, opts: &DecomposeOptions, report: Option<&Path>, map: Option<&Path>) -> Result<bool> {
    let radial = mu.is_radial() && mu.planar_density().is_none();
    let rep = if radial {
        let (profile, rep) = constructive_theorem_main(mu, opts)?;
        if let Some(m) = map {
            io::write_profile(writer(Some(m))?, &profile)?;
        }
        rep
    } else {
        if map.is_some() {
            bail!(input("--out-map needs a radial measure"));
        }
        confmetric::decompose(mu, opts)?.report
    };
    let tv = total_variation(mu);
    let checks = vec![
        json!({"name": "tail_below_threshold", "value": rep.tail_variation, "threshold": rep.tail_threshold,
               "passed": rep.tail_variation < rep.tail_threshold}),
        check("h_mean_zero", rep.h_mass.abs() / tv.max(1e-300), 1e-6),
        check("reconstruction", rep.reconstruction_error, 1e-12),
        check("mass_reconstruction", rep.mass_reconstruction_error, 1e-5),
        json!({"name": "far_field_decays", "passed": rep.far_field_decays}),
    ];
    let passed = checks.iter().all(|c| c["passed"] == json!(true));
    let doc = json!({
        "dimension": mu.dim().n(),
        "total_mass": total_mass(mu),
        "report": rep,
        "options": {"delta": opts.delta, "grid_h": opts.grid.h, "lattice": opts.lattice,
                    "factor_radii": opts.factor_radii.len()},
        "checks": checks,
        "passed": passed,
    });
    write_json(report, &doc)?;
    Ok(passed)
}
