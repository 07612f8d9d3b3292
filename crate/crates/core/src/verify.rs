//! The acceptance checks, one function per criterion, plus per-scenario reports.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decompose::{
    bilipschitz_check, constructive_profile, constructive_theorem_main, decompose, DecomposeOptions,
};
use crate::error::{Error, Result};
use crate::geom::{log_grid_per_decade, log_space, Ball, Dim, Point};
use crate::isoperimetry::{
    finn_constant, iso_family_report, isoperimetric_ratio, Domain, DomainFamily, FamilyKind,
};
use crate::mbeta::{build_mbeta_on, build_smoothed_cone, identity_samples, verify_potential_identity, MbetaGrid};
use crate::measures::{
    restrict_ball, total_mass, total_variation, GridSpec, PlanarDensity, RadialDensity, SignedMeasure,
};
use crate::potential::{c_n, restriction_convergence, Basepoint};
use crate::presets::{factor_of, Scenario};
use crate::qcmaps::{cone_profile, dilatation_radial, jacobian_radial};
use crate::weights::{a1_ratio, seeded_pairs, strong_ainfty_report, WeightField};

/// Seed shared by the seeded families of the acceptance checks.
pub const SEED: u64 = 20240601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    /// Wall time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<28} {} ({:.1}s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds
        )?;
        for n in &self.notes {
            write!(f, " | {n}")?;
        }
        Ok(())
    }
}

struct Check {
    metrics: BTreeMap<String, f64>,
    notes: Vec<String>,
    passed: bool,
}

impl Check {
    fn new() -> Self {
        Check { metrics: BTreeMap::new(), notes: Vec::new(), passed: true }
    }

    fn metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    /// Record a requirement; the check fails if any requirement fails.
    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.notes.push(format!("failed: {}", what.into()));
        }
    }
}

fn run(id: usize, name: &str, body: impl FnOnce(&mut Check) -> Result<()>) -> CheckResult {
    let start = Instant::now();
    let mut c = Check::new();
    if let Err(e) = body(&mut c) {
        c.passed = false;
        c.notes.push(format!("error: {e}"));
    }
    CheckResult {
        id,
        name: name.to_string(),
        passed: c.passed,
        seconds: start.elapsed().as_secs_f64(),
        metrics: c.metrics,
        notes: c.notes,
    }
}

pub const NAMES: [&str; 11] = [
    "cone_calculus",
    "mbeta_mass",
    "mbeta_support",
    "potential_identity",
    "finn_constants",
    "isoperimetric_boundedness",
    "weight_dichotomy",
    "a1_of_conformal_weight",
    "constructive_map",
    "decomposition_bookkeeping",
    "restriction_convergence",
];

/// Run one check by number (1-based).
pub fn criterion(id: usize) -> Result<CheckResult> {
    Ok(match id {
        1 => cone_calculus(),
        2 => mbeta_mass(),
        3 => mbeta_support(),
        4 => potential_identity(),
        5 => finn_constants(),
        6 => isoperimetric_boundedness(),
        7 => weight_dichotomy(),
        8 => a1_of_conformal_weight(),
        9 => constructive_map(),
        10 => decomposition_bookkeeping(),
        11 => restriction_convergence_check(),
        _ => return Err(Error::param("criterion", format!("{id} is not in 1..=11"))),
    })
}

pub fn run_all() -> Vec<CheckResult> {
    (1..=11).map(|i| criterion(i).expect("valid id")).collect()
}

const DIMS: [Dim; 2] = [Dim::Two, Dim::Four];

pub fn cone_calculus() -> CheckResult {
    run(1, NAMES[0], |c| {
        let mut worst_j = 0.0f64;
        let mut worst_h = 0.0f64;
        for dim in DIMS {
            let n = dim.n();
            for beta in [-1.0, 0.0, 0.25, 0.5, 0.9] {
                let p = cone_profile(beta, n)?;
                for r in log_space(1e-6, 1e6, 25) {
                    let j = jacobian_radial(&p, n, r)?;
                    let exact = (1.0 - beta) * r.powf(-dim.nf() * beta);
                    worst_j = worst_j.max((j / exact - 1.0).abs());
                }
                // H = max(σ, 1/σ) with σ = 1 - β
                let a = 1.0 - beta;
                let expected = a.max(1.0 / a);
                worst_h = worst_h.max((dilatation_radial(&p).h / expected - 1.0).abs());
            }
        }
        c.metric("jacobian_rel_err", worst_j);
        c.metric("dilatation_rel_err", worst_h);
        c.require(worst_j <= 1e-10, format!("Jacobian error {worst_j:e} > 1e-10"));
        c.require(worst_h <= 1e-9, format!("dilatation error {worst_h:e} > 1e-9"));
        c.notes.push(format!("max rel err J {worst_j:.1e}, H {worst_h:.1e}"));
        Ok(())
    })
}

fn mbeta_cases() -> Vec<(f64, f64, Dim)> {
    let mut v = Vec::new();
    for dim in DIMS {
        for beta in [0.25, 0.5, 0.9] {
            for delta in [0.05, 0.1] {
                v.push((beta, delta, dim));
            }
        }
    }
    v
}

pub fn mbeta_mass() -> CheckResult {
    run(2, NAMES[1], |c| {
        let mut worst = 0.0f64;
        let mut worst_flux = 0.0f64;
        for (beta, delta, dim) in mbeta_cases() {
            let m = build_mbeta_on(&build_smoothed_cone(beta, delta)?, dim.n(), MbetaGrid::default())?;
            let d = m.diagnostics;
            worst = worst.max((d.mass - beta).abs() / beta);
            worst_flux = worst_flux.max((d.mass - d.boundary_mass).abs() / beta);
        }
        c.metric("mass_rel_err", worst);
        c.metric("volume_vs_flux_rel", worst_flux);
        c.require(worst <= 1e-3, format!("mass error {worst:e}"));
        c.require(worst_flux <= 1e-3, format!("volume/flux disagreement {worst_flux:e}"));
        c.notes.push(format!("max rel mass err {worst:.1e}, volume vs flux {worst_flux:.1e}"));
        Ok(())
    })
}

pub fn mbeta_support() -> CheckResult {
    run(3, NAMES[2], |c| {
        let mut worst = 0.0f64;
        let mut plain = 0.0f64;
        for (beta, delta, dim) in mbeta_cases() {
            let m = build_mbeta_on(&build_smoothed_cone(beta, delta)?, dim.n(), MbetaGrid::default())?;
            worst = worst.max(m.diagnostics.support_leak);
            plain = plain.max(m.diagnostics.plain_stencil_leak);
        }
        c.metric("support_leak", worst);
        c.metric("plain_stencil_leak", plain);
        c.require(worst <= 1e-8, format!("leak {worst:e} > 1e-8"));
        c.notes.push(format!("max leak {worst:.1e} (plain stencil {plain:.1e})"));
        Ok(())
    })
}

pub fn potential_identity() -> CheckResult {
    run(4, NAMES[3], |c| {
        let radii = identity_samples();
        let mut worst_order = f64::INFINITY;
        for dim in DIMS {
            let tol = if dim == Dim::Two { 1e-2 } else { 5e-2 };
            let mut worst_spread = 0.0f64;
            for beta in [0.25, 0.5, 0.9] {
                let cone = build_smoothed_cone(beta, 0.1)?;
                let mut spreads = Vec::new();
                for h in [1e-3, 5e-4, 2.5e-4] {
                    let m = build_mbeta_on(&cone, dim.n(), MbetaGrid { h, r_max: 1.2 })?;
                    spreads.push(verify_potential_identity(&m, &cone, dim.n(), &radii)?.0);
                }
                let order = (spreads[1] / spreads[2]).log2();
                worst_order = worst_order.min(order);
                worst_spread = worst_spread.max(spreads[2]);
                c.metric(format!("n{}_beta{beta}_spread", dim.n()), spreads[2]);
                c.metric(format!("n{}_beta{beta}_order", dim.n()), order);
            }
            c.require(worst_spread <= tol, format!("n = {} spread {worst_spread:e} > {tol:e}", dim.n()));
            c.notes.push(format!("n={} max spread {worst_spread:.1e}", dim.n()));
        }
        // second order: halving h divides the spread by about 4
        c.require(worst_order >= 1.6, format!("observed order {worst_order:.2} < 1.6"));
        c.notes.push(format!("min observed order {worst_order:.2}"));
        Ok(())
    })
}

/// Radial density `∝ (1 - r²)³` on the unit ball with total mass `alpha`.
pub fn compact_bump(dim: Dim, alpha: f64) -> Result<SignedMeasure> {
    let r = log_space(1e-4, 1.0, 600);
    let d = RadialDensity::from_fn(dim, r, |x| (1.0 - x * x).max(0.0).powi(3))?;
    let m = SignedMeasure::radial(dim, d);
    let k = alpha / total_mass(&m);
    Ok(m.scaled(k))
}

pub fn finn_constants() -> CheckResult {
    run(5, NAMES[4], |c| {
        let radii = log_space(1.0, 1e10, 11);
        for dim in DIMS {
            for alpha in [0.25, 0.5, 0.75] {
                let mu = compact_bump(dim, alpha)?;
                let f = factor_of(&mu, &Scenario::default_factor_radii())?;
                let nu = finn_constant(&f, &radii)?;
                let last = *nu.last().unwrap();
                let err = (last / (1.0 - alpha) - 1.0).abs();
                c.metric(format!("n{}_alpha{alpha}_nu", dim.n()), last);
                c.require(err <= 0.02, format!("n = {} α = {alpha}: ν = {last} vs {}", dim.n(), 1.0 - alpha));
                c.notes.push(format!("n={} α={alpha} ν={last:.5}", dim.n()));
            }
        }
        Ok(())
    })
}

pub fn isoperimetric_boundedness() -> CheckResult {
    run(6, NAMES[5], |c| {
        let coarse_r = log_space(1e-6, 1e6, 361);
        let fine_r = Scenario::default_factor_radii();
        let presets = [
            Scenario::Cone { beta: 0.5 },
            Scenario::Cone { beta: 0.75 },
            Scenario::SmoothedCone { beta: 0.5, delta: 0.1 },
            Scenario::DiracCluster { terms: 20, shell_width: 0.1 },
        ];
        for dim in DIMS {
            let fam = DomainFamily::seeded(dim, FamilyKind::Mixed, 200, SEED)?;
            for s in presets {
                let coarse_mu = s.measure_on(dim, MbetaGrid { h: 5e-4, r_max: 1.2 })?;
                let fine_mu = s.measure_on(dim, MbetaGrid::default())?;
                let a = iso_family_report(&fam, &factor_of(&coarse_mu, &coarse_r)?)?.sup_ratio;
                let b = iso_family_report(&fam, &factor_of(&fine_mu, &fine_r)?)?.sup_ratio;
                let rel = (b / a - 1.0).abs();
                let key = format!("n{}_{}_{}", dim.n(), s.name(), s.alpha());
                c.metric(format!("{key}_sup"), b);
                c.metric(format!("{key}_refine_rel"), rel);
                c.require(b.is_finite() && a.is_finite(), format!("{key}: sup not finite"));
                c.require(rel <= 0.05, format!("{key}: refinement change {rel:.3}"));
            }
        }
        // cylinder limit: ratio of annuli (1, r) ~ (log r)^{3/4}
        let f = Scenario::CylinderLimit.factor(Dim::Four, &log_space(1e-3, 1e4, 141))?;
        let ts = [2.0f64, 3.0, 4.0, 5.0, 6.0];
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t| Ok(isoperimetric_ratio(&Domain::annulus(1.0, t.exp())?, &f)?.ln()))
            .collect::<Result<_>>()?;
        let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let slope = least_squares_slope(&xs, &ys);
        c.metric("cylinder_log_slope", slope);
        c.require((slope / 0.75 - 1.0).abs() <= 0.10, format!("cylinder exponent {slope:.4}"));
        c.notes.push(format!("cylinder exponent {slope:.4}"));
        Ok(())
    })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Radial samples of `|x|^γ` at refinement level `level`.
fn power_weight(dim: Dim, gamma: f64, level: i32) -> Result<WeightField> {
    let r = log_grid_per_decade(10f64.powi(-4 - 2 * level), 1e3, 10 << level);
    let v: Vec<f64> = r.iter().map(|x| x.powf(gamma)).collect();
    WeightField::radial(dim, r, &v)
}

fn a1_sets(level: i32) -> (Vec<Point>, Vec<f64>) {
    let inner = 10f64.powi(-2 - 2 * level);
    let pts = log_space(inner, 1.0, 12 + 6 * level as usize).into_iter().map(Point::on_axis).collect();
    let radii = log_space(0.1 * inner, 10.0, 40 + 10 * level as usize);
    (pts, radii)
}

pub fn weight_dichotomy() -> CheckResult {
    run(7, NAMES[6], |c| {
        for dim in DIMS {
            for alpha in [0.25, 0.5] {
                let vals: Vec<f64> = (0..3)
                    .map(|l| {
                        let (p, r) = a1_sets(l);
                        a1_ratio(&power_weight(dim, -dim.nf() * alpha, l)?, &p, &r)
                    })
                    .collect::<Result<_>>()?;
                let spread = vals.iter().cloned().fold(0.0, f64::max) / vals.iter().cloned().fold(f64::INFINITY, f64::min);
                c.metric(format!("n{}_alpha{alpha}_a1", dim.n()), vals[2]);
                c.require(vals.iter().all(|v| v.is_finite()) && spread <= 1.05, format!("n = {} α = {alpha}: A1 ratios {vals:?}", dim.n()));
            }
            let vals: Vec<f64> = (0..3)
                .map(|l| {
                    let (p, r) = a1_sets(l);
                    a1_ratio(&power_weight(dim, 0.5, l)?, &p, &r)
                })
                .collect::<Result<_>>()?;
            let growth = vals[2] / vals[0];
            c.metric(format!("n{}_growing_a1_growth", dim.n()), growth);
            c.require(growth >= 10.0, format!("n = {}: |x|^0.5 A1 growth {growth:.2}", dim.n()));
            c.notes.push(format!("n={} |x|^0.5 A1 growth {growth:.0}x", dim.n()));
        }

        // |x₁|^{1/2}: axis pairs have zero ω-length on grids with an axis column
        let ys = [-0.8, -0.5, -0.2, 0.1, 0.4, 0.7];
        let pairs: Vec<(Point, Point)> = ys
            .iter()
            .zip(ys.iter().skip(1))
            .map(|(&a, &b)| (Point::xy(0.0, a), Point::xy(0.0, b)))
            .collect();
        let mut first = None;
        let mut flagged = true;
        for (l, cells) in [41usize, 81, 161].into_iter().enumerate() {
            let grid = GridSpec::centered(1.0, cells)?;
            let w = WeightField::planar_fn(grid, |x, _| x.abs().sqrt())?;
            let rep = strong_ainfty_report(&w, &pairs)?;
            flagged &= rep.failure_witness.is_some();
            c.metric(format!("axis_delta_over_d_level{l}"), rep.c_lower);
            first.get_or_insert(rep.c_lower);
        }
        let growth_ok = flagged || {
            let last = c.metrics["axis_delta_over_d_level2"];
            last / first.unwrap() >= 10.0
        };
        c.require(growth_ok, "axis pairs not flagged and δ/d_ω growth below 10x");
        // grids without an axis column only approach the axis at distance h/2
        let mut off = Vec::new();
        for cells in [40usize, 80, 160] {
            let grid = GridSpec::centered(1.0, cells)?;
            let w = WeightField::planar_fn(grid, |x, _| x.abs().sqrt())?;
            off.push(strong_ainfty_report(&w, &pairs)?.c_lower);
        }
        c.metric("offset_grid_growth", off[2] / off[0]);
        c.notes.push(format!(
            "|x1|^0.5 axis pairs flagged (d_w = 0) at all levels: {flagged}; offset-grid growth {:.2}x",
            off[2] / off[0]
        ));
        Ok(())
    })
}

pub fn a1_of_conformal_weight() -> CheckResult {
    run(8, NAMES[7], |c| {
        for dim in DIMS {
            for alpha in [0.25, 0.5] {
                let mu = Scenario::GaussianBump { mass: alpha, width: 0.3 }.measure(dim)?;
                let vals: Vec<f64> = (0..3)
                    .map(|l: i32| {
                        let r = log_grid_per_decade(1e-6, 1e6, 20 << l);
                        let w = WeightField::from_factor(&factor_of(&mu, &r)?)?;
                        let (p, radii) = a1_sets(l);
                        a1_ratio(&w, &p, &radii)
                    })
                    .collect::<Result<_>>()?;
                let hi = vals.iter().cloned().fold(0.0, f64::max);
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                c.metric(format!("n{}_alpha{alpha}_a1", dim.n()), hi);
                c.require(hi.is_finite() && hi / lo <= 1.05, format!("n = {} α = {alpha}: {vals:?}", dim.n()));
                c.notes.push(format!("n={} α={alpha} A1 {hi:.3}", dim.n()));
            }
        }
        Ok(())
    })
}

pub fn constructive_map() -> CheckResult {
    run(9, NAMES[8], |c| {
        let opts = DecomposeOptions { lattice: 60, ..Default::default() };
        for dim in DIMS {
            for alpha in [0.25, 0.5] {
                let mu = Scenario::SmoothedCone { beta: alpha, delta: 0.1 }.measure(dim)?;
                let (profile, rep) = constructive_theorem_main(&mu, &opts)?;
                let (lo, hi) = rep.comparability.unwrap_or((f64::NAN, f64::NAN));
                let h = rep.dilatation_h.unwrap_or(f64::NAN);
                let key = format!("n{}_alpha{alpha}", dim.n());
                c.metric(format!("{key}_H"), h);
                c.metric(format!("{key}_J_over_weight_min"), lo);
                c.metric(format!("{key}_J_over_weight_max"), hi);
                c.require(lo >= 1.0 - 1e-3 && hi <= 1.0 + 1e-3, format!("{key}: J/e^(nw) in [{lo}, {hi}]"));
                c.require(h <= 1.1 / (1.0 - alpha), format!("{key}: H = {h}"));
                let f = factor_of(&mu, &opts.factor_radii)?;
                let pairs = seeded_pairs(dim, 100, 2.0, SEED);
                let bl = bilipschitz_check(&profile, &f, &pairs)?;
                c.metric(format!("{key}_bilipschitz_spread"), bl.spread);
                c.require(bl.spread <= 3.0, format!("{key}: bi-Lipschitz spread {}", bl.spread));
                c.notes.push(format!("n={} α={alpha} H={h:.4} spread={:.3}", dim.n(), bl.spread));
            }
        }
        Ok(())
    })
}

pub fn decomposition_bookkeeping() -> CheckResult {
    run(10, NAMES[9], |c| {
        for dim in DIMS {
            for s in [
                Scenario::GaussianBump { mass: 0.5, width: 0.2 },
                Scenario::DiracCluster { terms: 20, shell_width: 0.1 },
            ] {
                let mu = s.measure(dim)?;
                let mut c2 = Vec::new();
                for h in [5e-4, 2.5e-4] {
                    let opts = DecomposeOptions {
                        epsilon0_override: Some(1e-6),
                        grid: MbetaGrid { h, r_max: 1.2 },
                        ..Default::default()
                    };
                    let rep = decompose(&mu, &opts)?.report;
                    let key = format!("n{}_{}", dim.n(), s.name());
                    c.require(rep.h_mass.abs() <= 1e-6 * rep.total_variation, format!("{key}: ∫h = {}", rep.h_mass));
                    c.require(rep.tail_variation < rep.tail_threshold, format!("{key}: tail {}", rep.tail_variation));
                    c.require(rep.tail_threshold <= 1e-6, format!("{key}: threshold {}", rep.tail_threshold));
                    c.require(rep.reconstruction_error <= 1e-12, format!("{key}: reconstruction {}", rep.reconstruction_error));
                    c.require(rep.mass_reconstruction_error <= 1e-5, format!("{key}: mass reconstruction {}", rep.mass_reconstruction_error));
                    c.require(rep.c2.is_finite(), format!("{key}: C2 not finite"));
                    c.metric(format!("{key}_mass_reconstruction"), rep.mass_reconstruction_error);
                    c2.push(rep.c2);
                }
                let rel = (c2[1] / c2[0] - 1.0).abs();
                let key = format!("n{}_{}", dim.n(), s.name());
                c.metric(format!("{key}_C2"), c2[1]);
                c.metric(format!("{key}_C2_refine_rel"), rel);
                c.require(rel <= 0.01, format!("{key}: C2 changed by {rel:.4}"));
                c.notes.push(format!("{key} C2={:.4}", c2[1]));
            }
        }
        Ok(())
    })
}

/// Radius containing 99% of `|μ|`, from the sampled radii.
fn variation_radius(mu: &SignedMeasure, q: f64) -> Result<f64> {
    let tv = total_variation(mu);
    for r in log_grid_per_decade(1e-3, 1e6, 40) {
        if total_variation(&restrict_ball(mu, r)?) >= q * tv {
            return Ok(r);
        }
    }
    Err(Error::Diagnostic("no 99% variation radius below 1e6".into()))
}

pub fn restriction_convergence_check() -> CheckResult {
    run(11, NAMES[10], |c| {
        // n = 4 radial, heavy tail (1 + r²)^{-4}
        let r = log_grid_per_decade(1e-3, 1e4, 40);
        let d = RadialDensity::from_fn(Dim::Four, r, |x| (1.0 + x * x).powi(-4))?;
        let m = SignedMeasure::radial(Dim::Four, d);
        let radial = m.scaled(0.5 / total_mass(&m));
        // n = 2 planar, off-centre
        let grid = GridSpec::centered(6.0, 96)?;
        let p = PlanarDensity::from_fn(grid, |x, y| {
            let q = (x - 0.5).powi(2) + y * y;
            0.4 / std::f64::consts::PI / (1.0 + q).powi(2)
        })?;
        let planar = SignedMeasure::planar(p);
        for (label, mu, ball) in [
            ("n4_radial", radial, Ball::new(Point::on_axis(0.5), 1.0)),
            ("n2_planar", planar, Ball::new(Point::xy(0.3, 0.2), 0.8)),
        ] {
            let k99 = variation_radius(&mu, 0.99)?;
            let ks: Vec<f64> = (0..6).map(|j| k99 * 2f64.powi(j)).collect();
            let pm = mu.scaled(c_n(mu.dim()));
            let x0 = Basepoint::default_for(&pm)?;
            let seq = restriction_convergence(&pm, &x0, &ball, &ks)?;
            let monotone = seq.windows(2).all(|w| w[1] <= w[0]);
            let last = *seq.last().unwrap();
            c.metric(format!("{label}_k99"), k99);
            c.metric(format!("{label}_first"), seq[0]);
            c.metric(format!("{label}_last"), last);
            c.require(monotone, format!("{label}: sequence not decreasing {seq:?}"));
            c.require(last < 1e-3, format!("{label}: last value {last:e}"));
            c.notes.push(format!("{label} k99={k99:.2} seq {:.1e} -> {last:.1e}", seq[0]));
        }
        Ok(())
    })
}

/// Named scalar check inside a scenario report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCheck {
    pub name: String,
    pub value: f64,
    /// Absent for checks that only require a finite value.
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl NamedCheck {
    fn rel(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        let passed = ((value - expected) / expected).abs() <= tolerance;
        NamedCheck { name: name.into(), value, expected: Some(expected), tolerance: Some(tolerance), passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub dimension: usize,
    pub alpha: f64,
    #[serde(rename = "H")]
    pub dilatation_h: Option<f64>,
    pub finn_radii: Vec<f64>,
    pub finn: Vec<f64>,
    pub nu: Option<f64>,
    pub iso_sup: f64,
    pub family: FamilyKind,
    pub family_seed: u64,
    pub family_count: usize,
    pub factor_radii: usize,
    pub checks: Vec<NamedCheck>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Dilatation, Finn constant and isoperimetric sup for one scenario.
pub fn scenario_report(s: &Scenario, dim: Dim, family_count: usize, seed: u64) -> Result<ScenarioReport> {
    let radii = Scenario::default_factor_radii();
    let f = s.factor(dim, &radii)?;
    let alpha = s.alpha();
    // |x|^{-n} gives every domain around the origin infinite volume
    let cylinder = matches!(s, Scenario::CylinderLimit);
    let finn_radii = if cylinder { Vec::new() } else { log_space(1.0, 1e10, 11) };
    let finn = finn_constant(&f, &finn_radii).or_else(|e| if cylinder { Ok(Vec::new()) } else { Err(e) })?;
    let nu = finn.last().copied();
    let kind = if cylinder { FamilyKind::Annuli } else { FamilyKind::Mixed };
    let fam = DomainFamily::seeded(dim, kind, family_count, seed)?;
    let iso = iso_family_report(&fam, &f)?;
    let mut checks = Vec::new();
    let dilatation_h = if alpha < 1.0 {
        let (_, h) = constructive_profile(&f)?;
        Some(h)
    } else {
        None
    };
    match s {
        Scenario::Flat => {
            checks.push(NamedCheck::rel("dilatation", dilatation_h.unwrap_or(f64::NAN), 1.0, 1e-9));
            checks.push(NamedCheck::rel("finn_constant", nu.unwrap_or(f64::NAN), 1.0, 1e-9));
            let ball = Domain::ball(Point::ORIGIN, 1.0)?;
            let euclid = match dim {
                Dim::Two => 0.5 / std::f64::consts::PI.sqrt(),
                Dim::Four => dim.ball_volume().powf(0.75) / dim.sphere_area(),
            };
            checks.push(NamedCheck::rel("unit_ball_ratio", isoperimetric_ratio(&ball, &f)?, euclid, 1e-10));
        }
        Scenario::Cone { .. } | Scenario::SmoothedCone { .. } => {
            let a = 1.0 - alpha;
            let expected = a.max(1.0 / a);
            let tol = if matches!(s, Scenario::Cone { .. }) { 1e-9 } else { 0.05 };
            checks.push(NamedCheck::rel("dilatation", dilatation_h.unwrap_or(f64::NAN), expected, tol));
            checks.push(NamedCheck::rel("finn_constant", nu.unwrap_or(f64::NAN), 1.0 - alpha, 0.02));
        }
        Scenario::GaussianBump { .. } | Scenario::DiracCluster { .. } => {
            checks.push(NamedCheck::rel("finn_constant", nu.unwrap_or(f64::NAN), 1.0 - alpha, 0.02));
        }
        Scenario::CylinderLimit => {
            let ts = [2.0f64, 4.0, 6.0];
            let ys: Vec<f64> = ts
                .iter()
                .map(|&t| Ok(isoperimetric_ratio(&Domain::annulus(1.0, t.exp())?, &f)?.ln()))
                .collect::<Result<_>>()?;
            let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
            let expo = least_squares_slope(&xs, &ys);
            let target = (dim.nf() - 1.0) / dim.nf();
            checks.push(NamedCheck::rel("annulus_log_exponent", expo, target, 0.10));
        }
    }
    checks.push(NamedCheck {
        name: "iso_sup_finite".into(),
        value: iso.sup_ratio,
        expected: None,
        tolerance: None,
        passed: iso.sup_ratio.is_finite(),
    });
    Ok(ScenarioReport {
        scenario: *s,
        dimension: dim.n(),
        alpha,
        dilatation_h,
        finn_radii,
        finn,
        nu,
        iso_sup: iso.sup_ratio,
        family: kind,
        family_seed: seed,
        family_count,
        factor_radii: radii.len(),
        checks,
    })
}
