//! Splitting `μ = m_β + μ_ε + h dx` and the radial constructive map.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{log_grid_per_decade, log_space, Dim, Point};
use crate::mbeta::{build_mbeta_with_mass, MbetaDiagnostics, MbetaGrid, SmoothedCone};
use crate::measures::{
    complement, radial_weights, restrict_ball, total_mass, total_variation, Density,
    PlanarDensity, RadialDensity, SignedMeasure,
};
use crate::potential::{basepoint_potential, log_potential, Basepoint, ConformalFactor, FactorSamples};
use crate::presets::{factor_of, Scenario};
use crate::qcmaps::{volume_matching_profile_log, RadialProfile};
use crate::weights::{geodesic_distance, WeightField};

/// `ε₀(n) = (n/128) 12^{-2n} e^{-4(n-1)n}`.
pub fn epsilon0(n: usize) -> Result<f64> {
    let dim = Dim::new(n)?;
    let nf = dim.nf();
    Ok(nf / 128.0 * 12f64.powf(-2.0 * nf) * (-4.0 * (nf - 1.0) * nf).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Epsilon0 {
    pub value: f64,
    pub overridden: bool,
}

/// The formula value, or a positive override.
pub fn resolve_epsilon0(n: usize, over: Option<f64>) -> Result<Epsilon0> {
    match over {
        Some(v) if v > 0.0 && v.is_finite() => Ok(Epsilon0 { value: v, overridden: true }),
        Some(v) => Err(Error::param("epsilon0", format!("override {v} must be positive"))),
        None => Ok(Epsilon0 { value: epsilon0(n)?, overridden: false }),
    }
}

/// Variation of a radial density beyond its last sample, from the power law
/// through the last two samples.
fn extrapolated_tail(dim: Dim, d: &RadialDensity) -> f64 {
    let (r, v) = (d.radii(), d.values());
    let m = r.len();
    let (v0, v1) = (v[m - 2], v[m - 1]);
    if v1 == 0.0 {
        return 0.0;
    }
    if v0 == 0.0 || v0.signum() != v1.signum() {
        return f64::INFINITY;
    }
    let a = (v1 / v0).ln() / (r[m - 1] / r[m - 2]).ln();
    let nf = dim.nf();
    if nf + a >= 0.0 {
        return f64::INFINITY;
    }
    dim.sphere_area() * v1.abs() * r[m - 1].powf(nf) / -(nf + a)
}

/// `|μ|(ℝⁿ \ B̄(0, r))`, including the extrapolated tail of a radial density.
pub fn tail_variation(mu: &SignedMeasure, r: f64) -> Result<f64> {
    let beyond = match mu.density() {
        Some(Density::Radial(d)) => extrapolated_tail(mu.dim(), d),
        _ => 0.0,
    };
    Ok(total_variation(&complement(mu, r)?) + beyond)
}

fn tail_candidates(mu: &SignedMeasure) -> Vec<f64> {
    let mut c = log_grid_per_decade(1e-3, 1e6, 40);
    c.extend(mu.atoms().iter().map(|a| a.location.norm()).filter(|&r| r > 0.0));
    match mu.density() {
        Some(Density::Radial(d)) => c.extend_from_slice(d.radii()),
        Some(Density::Planar(p)) => {
            let g = &p.grid;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let (x, y) = g.center(i, j);
                    c.push(x.hypot(y));
                }
            }
        }
        None => {}
    }
    c.retain(|&r| r > 0.0);
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Smallest candidate radius `R` with `|μ|(|x| > R) < min(ε₀, (1-α)/100)`.
pub fn choose_tail_radius(mu: &SignedMeasure, eps0: f64) -> Result<f64> {
    let alpha = total_mass(mu);
    if !(alpha < 1.0) {
        return Err(Error::MassTooLarge { alpha });
    }
    let threshold = eps0.min((1.0 - alpha) / 100.0);
    let c = tail_candidates(mu);
    let ok = |r: f64| -> Result<bool> { Ok(tail_variation(mu, r)? < threshold) };
    if !ok(*c.last().unwrap())? {
        return Err(Error::NoTailRadius { threshold });
    }
    // the tail variation is nonincreasing in r
    let (mut lo, mut hi) = (0usize, c.len() - 1);
    if ok(c[0])? {
        return Ok(c[0]);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(c[mid])? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(c[hi])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    /// Ramp parameter of `ψ_β`.
    pub delta: f64,
    pub epsilon0_override: Option<f64>,
    pub grid: MbetaGrid,
    /// Number of lattice points for the `C2` sup.
    pub lattice: usize,
    /// Radii for the conformal factor in the constructive map.
    pub factor_radii: Vec<f64>,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            delta: 0.1,
            epsilon0_override: None,
            grid: MbetaGrid::default(),
            lattice: 240,
            factor_radii: Scenario::default_factor_radii(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub alpha: f64,
    pub total_variation: f64,
    #[serde(rename = "R")]
    pub tail_radius: f64,
    pub tail_variation: f64,
    pub tail_threshold: f64,
    pub beta: f64,
    pub epsilon0: Epsilon0,
    pub h_mass: f64,
    pub h_sup: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub c2_argmax: [f64; 4],
    /// `lim_{|x|→∞} |𝔏̃(h dx)(x)| = |𝔏(h dx)(0)|`; part of the sup defining `C2`.
    pub c2_limit: f64,
    /// Whether the sup is attained only in the limit `|x| → ∞`.
    pub c2_at_infinity: bool,
    /// `(|x|, 𝔏(h dx)(x))` at `3R`, `6R`, `12R`.
    pub far_field: Vec<[f64; 2]>,
    pub far_field_decays: bool,
    /// `max |m_β + μ_ε + h - μ|` over the working nodes, relative to `sup |μ|`.
    pub reconstruction_error: f64,
    /// `|∫m_β + ∫μ_ε + ∫h - ∫μ| / ‖μ‖`.
    pub mass_reconstruction_error: f64,
    pub mbeta: Option<MbetaDiagnostics>,
    pub grid_h: f64,
    pub delta: f64,
    #[serde(rename = "dilatation_H")]
    pub dilatation_h: Option<f64>,
    pub comparability: Option<(f64, f64)>,
    pub psi_comparability_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub report: DecompositionReport,
    pub cone: Option<SmoothedCone>,
    pub mbeta: SignedMeasure,
    /// `μ_ε`, the part outside `B̄(0, R)`.
    pub tail: SignedMeasure,
    pub h: SignedMeasure,
}

/// The split `μ = m_β + μ_ε + h dx` with `β = μ(B̄(0, R))`.
pub fn decompose(mu: &SignedMeasure, opts: &DecomposeOptions) -> Result<Decomposition> {
    let dim = mu.dim();
    let alpha = total_mass(mu);
    if !(alpha < 1.0) {
        return Err(Error::MassTooLarge { alpha });
    }
    let eps = resolve_epsilon0(dim.n(), opts.epsilon0_override)?;
    let big_r = choose_tail_radius(mu, eps.value)?;
    if mu.atoms().iter().any(|a| a.weight != 0.0 && a.location.norm() <= big_r) {
        return Err(Error::UnmollifiedAtoms);
    }
    let tail = complement(mu, big_r)?;
    let tv = total_variation(mu);
    let tail_var = tail_variation(mu, big_r)?;
    let threshold = eps.value.min((1.0 - alpha) / 100.0);

    let (cone, mbeta, diag, h, beta, recon) = match mu.density() {
        Some(Density::Planar(p)) => planar_split(mu, p, big_r, opts)?,
        _ => radial_split(mu, big_r, opts)?,
    };

    let h_mass = total_mass(&h);
    let h_sup = match h.density() {
        Some(Density::Radial(d)) => d.values().iter().fold(0.0f64, |a, v| a.max(v.abs())),
        Some(Density::Planar(p)) => p.values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        None => 0.0,
    };

    // C2 = sup |𝔏̃(h dx)| over a lattice reaching 3R
    let x0 = Basepoint::unchecked(Point::ORIGIN);
    let reach = 3.0 * big_r.max(1.0);
    let lattice: Vec<Point> = match h.density() {
        Some(Density::Planar(_)) => {
            let side = (opts.lattice as f64).sqrt().ceil().max(3.0) as usize;
            let mut pts = Vec::with_capacity(side * side);
            for j in 0..side {
                for i in 0..side {
                    let f = |k: usize| -reach + 2.0 * reach * k as f64 / (side - 1) as f64;
                    pts.push(Point::xy(f(i), f(j)));
                }
            }
            pts
        }
        _ => log_space(1e-4, reach, opts.lattice.max(2))
            .into_iter()
            .map(Point::on_axis)
            .collect(),
    };
    let vals: Vec<f64> = lattice
        .par_iter()
        .map(|&x| basepoint_potential(&h, &x0, x))
        .collect::<Result<_>>()?;
    let (k, lattice_sup) = vals
        .iter()
        .map(|v| v.abs())
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    // h has zero mass and compact support, so 𝔏(h dx) → 0 at infinity
    let c2_limit = log_potential(&h, Point::ORIGIN)?.abs();
    let c2_at_infinity = c2_limit > lattice_sup;
    let c2 = lattice_sup.max(c2_limit);
    let far: Vec<[f64; 2]> = [3.0, 6.0, 12.0]
        .iter()
        .map(|&m| {
            let r = m * big_r.max(1.0);
            Ok([r, log_potential(&h, Point::on_axis(r))?])
        })
        .collect::<Result<_>>()?;
    let scale = c2.max(tv).max(1e-300);
    let far_field_decays = far[2][1].abs() <= far[0][1].abs() + 1e-9 * scale;

    let mass_recon = (total_mass(&mbeta) + total_mass(&tail) + h_mass - alpha).abs() / tv.max(1e-300);

    let report = DecompositionReport {
        alpha,
        total_variation: tv,
        tail_radius: big_r,
        tail_variation: tail_var,
        tail_threshold: threshold,
        beta,
        epsilon0: eps,
        h_mass,
        h_sup,
        c2,
        c2_argmax: lattice[k].0,
        c2_limit,
        c2_at_infinity,
        far_field: far,
        far_field_decays,
        reconstruction_error: recon,
        mass_reconstruction_error: mass_recon,
        mbeta: diag,
        grid_h: opts.grid.h,
        delta: opts.delta,
        dilatation_h: None,
        comparability: None,
        psi_comparability_spread: None,
    };
    Ok(Decomposition { report, cone, mbeta, tail, h })
}

type Split = (Option<SmoothedCone>, SignedMeasure, Option<MbetaDiagnostics>, SignedMeasure, f64, f64);

fn build_m(beta: f64, dim: Dim, opts: &DecomposeOptions) -> Result<(Option<SmoothedCone>, SignedMeasure, Option<MbetaDiagnostics>)> {
    if beta == 0.0 {
        return Ok((None, SignedMeasure::zero(dim), None));
    }
    let (c, m) = build_mbeta_with_mass(beta, opts.delta, dim.n(), opts.grid)?;
    Ok((Some(c), m.measure, Some(m.diagnostics)))
}

fn radial_split(mu: &SignedMeasure, big_r: f64, opts: &DecomposeOptions) -> Result<Split> {
    let dim = mu.dim();
    let g = opts.grid;
    let count = (g.r_max / g.h).round() as usize;
    let dens = mu.radial_density();
    // μ's own nodes inside the first cell keep the mass of B(0, h)
    let mut r: Vec<f64> = dens
        .map(|d| d.radii().iter().copied().filter(|&x| x < g.h * (1.0 - 1e-12)).collect())
        .unwrap_or_default();
    r.extend((1..=count).map(|i| i as f64 * g.h));
    let top = *r.last().unwrap();
    if let Some(d) = dens {
        r.extend(d.radii().iter().copied().filter(|&x| x > top * (1.0 + 1e-12) && x < big_r));
    }
    if big_r > top * (1.0 + 1e-12) {
        r.push(big_r);
    }
    let mu_vals: Vec<f64> = r
        .iter()
        .map(|&x| if x <= big_r { dens.map_or(0.0, |d| d.value_at(x)) } else { 0.0 })
        .collect();
    let w = radial_weights(dim, &r);
    let beta: f64 = w.iter().zip(&mu_vals).map(|(a, b)| a * b).sum();
    let (cone, m, diag) = build_m(beta, dim, opts)?;
    let m_vals: Vec<f64> = match m.radial_density() {
        Some(md) => r.iter().map(|&x| md.value_at(x)).collect(),
        None => vec![0.0; r.len()],
    };
    let h_vals: Vec<f64> = mu_vals.iter().zip(&m_vals).map(|(a, b)| a - b).collect();
    let h = SignedMeasure::radial(dim, RadialDensity::new(dim, r.clone(), h_vals.clone())?);
    let tail = complement(mu, big_r)?;
    let tail_d = tail.radial_density();
    let sup = r
        .iter()
        .map(|&x| dens.map_or(0.0, |d| d.value_at(x)).abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let recon = r
        .iter()
        .zip(m_vals.iter().zip(&h_vals))
        .map(|(&x, (mv, hv))| {
            let outside = if x > big_r { tail_d.map_or(0.0, |d| d.value_at(x)) } else { 0.0 };
            (mv + hv + outside - dens.map_or(0.0, |d| d.value_at(x))).abs()
        })
        .fold(0.0f64, f64::max)
        / sup;
    Ok((cone, m, diag, h, beta, recon))
}

fn planar_split(mu: &SignedMeasure, p: &PlanarDensity, big_r: f64, opts: &DecomposeOptions) -> Result<Split> {
    let g = p.grid;
    let inner = restrict_ball(mu, big_r)?;
    let inner_vals = inner.planar_density().map(|d| d.values.clone()).unwrap_or_else(|| vec![0.0; g.len()]);
    let beta = g.cell_area() * inner_vals.iter().sum::<f64>();
    let (cone, m, diag) = build_m(beta, Dim::Two, opts)?;
    let mut m_cells = vec![0.0; g.len()];
    if let Some(md) = m.radial_density() {
        for ((&s, &v), &w) in md.radii().iter().zip(md.values()).zip(md.weights()) {
            if v != 0.0 {
                spread_circle(&g, s, v * w, &mut m_cells)?;
            }
        }
    }
    let area = g.cell_area();
    let h_vals: Vec<f64> = inner_vals.iter().zip(&m_cells).map(|(a, b)| a - b / area).collect();
    let recon_sup = p.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let tail = complement(mu, big_r)?;
    let tail_vals = tail.planar_density().map(|d| d.values.clone()).unwrap_or_else(|| vec![0.0; g.len()]);
    let recon = (0..g.len())
        .map(|k| (m_cells[k] / area + h_vals[k] + tail_vals[k] - p.values[k]).abs())
        .fold(0.0f64, f64::max)
        / recon_sup;
    let h = SignedMeasure::planar(PlanarDensity::new(g, h_vals)?);
    Ok((cone, m, diag, h, beta, recon))
}

/// Distribute `mass` uniformly over the circle `|x| = s` into grid cells.
fn spread_circle(g: &crate::measures::GridSpec, s: f64, mass: f64, out: &mut [f64]) -> Result<()> {
    if s > (-g.x0).min(g.x_max()).min(-g.y0).min(g.y_max()) {
        return Err(Error::OutsideDomain { point: [s, 0.0, 0.0, 0.0] });
    }
    let mut ang = vec![0.0, 2.0 * PI];
    for i in 0..=g.nx {
        let x = g.x0 + i as f64 * g.dx;
        if x.abs() < s {
            let a = (x / s).acos();
            ang.push(a);
            ang.push(2.0 * PI - a);
        }
    }
    for j in 0..=g.ny {
        let y = g.y0 + j as f64 * g.dy;
        if y.abs() < s {
            let a = (y / s).asin();
            ang.push(a.rem_euclid(2.0 * PI));
            ang.push(PI - a);
        }
    }
    ang.sort_by(f64::total_cmp);
    for p in ang.windows(2) {
        let d = p[1] - p[0];
        if d <= 0.0 {
            continue;
        }
        let mid = 0.5 * (p[0] + p[1]);
        if let Some((i, j)) = g.locate(s * mid.cos(), s * mid.sin()) {
            out[g.index(i, j)] += mass * d / (2.0 * PI);
        }
    }
    Ok(())
}

/// Radial constructive map: the volume-matched profile with `J_f = e^{nw}`
/// and the decomposition report completed with `H` and comparability constants.
pub fn constructive_theorem_main(
    mu: &SignedMeasure,
    opts: &DecomposeOptions,
) -> Result<(RadialProfile, DecompositionReport)> {
    if !mu.is_radial() {
        return Err(Error::param("measure", "the constructive map needs a radial measure"));
    }
    let dim = mu.dim();
    let dec = decompose(mu, opts)?;
    let factor = factor_of(mu, &opts.factor_radii)?;
    let (profile, dil) = constructive_profile(&factor)?;
    let mut report = dec.report;
    report.dilatation_h = Some(dil);
    report.comparability = Some(comparability(&profile, &factor)?);
    if let Some(cone) = &dec.cone {
        let FactorSamples::Radial { r, w } = &factor.samples else { unreachable!() };
        let nf = dim.nf();
        let logs: Vec<f64> = r
            .iter()
            .zip(w)
            .map(|(&x, &wv)| nf * (cone.log_jacobian_over_n(dim, x) - wv))
            .collect();
        let hi = logs.iter().cloned().fold(f64::MIN, f64::max);
        let lo = logs.iter().cloned().fold(f64::MAX, f64::min);
        report.psi_comparability_spread = Some((hi - lo).exp());
    }
    Ok((profile, report))
}

/// Volume-matched profile of `e^{nw}` and its dilatation.
pub fn constructive_profile(factor: &ConformalFactor) -> Result<(RadialProfile, f64)> {
    let FactorSamples::Radial { r, w } = &factor.samples else {
        return Err(Error::param("factor", "the constructive map needs a radial factor"));
    };
    let nf = factor.dim.nf();
    let log_omega: Vec<f64> = w.iter().map(|v| nf * v).collect();
    let (p, d) = volume_matching_profile_log(r, &log_omega, factor.dim.n())?;
    Ok((p, d.h))
}

/// `(min, max)` of `J_f / e^{nw}` at the sample radii and their geometric midpoints.
pub fn comparability(profile: &RadialProfile, factor: &ConformalFactor) -> Result<(f64, f64)> {
    let FactorSamples::Radial { r, .. } = &factor.samples else {
        return Err(Error::param("factor", "comparability needs a radial factor"));
    };
    let dim = factor.dim;
    let mut pts = r.clone();
    pts.extend(r.windows(2).map(|p| (p[0] * p[1]).sqrt()));
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for x in pts {
        let q = (profile.jacobian(dim, x).ln() - dim.nf() * factor.w_radial(x)?).exp();
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLipschitzReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub spread: f64,
    pub pairs: usize,
}

/// `d_g(x, y) / |f(x) - f(y)|` for `g = e^{2w}|dx|²` and the radial map of `profile`.
pub fn bilipschitz_check(
    profile: &RadialProfile,
    factor: &ConformalFactor,
    pairs: &[(Point, Point)],
) -> Result<BiLipschitzReport> {
    let wf = WeightField::from_factor(factor)?;
    let map = |x: Point| {
        let r = x.norm();
        if r == 0.0 {
            x
        } else {
            x * (profile.eval(r) / r)
        }
    };
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let d = geodesic_distance(&wf, x, y)?;
            Ok(d / map(x).dist(&map(y)))
        })
        .collect::<Result<_>>()?;
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
    Ok(BiLipschitzReport {
        min_ratio: lo,
        max_ratio: hi,
        spread: hi / lo,
        pairs: ratios.len(),
    })
}
