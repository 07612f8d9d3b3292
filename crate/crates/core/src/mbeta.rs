//! The smoothed cone `ψ_β` and the compactly supported measure
//! `m_β = (1/c_n) (-Δ)^{n/2} ((1/n) log J_{ψ_β}) dx`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{log_space, Dim};
use crate::measures::{total_mass, RadialDensity, SignedMeasure};
use crate::potential::{c_n, spherical_log_kernel};
use crate::qcmaps::RadialProfile;

/// Degree-13 smoothstep: `S(0) = 0`, `S(1) = 1`, first six derivatives vanish
/// at both ends. Coefficients of `x^7 … x^13`.
const SMOOTHSTEP: [f64; 7] = [1716.0, -9009.0, 20020.0, -24024.0, 16380.0, -6006.0, 924.0];

fn smoothstep_derivs(x: f64) -> [f64; 5] {
    // S, S', S'', S''', S'''' at x in [0, 1]
    let mut out = [0.0; 5];
    for (j, &a) in SMOOTHSTEP.iter().enumerate() {
        let k = 7 + j as i32;
        let mut c = a;
        for (d, o) in out.iter_mut().enumerate() {
            let p = k - d as i32;
            if p < 0 {
                break;
            }
            *o += c * x.powi(p);
            c *= p as f64;
        }
    }
    out
}

/// `∫_0^x S`.
fn smoothstep_integral(x: f64) -> f64 {
    SMOOTHSTEP
        .iter()
        .enumerate()
        .map(|(j, &a)| a * x.powi(8 + j as i32) / (8 + j) as f64)
        .sum()
}

/// Radial map with `σ = r R'/R` ramping from 1 to `1-β` across `[δ, 1-δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCone {
    pub beta: f64,
    pub delta: f64,
    /// `ln δ` and `ln(1-δ)`.
    pub t_start: f64,
    pub t_end: f64,
    pub profile: RadialProfile,
}

impl SmoothedCone {
    fn width(&self) -> f64 {
        self.t_end - self.t_start
    }

    fn x_of(&self, t: f64) -> f64 {
        ((t - self.t_start) / self.width()).clamp(0.0, 1.0)
    }

    /// `σ(t)`.
    pub fn sigma(&self, t: f64) -> f64 {
        1.0 - self.beta * smoothstep_derivs(self.x_of(t))[0]
    }

    /// `ln R - ln r` at `t = ln r`.
    pub fn log_ratio(&self, t: f64) -> f64 {
        let (b, l) = (self.beta, self.width());
        if t <= self.t_start {
            0.0
        } else if t >= self.t_end {
            -0.5 * b * l - b * (t - self.t_end)
        } else {
            -b * l * smoothstep_integral(self.x_of(t))
        }
    }

    /// `u = (1/n) ln J = (1/n) ln σ + ln R - ln r`.
    pub fn log_jacobian_over_n(&self, dim: Dim, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let t = r.ln();
        self.sigma(t).ln() / dim.nf() + self.log_ratio(t)
    }

    /// `u - u_far` where `u_far = A - β ln r` is the exact outer form of `u`.
    fn inner_part(&self, dim: Dim, r: f64) -> f64 {
        let t = r.ln();
        if t >= self.t_end {
            return 0.0;
        }
        let (b, l) = (self.beta, self.width());
        let tail = b * (t - self.t_end) + 0.5 * b * l - (1.0 - b).ln() / dim.nf();
        if t <= self.t_start {
            tail
        } else {
            self.sigma(t).ln() / dim.nf() - b * l * smoothstep_integral(self.x_of(t)) + tail
        }
    }

    pub fn dilatation(&self) -> f64 {
        let lo = 1.0 - self.beta;
        lo.max(1.0 / lo)
    }
}

/// `ψ_β` with ramp on `[δ, 1-δ]`.
pub fn build_smoothed_cone(beta: f64, delta: f64) -> Result<SmoothedCone> {
    if !(beta < 1.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("{beta} must be below 1")));
    }
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::param("delta", format!("{delta} must lie in (0, 1/4]")));
    }
    let (t_start, t_end) = (delta.ln(), (1.0 - delta).ln());
    let mut cone = SmoothedCone {
        beta,
        delta,
        t_start,
        t_end,
        profile: RadialProfile::identity(1e-8, 1e8),
    };
    // exact power laws outside the ramp; dense nodes across it
    let mut t = vec![(1e-8f64).ln()];
    let m = 800;
    for i in 0..=m {
        t.push(t_start + (t_end - t_start) * i as f64 / m as f64);
    }
    t.push((1e8f64).ln());
    let s: Vec<f64> = t.iter().map(|&t| t + cone.log_ratio(t)).collect();
    let sigma: Vec<f64> = t.iter().map(|&t| cone.sigma(t)).collect();
    cone.profile = RadialProfile::from_log_slopes(t, s, sigma)?;
    Ok(cone)
}

/// `Δ` (n = 2) or `Δ²` (n = 4) of a radial function sampled at `r_k = k h`.
///
/// The origin uses the even extension, `Δu(0) = 2n (u₁ - u₀)/h²`. Each
/// application consumes the last sample, so the output has `n/2` fewer
/// entries than the input.
pub fn radial_polylaplacian(u: &[f64], h: f64, n: usize) -> Result<Vec<f64>> {
    let dim = Dim::new(n)?;
    let passes = dim.n() / 2;
    if u.len() < 2 * passes + 3 {
        return Err(Error::InvalidGrid(format!(
            "{} samples are too few for the stencil",
            u.len()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidGrid("spacing must be positive".into()));
    }
    let mut cur = u.to_vec();
    for _ in 0..passes {
        cur = laplacian_once(&cur, h, dim.nf());
    }
    Ok(cur)
}

fn laplacian_once(u: &[f64], h: f64, nf: f64) -> Vec<f64> {
    let m = u.len() - 1;
    let h2 = h * h;
    let mut out = Vec::with_capacity(m);
    out.push(2.0 * nf * (u[1] - u[0]) / h2);
    for k in 1..m {
        let second = (u[k + 1] - 2.0 * u[k] + u[k - 1]) / h2;
        let first = (u[k + 1] - u[k - 1]) / (2.0 * h);
        out.push(second + (nf - 1.0) / (k as f64 * h) * first);
    }
    out
}

/// Grid for the finite-difference construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbetaGrid {
    pub h: f64,
    pub r_max: f64,
}

impl Default for MbetaGrid {
    fn default() -> Self {
        MbetaGrid {
            h: 2.5e-4,
            r_max: 1.2,
        }
    }
}

/// Diagnostics computed while building `m_β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbetaDiagnostics {
    /// Volume quadrature of the density.
    pub mass: f64,
    /// Flux through the sphere `|x| = boundary_radius`.
    pub boundary_mass: f64,
    pub boundary_radius: f64,
    /// `sup_{r>1} |m| / sup_{r≤1} |m|`.
    pub support_leak: f64,
    /// The same ratio for the stencil applied to `u` itself, without the
    /// outer subtraction.
    pub plain_stencil_leak: f64,
    pub interior_sup: f64,
    pub h: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbetaMeasure {
    pub measure: SignedMeasure,
    pub beta_target: f64,
    pub diagnostics: MbetaDiagnostics,
}

/// Largest support leak accepted by [`build_mbeta`].
pub const MAX_SUPPORT_LEAK: f64 = 1e-6;

pub fn build_mbeta(cone: &SmoothedCone, n: usize) -> Result<MbetaMeasure> {
    build_mbeta_on(cone, n, MbetaGrid::default())
}

/// Density on the nodes `h, 2h, …, r_max`.
///
/// The stencil is applied to `u - u_far` from the ramp onward; `u_far` is
/// annihilated by `Δ^{n/2}` away from the origin, so this removes the
/// truncation and rounding error of the outer region.
pub fn build_mbeta_on(cone: &SmoothedCone, n: usize, grid: MbetaGrid) -> Result<MbetaMeasure> {
    let dim = Dim::new(n)?;
    if !(grid.h > 0.0 && grid.r_max > 1.0 + 4.0 * grid.h) {
        return Err(Error::InvalidGrid(format!(
            "grid spacing {} and extent {} cannot resolve the unit ball",
            grid.h, grid.r_max
        )));
    }
    let big_n = (grid.r_max / grid.h).round() as usize;
    if (cone.t_end.exp() - cone.t_start.exp()) / grid.h < 200.0 {
        return Err(Error::InvalidGrid(format!(
            "spacing {} leaves fewer than 200 nodes across the ramp",
            grid.h
        )));
    }
    let passes = dim.n() / 2;
    let h = grid.h;
    let rk = |k: usize| k as f64 * h;
    let total = big_n + passes + 1;
    let u: Vec<f64> = (0..total)
        .map(|k| cone.log_jacobian_over_n(dim, rk(k)))
        .collect();
    let v: Vec<f64> = (0..total)
        .map(|k| if k == 0 { 0.0 } else { cone.inner_part(dim, rk(k)) })
        .collect();
    let sign = if passes % 2 == 1 { -1.0 } else { 1.0 };
    let scale = sign / c_n(dim);
    let lu = radial_polylaplacian(&u, h, n)?;
    let lv = radial_polylaplacian(&v, h, n)?;
    let r_switch = cone.delta;
    let radii: Vec<f64> = (1..=big_n).map(rk).collect();
    let values: Vec<f64> = (1..=big_n)
        .map(|k| {
            let raw = if rk(k) < r_switch { lu[k] } else { lv[k] };
            scale * raw
        })
        .collect();

    let interior_sup = radii
        .iter()
        .zip(&values)
        .filter(|(r, _)| **r <= 1.0)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    let outer_sup = radii
        .iter()
        .zip(&values)
        .filter(|(r, _)| **r > 1.0)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    let support_leak = if interior_sup > 0.0 {
        outer_sup / interior_sup
    } else {
        0.0
    };
    let plain_outer = (1..=big_n)
        .filter(|&k| rk(k) > 1.0)
        .map(|k| (scale * lu[k]).abs())
        .fold(0.0, f64::max);
    let plain_stencil_leak = if interior_sup > 0.0 {
        plain_outer / interior_sup
    } else {
        0.0
    };

    // boundary flux from centred differences of the plain samples of u
    let kb = ((1.1 / h).round() as usize).min(big_n - 2);
    let rb = rk(kb);
    let boundary_mass = match dim {
        Dim::Two => -rb * (u[kb + 1] - u[kb - 1]) / (2.0 * h),
        Dim::Four => {
            let lap = laplacian_once(&u, h, 4.0);
            let d = (lap[kb + 1] - lap[kb - 1]) / (2.0 * h);
            dim.sphere_area() * rb.powi(3) * d / c_n(dim)
        }
    };

    let density = RadialDensity::new(dim, radii, values)?;
    let measure = SignedMeasure::radial(dim, density);
    let mass = total_mass(&measure);
    let diagnostics = MbetaDiagnostics {
        mass,
        boundary_mass,
        boundary_radius: rb,
        support_leak,
        plain_stencil_leak,
        interior_sup,
        h,
        nodes: big_n,
    };
    if support_leak > MAX_SUPPORT_LEAK {
        return Err(Error::Diagnostic(format!(
            "m_β density leaks outside the unit ball: ratio {support_leak:e}"
        )));
    }
    Ok(MbetaMeasure {
        measure,
        beta_target: cone.beta,
        diagnostics,
    })
}

/// Build `m_β` with the cone exponent adjusted so that the discrete mass
/// equals `target` to rounding accuracy.
pub fn build_mbeta_with_mass(
    target: f64,
    delta: f64,
    n: usize,
    grid: MbetaGrid,
) -> Result<(SmoothedCone, MbetaMeasure)> {
    let make = |b: f64| -> Result<(SmoothedCone, MbetaMeasure)> {
        let c = build_smoothed_cone(b, delta)?;
        let m = build_mbeta_on(&c, n, grid)?;
        Ok((c, m))
    };
    let (mut b0, mut b1) = (target, target * 1.001 + 1e-6);
    let (mut best, mut m0) = {
        let (c, m) = make(b0)?;
        let f = m.diagnostics.mass - target;
        ((c, m), f)
    };
    if m0 == 0.0 {
        return Ok(best);
    }
    for _ in 0..30 {
        if !(b1 < 1.0) {
            b1 = 0.5 * (b0 + 1.0);
        }
        let (c, m) = make(b1)?;
        let m1 = m.diagnostics.mass - target;
        best = (c, m);
        if m1.abs() <= 1e-15 * (1.0 + target.abs()) || m1 == m0 {
            break;
        }
        let next = b1 - m1 * (b1 - b0) / (m1 - m0);
        b0 = b1;
        m0 = m1;
        b1 = next;
    }
    best.1.beta_target = target;
    Ok(best)
}

/// Default evaluation radii for the potential identity.
pub fn identity_samples() -> Vec<f64> {
    log_space(0.01, 3.0, 120)
}

/// `𝔏(m_β)(ρ)` at each radius, from the radial kernel.
pub fn mbeta_potential(m: &MbetaMeasure, radii: &[f64]) -> Vec<f64> {
    let dim = m.measure.dim();
    match m.measure.radial_density() {
        None => vec![0.0; radii.len()],
        Some(d) => radii
            .par_iter()
            .map(|&rho| {
                d.radii()
                    .iter()
                    .zip(d.values())
                    .zip(d.weights())
                    .map(|((&s, &f), &w)| w * f * spherical_log_kernel(dim, rho, s))
                    .sum()
            })
            .collect(),
    }
}

/// Spread (max - min) and mean of `𝔏(m_β) - (1/n) log J_{ψ_β}` over `radii`.
pub fn verify_potential_identity(
    m: &MbetaMeasure,
    cone: &SmoothedCone,
    n: usize,
    radii: &[f64],
) -> Result<(f64, f64)> {
    let dim = Dim::new(n)?;
    if radii.is_empty() {
        return Err(Error::param("radii", "at least one sample radius is required"));
    }
    let pot = mbeta_potential(m, radii);
    let g: Vec<f64> = radii
        .iter()
        .zip(&pot)
        .map(|(&r, &p)| p - cone.log_jacobian_over_n(dim, r))
        .collect();
    let max = g.iter().cloned().fold(f64::MIN, f64::max);
    let min = g.iter().cloned().fold(f64::MAX, f64::min);
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    Ok((max - min, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcmaps::dilatation_radial;

    #[test]
    fn smoothstep_shape() {
        let s0 = smoothstep_derivs(0.0);
        let s1 = smoothstep_derivs(1.0);
        assert_eq!(s0, [0.0; 5]);
        assert!((s1[0] - 1.0).abs() < 1e-12);
        assert!(s1[1..].iter().all(|v| v.abs() < 1e-8), "{s1:?}");
        assert!((smoothstep_integral(1.0) - 0.5).abs() < 1e-12);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let d = smoothstep_derivs(x);
            assert!(d[1] >= -1e-12);
            assert!((d[0] + smoothstep_derivs(1.0 - x)[0] - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn smoothed_cone_examples() {
        let id = build_smoothed_cone(0.0, 0.1).unwrap();
        for r in [1e-3, 0.5, 30.0] {
            assert!((id.profile.eval(r) / r - 1.0).abs() < 1e-14);
        }
        let c = build_smoothed_cone(0.5, 0.1).unwrap();
        let d = dilatation_radial(&c.profile);
        assert!((d.h - 2.0).abs() < 1e-10, "{}", d.h);
        assert!(d.sigma_min >= 0.5 - 1e-11 && d.sigma_max <= 1.0 + 1e-11);
        for r in [1e-6, 0.01, 0.05, 0.1] {
            assert!((c.profile.eval(r) / r - 1.0).abs() < 1e-14);
        }
        // far field c r^{1-β}
        let k = c.profile.eval(2.0) / 2f64.powf(0.5);
        assert!((c.profile.eval(50.0) / 50f64.powf(0.5) / k - 1.0).abs() < 1e-12);
        assert!(build_smoothed_cone(1.0, 0.1).is_err());
        assert!(build_smoothed_cone(0.5, 0.3).is_err());
        assert!(build_smoothed_cone(0.5, 0.0).is_err());
    }

    #[test]
    fn profile_second_derivative_is_bounded() {
        let c = build_smoothed_cone(0.9, 0.05).unwrap();
        let h = 1e-3;
        let mut worst = 0.0f64;
        let mut t = c.t_start - 0.1;
        while t < c.t_end + 0.1 {
            let f = |t: f64| c.log_ratio(t);
            worst = worst.max(((f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)).abs());
            t += 0.01;
        }
        assert!(worst < 10.0, "{worst}");
    }

    #[test]
    fn polylaplacian_closed_forms() {
        let h = 1e-2;
        let r2: Vec<f64> = (0..200).map(|k| (k as f64 * h).powi(2)).collect();
        let l2 = radial_polylaplacian(&r2, h, 2).unwrap();
        assert!(l2.iter().all(|v| (v - 4.0).abs() < 1e-9));
        let l4 = radial_polylaplacian(&r2, h, 4).unwrap();
        assert_eq!(l4.len(), 198);
        assert!(l4.iter().all(|v| v.abs() < 1e-6));
        let once = laplacian_once(&r2, h, 4.0);
        assert!(once.iter().all(|v| (v - 8.0).abs() < 1e-9));
        // log(1/r) is harmonic in the plane
        let f: Vec<f64> = (0..400).map(|k| -((k as f64 + 100.0) * h).ln()).collect();
        let mut shifted = vec![0.0; 100];
        shifted.extend(f);
        let l = radial_polylaplacian(&shifted, h, 2).unwrap();
        for (k, lk) in l.iter().enumerate().take(400).skip(120) {
            let r = k as f64 * h;
            assert!(lk.abs() < h * h / r.powi(4), "{k} {}", lk);
        }
        assert!(radial_polylaplacian(&[0.0; 4], h, 4).is_err());
    }

    #[test]
    fn mbeta_zero_for_flat_cone() {
        let c = build_smoothed_cone(0.0, 0.1).unwrap();
        for n in [2, 4] {
            let m = build_mbeta(&c, n).unwrap();
            assert_eq!(total_mass(&m.measure), 0.0);
            let (spread, mean) = verify_potential_identity(&m, &c, n, &identity_samples()).unwrap();
            assert_eq!((spread, mean), (0.0, 0.0));
        }
    }

    #[test]
    fn mbeta_mass_and_support() {
        for n in [2, 4] {
            let c = build_smoothed_cone(0.5, 0.1).unwrap();
            let m = build_mbeta(&c, n).unwrap();
            let d = m.diagnostics;
            assert!((d.mass / 0.5 - 1.0).abs() < 1e-3, "{n}: {d:?}");
            assert!((d.boundary_mass / d.mass - 1.0).abs() < 1e-3, "{n}: {d:?}");
            assert!(d.support_leak <= 1e-8, "{n}: {d:?}");
        }
    }

    #[test]
    fn mbeta_is_blind_to_far_field_scaling() {
        // adding a constant to u leaves the stencil output unchanged
        let h = 1e-3;
        let c = build_smoothed_cone(0.5, 0.1).unwrap();
        let u: Vec<f64> = (0..1300).map(|k| c.log_jacobian_over_n(Dim::Four, k as f64 * h)).collect();
        let shifted: Vec<f64> = u.iter().map(|v| v + 0.75).collect();
        let a = radial_polylaplacian(&u, h, 4).unwrap();
        let b = radial_polylaplacian(&shifted, h, 4).unwrap();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff <= 1e-6 * scale, "{diff} {scale}");
    }

    #[test]
    fn calibrated_mass_hits_target() {
        let grid = MbetaGrid { h: 1e-3, r_max: 1.2 };
        let (_, m) = build_mbeta_with_mass(0.37, 0.1, 2, grid).unwrap();
        assert!((m.diagnostics.mass - 0.37).abs() < 1e-13, "{}", m.diagnostics.mass);
    }
}
