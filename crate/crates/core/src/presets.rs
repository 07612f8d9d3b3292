//! Named test scenarios: measures `μ` (normalised so that `α = ∫dμ`) and
//! their conformal factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{log_space, Dim, Point};
use crate::mbeta::{build_mbeta_with_mass, MbetaGrid};
use crate::measures::{total_mass, RadialDensity, SignedMeasure};
use crate::potential::{c_n, conformal_factor, Basepoint, ConformalFactor, Sampling};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum Scenario {
    Flat,
    /// `β δ₀`.
    Cone { beta: f64 },
    /// The mollified atom `m_β`.
    SmoothedCone { beta: f64, delta: f64 },
    /// `mass · (π w²)^{-n/2} e^{-|x|²/w²}`.
    GaussianBump { mass: f64, width: f64 },
    /// `Σ_{k=2}^{K} k^{-2}` spread over shells `|x| ∈ [k - s/2, k + s/2]`.
    DiracCluster { terms: usize, shell_width: f64 },
    /// `δ₀` with unit mass; `e^{nw} = |x|^{-n}`.
    CylinderLimit,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Flat => "flat",
            Scenario::Cone { .. } => "cone",
            Scenario::SmoothedCone { .. } => "smoothed-cone",
            Scenario::GaussianBump { .. } => "gaussian-bump",
            Scenario::DiracCluster { .. } => "dirac-cluster",
            Scenario::CylinderLimit => "cylinder-limit",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Scenario::Cone { beta } if !(beta < 1.0) || !beta.is_finite() => {
                Err(Error::param("beta", format!("{beta} must be below 1")))
            }
            Scenario::SmoothedCone { beta, delta } => {
                if !(beta < 1.0) || !beta.is_finite() {
                    Err(Error::param("beta", format!("{beta} must be below 1")))
                } else if !(delta > 0.0 && delta <= 0.25) {
                    Err(Error::param("delta", format!("{delta} must lie in (0, 0.25]")))
                } else {
                    Ok(())
                }
            }
            Scenario::GaussianBump { mass, width } => {
                if !(mass < 1.0) || !mass.is_finite() {
                    Err(Error::param("mass", format!("{mass} must be below 1")))
                } else if !(width > 0.0) || !width.is_finite() {
                    Err(Error::param("width", format!("{width} must be positive")))
                } else {
                    Ok(())
                }
            }
            Scenario::DiracCluster { terms, shell_width } => {
                if !(2..=1000).contains(&terms) {
                    Err(Error::param("terms", format!("{terms} must lie in 2..=1000")))
                } else if !(shell_width > 0.0 && shell_width < 1.0) {
                    Err(Error::param("shell_width", format!("{shell_width} must lie in (0, 1)")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Total mass `α`.
    pub fn alpha(&self) -> f64 {
        match *self {
            Scenario::Flat => 0.0,
            Scenario::Cone { beta } | Scenario::SmoothedCone { beta, .. } => beta,
            Scenario::GaussianBump { mass, .. } => mass,
            Scenario::DiracCluster { terms, .. } => (2..=terms).map(|k| 1.0 / (k * k) as f64).sum(),
            Scenario::CylinderLimit => 1.0,
        }
    }

    pub fn measure(&self, dim: Dim) -> Result<SignedMeasure> {
        self.measure_on(dim, MbetaGrid::default())
    }

    /// As [`Scenario::measure`], with the finite-difference grid used by `m_β`.
    pub fn measure_on(&self, dim: Dim, grid: MbetaGrid) -> Result<SignedMeasure> {
        self.validate()?;
        match *self {
            Scenario::Flat => Ok(SignedMeasure::zero(dim)),
            Scenario::Cone { beta } => SignedMeasure::atom(dim, Point::ORIGIN, beta),
            Scenario::CylinderLimit => SignedMeasure::atom(dim, Point::ORIGIN, 1.0),
            Scenario::SmoothedCone { beta, delta } => {
                Ok(build_mbeta_with_mass(beta, delta, dim.n(), grid)?.1.measure)
            }
            Scenario::GaussianBump { mass, width } => {
                let r = log_space(1e-4 * width, 12.0 * width, 1200);
                let norm = (std::f64::consts::PI * width * width).powf(-dim.nf() / 2.0);
                let d = RadialDensity::from_fn(dim, r, |x| norm * (-(x * x) / (width * width)).exp())?;
                normalized(dim, d, mass)
            }
            Scenario::DiracCluster { terms, shell_width } => {
                let half = 0.5 * shell_width;
                let per_shell = 64;
                let mut r = log_space(1e-3, 2.0 - half, 40);
                r.pop();
                let mut v = vec![0.0; r.len()];
                for k in 2..=terms {
                    let c = k as f64;
                    // smooth shell profile (1 - s²)³ on |r - k| < half
                    let shell: Vec<f64> = (0..=per_shell)
                        .map(|i| c - half + shell_width * i as f64 / per_shell as f64)
                        .collect();
                    let prof: Vec<f64> = shell
                        .iter()
                        .map(|&x| {
                            let s = (x - c) / half;
                            (1.0 - s * s).max(0.0).powi(3)
                        })
                        .collect();
                    let one = RadialDensity::new(dim, shell.clone(), prof.clone())?;
                    let scale = 1.0 / (c * c) / total_mass(&SignedMeasure::radial(dim, one));
                    // gap nodes between shells keep the density at zero
                    if let Some(&last) = r.last() {
                        if c - half - last > 1e-9 {
                            r.push(0.5 * (last + c - half));
                            v.push(0.0);
                        }
                    }
                    r.extend_from_slice(&shell);
                    v.extend(prof.iter().map(|p| p * scale));
                }
                let top = terms as f64 + half;
                r.extend([top * 1.5, top * 3.0]);
                v.extend([0.0, 0.0]);
                let d = RadialDensity::new(dim, r, v)?;
                Ok(SignedMeasure::radial(dim, d))
            }
        }
    }

    /// Radii used for factor sampling: 60 per decade over `[10^{-6}, 10^{6}]`.
    pub fn default_factor_radii() -> Vec<f64> {
        log_space(1e-6, 1e6, 721)
    }

    /// `w = 𝔏̃(μ)` sampled along `e₁`.
    pub fn factor(&self, dim: Dim, radii: &[f64]) -> Result<ConformalFactor> {
        let mu = self.measure(dim)?;
        factor_of(&mu, radii)
    }
}

/// `w = 𝔏̃(μ)`, i.e. the conformal factor of `P = c_n μ`, with the default basepoint.
pub fn factor_of(mu: &SignedMeasure, radii: &[f64]) -> Result<ConformalFactor> {
    let p = mu.scaled(c_n(mu.dim()));
    let x0 = Basepoint::default_for(&p)?;
    conformal_factor(&p, &x0, 0.0, &Sampling::Radial(radii.to_vec()))
}

fn normalized(dim: Dim, d: RadialDensity, mass: f64) -> Result<SignedMeasure> {
    let m = SignedMeasure::radial(dim, d);
    let have = total_mass(&m);
    Ok(m.scaled(mass / have))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masses_match_alpha() {
        for dim in [Dim::Two, Dim::Four] {
            for s in [
                Scenario::Flat,
                Scenario::Cone { beta: 0.5 },
                Scenario::SmoothedCone { beta: 0.5, delta: 0.1 },
                Scenario::GaussianBump { mass: 0.25, width: 0.3 },
                Scenario::DiracCluster { terms: 20, shell_width: 0.1 },
                Scenario::CylinderLimit,
            ] {
                let m = s.measure(dim).unwrap();
                // the n = 4 stencil divides by h⁴, so m_β masses carry ~1e-8 of rounding
                assert!((total_mass(&m) - s.alpha()).abs() < 1e-7, "{s:?} {}", total_mass(&m) - s.alpha());
            }
        }
        let a = Scenario::DiracCluster { terms: 20, shell_width: 0.1 }.alpha();
        assert!((a - 0.5961632439130233).abs() < 1e-12);
    }

    #[test]
    fn cone_factor_is_exact() {
        let r = vec![0.01, 1.0, 100.0];
        let f = Scenario::Cone { beta: 0.5 }.factor(Dim::Four, &r).unwrap();
        for &x in &r {
            assert!((f.w_radial(x).unwrap() + 0.5 * x.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Scenario::Cone { beta: 1.0 }.validate().is_err());
        assert!(Scenario::SmoothedCone { beta: 0.5, delta: 0.5 }.validate().is_err());
        assert!(Scenario::GaussianBump { mass: 0.5, width: 0.0 }.validate().is_err());
        assert!(Scenario::DiracCluster { terms: 1, shell_width: 0.1 }.validate().is_err());
    }
}
