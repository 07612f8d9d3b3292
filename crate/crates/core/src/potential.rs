//! Logarithmic potentials `𝔏(μ)(x) = ∫ log(1/|x-y|) dμ(y)`, their basepoint
//! renormalisation, and the conformal factor built from a curvature measure.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Ball, Dim, Point};
use crate::measures::{
    default_radii, maximal_function, restrict_ball, Density, GridSpec, PlanarDensity,
    RadialDensity, SignedMeasure,
};
use crate::quad::{BallNodes, GaussLegendre, RadialQuadrature};

/// Planar cells closer than this many cell widths use the exact cell integral.
const NEAR_CELLS: f64 = 6.0;

/// `c_n`, so that `(1/c_n) log(1/|x|)` is the fundamental solution of `(-Δ)^{n/2}`.
pub fn fundamental_constant(n: usize) -> Result<f64> {
    Ok(match Dim::new(n)? {
        Dim::Two => 2.0 * PI,
        Dim::Four => 8.0 * PI * PI,
    })
}

pub(crate) fn c_n(dim: Dim) -> f64 {
    match dim {
        Dim::Two => 2.0 * PI,
        Dim::Four => 8.0 * PI * PI,
    }
}

/// Mean of `log(1/|x-y|)` over the sphere `|y| = s`, with `|x| = rho`.
pub fn spherical_log_kernel(dim: Dim, rho: f64, s: f64) -> f64 {
    let (lo, hi) = if rho < s { (rho, s) } else { (s, rho) };
    match dim {
        Dim::Two => -hi.ln(),
        Dim::Four => {
            let q = lo / hi;
            -hi.ln() - 0.25 * q * q
        }
    }
}

fn check_point(mu: &SignedMeasure, x: &Point) -> Result<()> {
    if !x.fits(mu.dim()) {
        return Err(Error::param(
            "x",
            format!("point {:?} has coordinates beyond dimension {}", x.0, mu.dim().n()),
        ));
    }
    if mu.atoms().iter().any(|a| a.weight != 0.0 && a.location == *x) {
        return Err(Error::AtAtom { point: x.0 });
    }
    Ok(())
}

fn radial_density_potential(dim: Dim, d: &RadialDensity, rho: f64) -> f64 {
    d.radii()
        .iter()
        .zip(d.values())
        .zip(d.weights())
        .map(|((&s, &f), &w)| w * f * spherical_log_kernel(dim, rho, s))
        .sum()
}

fn radial_density_shifted(dim: Dim, d: &RadialDensity, rho: f64, rho0: f64) -> f64 {
    d.radii()
        .iter()
        .zip(d.values())
        .zip(d.weights())
        .map(|((&s, &f), &w)| {
            w * f * (spherical_log_kernel(dim, rho, s) - spherical_log_kernel(dim, rho0, s))
        })
        .sum()
}

/// `∬ log(X² + Y²) dX dY` antiderivative.
fn log_cell_antiderivative(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return 0.0;
    }
    let mut v = x * y * r2.ln() - 3.0 * x * y;
    if x != 0.0 {
        v += x * x * (y / x).atan();
    }
    if y != 0.0 {
        v += y * y * (x / y).atan();
    }
    v
}

/// `∫∫_{[x0,x1]×[y0,y1]} log(1/|z|) dz`, exactly.
pub fn log_cell_integral(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let f = log_cell_antiderivative;
    -0.5 * (f(x1, y1) - f(x0, y1) - f(x1, y0) + f(x0, y0))
}

fn planar_potential(p: &PlanarDensity, x: f64, y: f64) -> f64 {
    let g = &p.grid;
    let near = NEAR_CELLS * g.dx.max(g.dy);
    let mut total = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = p.values[g.index(i, j)];
            if v == 0.0 {
                continue;
            }
            let (cx, cy) = g.center(i, j);
            let (ex, ey) = (cx - x, cy - y);
            if ex.abs() < near && ey.abs() < near {
                total += v
                    * log_cell_integral(
                        ex - 0.5 * g.dx,
                        ex + 0.5 * g.dx,
                        ey - 0.5 * g.dy,
                        ey + 0.5 * g.dy,
                    );
            } else {
                total -= v * g.cell_area() * 0.5 * (ex * ex + ey * ey).ln();
            }
        }
    }
    total
}

/// `𝔏(μ)(x)`.
pub fn log_potential(mu: &SignedMeasure, x: Point) -> Result<f64> {
    check_point(mu, &x)?;
    let atoms: f64 = mu
        .atoms()
        .iter()
        .map(|a| -a.weight * a.location.dist(&x).ln())
        .sum();
    let dens = match mu.density() {
        None => 0.0,
        Some(Density::Radial(d)) => radial_density_potential(mu.dim(), d, x.norm()),
        Some(Density::Planar(p)) => planar_potential(p, x.0[0], x.0[1]),
    };
    Ok(atoms + dens)
}

/// Evaluation point `x₀` for the renormalised potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Basepoint {
    pub x0: Point,
}

impl Basepoint {
    /// Accepts `x0` when the maximal function of μ is finite there.
    pub fn new(mu: &SignedMeasure, x0: Point) -> Result<Self> {
        check_point(mu, &x0).map_err(|_| {
            Error::param("basepoint", format!("{:?} carries an atom of μ", x0.0))
        })?;
        let m = maximal_function(mu, x0, &default_radii(mu))?;
        if !m.is_finite() || !m.value().is_finite() {
            return Err(Error::param("basepoint", "maximal function is infinite there"));
        }
        Ok(Basepoint { x0 })
    }

    /// The origin when admissible, otherwise `e₁`.
    pub fn default_for(mu: &SignedMeasure) -> Result<Self> {
        Self::new(mu, Point::ORIGIN).or_else(|_| Self::new(mu, Point::on_axis(1.0)))
    }

    pub fn unchecked(x0: Point) -> Self {
        Basepoint { x0 }
    }
}

/// `𝔏̃(μ)(x) = ∫ log(|x₀-y| / |x-y|) dμ(y)`.
pub fn basepoint_potential(mu: &SignedMeasure, x0: &Basepoint, x: Point) -> Result<f64> {
    check_point(mu, &x)?;
    let dim = mu.dim();
    let atoms: f64 = mu
        .atoms()
        .iter()
        .map(|a| a.weight * (a.location.dist(&x0.x0).ln() - a.location.dist(&x).ln()))
        .sum();
    let dens = match mu.density() {
        None => 0.0,
        Some(Density::Radial(d)) => radial_density_shifted(dim, d, x.norm(), x0.x0.norm()),
        Some(Density::Planar(p)) => {
            planar_potential(p, x.0[0], x.0[1]) - planar_potential(p, x0.x0.0[0], x0.x0.0[1])
        }
    };
    Ok(atoms + dens)
}

/// Where a conformal factor is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// Radii along `e₁`; the factor is radial when the measure is.
    Radial(Vec<f64>),
    /// Cell centers of a planar grid.
    Planar(GridSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorSamples {
    Radial { r: Vec<f64>, w: Vec<f64> },
    Planar { grid: GridSpec, w: Vec<f64> },
}

/// Sampled `w = (1/c_n) 𝔏̃(P) + C_norm`, with weight `ω = e^{nw}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    pub dim: Dim,
    pub samples: FactorSamples,
    pub c_norm: f64,
    pub basepoint: Basepoint,
    pub source: SignedMeasure,
}

impl ConformalFactor {
    /// A radial factor given directly by samples of `w`.
    pub fn from_radial_samples(dim: Dim, r: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if r.len() != w.len() || r.len() < 2 {
            return Err(Error::InvalidGrid("need matching radii and values, at least two".into()));
        }
        if r[0] <= 0.0 || r.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidGrid("radii must be positive and increasing".into()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("conformal factor is not finite".into()));
        }
        Ok(ConformalFactor {
            dim,
            samples: FactorSamples::Radial { r, w },
            c_norm: 0.0,
            basepoint: Basepoint::unchecked(Point::ORIGIN),
            source: SignedMeasure::zero(dim),
        })
    }

    /// A planar factor given directly by cell-center samples of `w`.
    pub fn from_planar_samples(grid: GridSpec, w: Vec<f64>) -> Result<Self> {
        if w.len() != grid.len() {
            return Err(Error::InvalidGrid("one value per cell is required".into()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("conformal factor is not finite".into()));
        }
        Ok(ConformalFactor {
            dim: Dim::Two,
            samples: FactorSamples::Planar { grid, w },
            c_norm: 0.0,
            basepoint: Basepoint::unchecked(Point::ORIGIN),
            source: SignedMeasure::zero(Dim::Two),
        })
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.samples, FactorSamples::Radial { .. })
    }

    /// `w` at radius `r`: linear in `ln r` between samples, extended linearly
    /// in `ln r` beyond the ends (power-law weights).
    pub fn w_radial(&self, r: f64) -> Result<f64> {
        match &self.samples {
            FactorSamples::Radial { r: rs, w } => Ok(interp_log(rs, w, r)),
            FactorSamples::Planar { .. } => Err(Error::param("factor", "factor is not radial")),
        }
    }

    /// `w(x)`; radial factors use `|x|`, planar ones bilinear interpolation
    /// of the cell-center samples.
    pub fn w_at(&self, x: Point) -> Result<f64> {
        match &self.samples {
            FactorSamples::Radial { r, w } => Ok(interp_log(r, w, x.norm())),
            FactorSamples::Planar { grid, w } => bilinear(grid, w, x.0[0], x.0[1])
                .ok_or(Error::OutsideDomain { point: x.0 }),
        }
    }

    /// `ω = e^{nw}` at `x`.
    pub fn weight_at(&self, x: Point) -> Result<f64> {
        Ok((self.dim.nf() * self.w_at(x)?).exp())
    }
}

pub(crate) fn interp_log(r: &[f64], w: &[f64], x: f64) -> f64 {
    let t = x.ln();
    let m = r.len();
    let k = r.partition_point(|&v| v < x).clamp(1, m - 1);
    let (t0, t1) = (r[k - 1].ln(), r[k].ln());
    let f = (t - t0) / (t1 - t0);
    w[k - 1] * (1.0 - f) + w[k] * f
}

/// Bilinear interpolation of cell-center samples; constant within half a cell
/// of the outer boundary.
pub(crate) fn bilinear(g: &GridSpec, v: &[f64], x: f64, y: f64) -> Option<f64> {
    if !g.contains(x, y) {
        return None;
    }
    let fx = ((x - g.x0) / g.dx - 0.5).clamp(0.0, (g.nx - 1) as f64);
    let fy = ((y - g.y0) / g.dy - 0.5).clamp(0.0, (g.ny - 1) as f64);
    let (i0, j0) = (fx.floor() as usize, fy.floor() as usize);
    let (i1, j1) = ((i0 + 1).min(g.nx - 1), (j0 + 1).min(g.ny - 1));
    let (a, b) = (fx - i0 as f64, fy - j0 as f64);
    Some(
        v[g.index(i0, j0)] * (1.0 - a) * (1.0 - b)
            + v[g.index(i1, j0)] * a * (1.0 - b)
            + v[g.index(i0, j1)] * (1.0 - a) * b
            + v[g.index(i1, j1)] * a * b,
    )
}

/// `w = (1/c_n) 𝔏̃(P) + C_norm` on the requested samples.
///
/// `P` plays the role of `Q e^{nw}`; no fixed-point problem is solved.
pub fn conformal_factor(
    p: &SignedMeasure,
    x0: &Basepoint,
    c_norm: f64,
    sampling: &Sampling,
) -> Result<ConformalFactor> {
    let dim = p.dim();
    let c = c_n(dim);
    let samples = match sampling {
        Sampling::Radial(r) => {
            let w: Result<Vec<f64>> = r
                .par_iter()
                .map(|&rho| Ok(basepoint_potential(p, x0, Point::on_axis(rho))? / c + c_norm))
                .collect();
            FactorSamples::Radial {
                r: r.clone(),
                w: w?,
            }
        }
        Sampling::Planar(grid) => {
            if dim != Dim::Two {
                return Err(Error::param("sampling", "planar sampling needs n = 2"));
            }
            let pts: Vec<(usize, usize)> = (0..grid.ny)
                .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
                .collect();
            let w: Result<Vec<f64>> = pts
                .par_iter()
                .map(|&(i, j)| {
                    let (x, y) = grid.center(i, j);
                    Ok(basepoint_potential(p, x0, Point::xy(x, y))? / c + c_norm)
                })
                .collect();
            FactorSamples::Planar {
                grid: *grid,
                w: w?,
            }
        }
    };
    Ok(ConformalFactor {
        dim,
        samples,
        c_norm,
        basepoint: *x0,
        source: p.clone(),
    })
}

/// `∫_B |e^{n𝔏̃(μ_k)} - e^{n𝔏̃(μ)}| dx` for each `k`, with `μ_k = μ|_{B(0,k)}`.
///
/// Radial measures are handled for any ball in either dimension; other
/// measures need `n = 2`.
pub fn restriction_convergence(
    mu: &SignedMeasure,
    x0: &Basepoint,
    ball: &Ball,
    ks: &[f64],
) -> Result<Vec<f64>> {
    if ks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("ks", "restriction radii must increase"));
    }
    let dim = mu.dim();
    let nf = dim.nf();
    let restricted: Vec<SignedMeasure> = ks
        .iter()
        .map(|&k| restrict_ball(mu, k))
        .collect::<Result<_>>()?;
    if mu.is_radial() {
        let nodes = BallNodes::new(dim, ball.center.norm(), ball.radius, RadialQuadrature::default());
        let full: Vec<f64> = nodes
            .s
            .par_iter()
            .map(|&s| basepoint_potential(mu, x0, Point::on_axis(s)).map(|v| (nf * v).exp()))
            .collect::<Result<_>>()?;
        restricted
            .iter()
            .map(|mk| {
                let diff: Vec<f64> = nodes
                    .s
                    .par_iter()
                    .zip(&full)
                    .map(|(&s, &f)| {
                        basepoint_potential(mk, x0, Point::on_axis(s))
                            .map(|v| ((nf * v).exp() - f).abs())
                    })
                    .collect::<Result<_>>()?;
                Ok(nodes.integrate(&diff).max(0.0))
            })
            .collect()
    } else {
        if dim != Dim::Two {
            return Err(Error::InvalidMeasure(
                "restriction convergence for non-radial measures needs n = 2".into(),
            ));
        }
        let pts = disk_nodes(ball, 24, 48);
        let eval = |m: &SignedMeasure| -> Result<Vec<f64>> {
            pts.par_iter()
                .map(|&(p, _)| basepoint_potential(m, x0, p).map(|v| (nf * v).exp()))
                .collect()
        };
        let full = eval(mu)?;
        restricted
            .iter()
            .map(|mk| {
                let part = eval(mk)?;
                Ok(pts
                    .iter()
                    .zip(part.iter().zip(&full))
                    .map(|((_, w), (a, b))| w * (a - b).abs())
                    .sum())
            })
            .collect()
    }
}

/// Polar Gauss–Legendre nodes on a disk: `(point, weight)`.
fn disk_nodes(ball: &Ball, radial_panels: usize, angles: usize) -> Vec<(Point, f64)> {
    let gl = GaussLegendre::new(6);
    let mut out = Vec::new();
    let dth = 2.0 * PI / angles as f64;
    for (r, wr) in gl.composite(0.0, ball.radius, radial_panels) {
        for k in 0..angles {
            let th = (k as f64 + 0.5) * dth;
            let p = ball.center + Point::xy(r * th.cos(), r * th.sin());
            out.push((p, wr * r * dth));
        }
    }
    out
}
