//! Volume, perimeter, isoperimetric and Sobolev ratios for `e^{2w}|dx|²`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Ball, Dim, Point};
use crate::measures::{disk_rect_area, GridSpec};
use crate::potential::{bilinear, interp_log, ConformalFactor, FactorSamples};
use crate::quad::{exp_affine_integral, BallNodes, GaussLegendre, RadialQuadrature};

/// A bounded domain. Polygons are planar; balls and annuli live in either dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Ball(Ball),
    /// `r0 < |x| < r1`.
    Annulus { r0: f64, r1: f64 },
    /// Counter-clockwise vertices of a simple polygon.
    Polygon(Vec<[f64; 2]>),
}

impl Domain {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param("radius", format!("{radius} must be positive")));
        }
        Ok(Domain::Ball(Ball::new(center, radius)))
    }

    pub fn annulus(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
            return Err(Error::param("annulus", format!("need 0 < r0 < r1, got ({r0}, {r1})")));
        }
        Ok(Domain::Annulus { r0, r1 })
    }

    pub fn polygon(mut v: Vec<[f64; 2]>) -> Result<Self> {
        if v.len() < 3 {
            return Err(Error::param("polygon", "need at least three vertices"));
        }
        let a = signed_area(&v);
        if a.abs() <= 1e-14 * bbox_scale(&v).powi(2) {
            return Err(Error::param("polygon", "polygon has zero area"));
        }
        if a < 0.0 {
            v.reverse();
        }
        let m = v.len();
        for i in 0..m {
            for j in i + 2..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                if segments_cross(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]) {
                    return Err(Error::param("polygon", "edges intersect"));
                }
            }
        }
        Ok(Domain::Polygon(v))
    }

    /// Star-shaped polygon with vertices `center + ρ_k (cos θ_k, sin θ_k)`,
    /// `θ_k = 2πk/m`.
    pub fn star(center: [f64; 2], radii: &[f64]) -> Result<Self> {
        if radii.len() < 3 || radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::param("star", "need at least three positive radii"));
        }
        let m = radii.len() as f64;
        let v = radii
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let th = 2.0 * PI * k as f64 / m;
                [center[0] + r * th.cos(), center[1] + r * th.sin()]
            })
            .collect();
        Ok(Domain::Polygon(v))
    }

    pub fn is_planar_only(&self) -> bool {
        matches!(self, Domain::Polygon(_))
    }

    /// Euclidean volume.
    pub fn euclidean_volume(&self, dim: Dim) -> f64 {
        match self {
            Domain::Ball(b) => b.volume(dim),
            Domain::Annulus { r0, r1 } => dim.ball_volume_r(*r1) - dim.ball_volume_r(*r0),
            Domain::Polygon(v) => signed_area(v).abs(),
        }
    }

    fn check_dim(&self, dim: Dim) -> Result<()> {
        match self {
            Domain::Polygon(_) if dim != Dim::Two => {
                Err(Error::param("domain", "polygons need n = 2"))
            }
            Domain::Ball(b) if !b.center.fits(dim) => {
                Err(Error::param("domain", "ball center has coordinates beyond n"))
            }
            _ => Ok(()),
        }
    }

    /// Planar bounding box `(x0, x1, y0, y1)`.
    fn bbox(&self) -> (f64, f64, f64, f64) {
        match self {
            Domain::Ball(b) => {
                let (x, y, r) = (b.center.0[0], b.center.0[1], b.radius);
                (x - r, x + r, y - r, y + r)
            }
            Domain::Annulus { r1, .. } => (-r1, *r1, -r1, *r1),
            Domain::Polygon(v) => v.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
                |(a, b, c, d), p| (a.min(p[0]), b.max(p[0]), c.min(p[1]), d.max(p[1])),
            ),
        }
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let m = v.len();
    0.5 * (0..m)
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % m]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn bbox_scale(v: &[[f64; 2]]) -> f64 {
    v.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (d1, d2) = (cross(c, d, a), cross(c, d, b));
    let (d3, d4) = (cross(a, b, c), cross(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn point_in_polygon(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    let m = v.len();
    let mut inside = false;
    let mut j = m - 1;
    for i in 0..m {
        let (pi, pj) = (v[i], v[j]);
        if (pi[1] > y) != (pj[1] > y) {
            let xc = pj[0] + (y - pj[1]) / (pi[1] - pj[1]) * (pi[0] - pj[0]);
            if x < xc {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from the origin to the segment `[p, q]` and the parameter of the foot.
fn segment_foot(p: [f64; 2], q: [f64; 2]) -> (f64, f64) {
    let e = [q[0] - p[0], q[1] - p[1]];
    let l2 = e[0] * e[0] + e[1] * e[1];
    let u = (-(p[0] * e[0] + p[1] * e[1]) / l2).clamp(0.0, 1.0);
    ((p[0] + u * e[0]).hypot(p[1] + u * e[1]), u)
}

struct Radial<'a> {
    dim: Dim,
    r: &'a [f64],
    w: &'a [f64],
}

impl Radial<'_> {
    fn w(&self, s: f64) -> f64 {
        interp_log(self.r, self.w, s)
    }

    /// `σ ∫_0^s e^{k w(ρ)} ρ^{m-1} dρ`, exact for `w` piecewise affine in `ln ρ`.
    fn centered(&self, k: f64, m: f64, s: f64) -> f64 {
        self.shell(k, m, 0.0, s)
    }

    /// `σ ∫_{s0}^{s1} e^{k w(ρ)} ρ^{m-1} dρ`; `s0 = 0` includes the inner tail.
    fn shell(&self, k: f64, m: f64, s0: f64, s1: f64) -> f64 {
        let t: Vec<f64> = self.r.iter().map(|r| r.ln()).collect();
        let (lo, hi) = (s0.ln(), s1.ln());
        let g = |tt: f64| k * self.w(tt.exp()) + m * tt;
        let mut total = 0.0;
        if lo < t[0] && s0 == 0.0 {
            let a0 = (self.w[1] - self.w[0]) / (t[1] - t[0]);
            let c = k * a0 + m;
            // slopes within rounding of the critical one are not integrable either
            if c <= 1e-9 * (k * a0.abs() + m) {
                return f64::INFINITY;
            }
            let tl = hi.min(t[0]);
            total += (k * (self.w[0] + a0 * (tl - t[0])) + m * tl).exp() / c;
        }
        // breakpoints of the piecewise affine exponent inside (lo, hi)
        let k0 = if s0 == 0.0 { t[0].min(hi) } else { lo };
        let mut knots = vec![k0];
        knots.extend(t.iter().copied().filter(|&x| x > k0 && x < hi));
        knots.push(hi);
        for p in knots.windows(2) {
            if p[1] > p[0] {
                total += exp_affine_integral(g(p[0]), g(p[1]), p[1] - p[0]);
            }
        }
        self.dim.sphere_area() * total
    }

    /// Surface integral of `f(|x|)` over `|x - c| = rho`, `|c| = d`, graded
    /// toward the point of the sphere nearest the origin.
    fn sphere<F: Fn(f64) -> f64>(&self, f: F, d: f64, rho: f64) -> f64 {
        let n = self.dim.n() as i32;
        if d <= 1e-14 * rho {
            return self.dim.sphere_area() * rho.powi(n - 1) * f(rho);
        }
        let gl = GaussLegendre::new(8);
        // φ is the angle from the point nearest the origin
        let h = |phi: f64| {
            let s = ((d - rho).powi(2) + 4.0 * d * rho * (0.5 * phi).sin().powi(2)).sqrt();
            let sp = match self.dim {
                Dim::Two => 1.0,
                Dim::Four => phi.sin().powi(2),
            };
            f(s) * sp
        };
        let split = PI / 4.0;
        let near = gl.integrate(|tau| {
            let phi = tau.exp();
            h(phi) * phi
        }, (split * 1e-30).ln(), split.ln(), 64);
        let far = gl.integrate(h, split, PI, 12);
        self.dim.equator_area() * rho.powi(n - 1) * (near + far)
    }
}

fn radial_of(f: &ConformalFactor) -> Option<Radial<'_>> {
    match &f.samples {
        FactorSamples::Radial { r, w } => Some(Radial { dim: f.dim, r, w }),
        FactorSamples::Planar { .. } => None,
    }
}

/// Integral over `[a, b]` with log panels toward `a`.
fn graded<F: Fn(f64) -> f64>(gl: &GaussLegendre, f: F, a: f64, b: f64, panels: usize) -> f64 {
    let l = b - a;
    if l <= 0.0 {
        return 0.0;
    }
    gl.integrate(|tau| {
        let u = tau.exp();
        f(a + u) * u
    }, (l * 1e-30).ln(), l.ln(), 2 * panels)
}

/// Integral over `[a, b]` with `s = a + (b-a)(1 - cos φ)/2`.
fn cos_panels<F: Fn(f64) -> f64>(gl: &GaussLegendre, f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    gl.integrate(|phi| {
        let s = a + 0.5 * (b - a) * (1.0 - phi.cos());
        f(s) * 0.5 * (b - a) * phi.sin()
    }, 0.0, PI, panels)
}

/// Angular measure of `{θ : s e^{iθ} ∈ P}`.
fn angular_measure(v: &[[f64; 2]], s: f64) -> f64 {
    let m = v.len();
    let mut angles = Vec::new();
    for i in 0..m {
        let (p, q) = (v[i], v[(i + 1) % m]);
        let e = [q[0] - p[0], q[1] - p[1]];
        let a = e[0] * e[0] + e[1] * e[1];
        let b = 2.0 * (p[0] * e[0] + p[1] * e[1]);
        let c = p[0] * p[0] + p[1] * p[1] - s * s;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for u in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
            if (0.0..1.0).contains(&u) {
                angles.push((p[1] + u * e[1]).atan2(p[0] + u * e[0]));
            }
        }
    }
    if angles.is_empty() {
        return if point_in_polygon(v, s, 0.0) { 2.0 * PI } else { 0.0 };
    }
    angles.sort_by(f64::total_cmp);
    let k = angles.len();
    let mut total = 0.0;
    for i in 0..k {
        let a0 = angles[i];
        let a1 = if i + 1 < k { angles[i + 1] } else { angles[0] + 2.0 * PI };
        if a1 - a0 <= 0.0 {
            continue;
        }
        let mid = 0.5 * (a0 + a1);
        if point_in_polygon(v, s * mid.cos(), s * mid.sin()) {
            total += a1 - a0;
        }
    }
    total
}

fn check_planar_inside(d: &Domain, g: &GridSpec) -> Result<()> {
    let (x0, x1, y0, y1) = d.bbox();
    let tol = 1e-12 * g.diameter();
    if x0 < g.x0 - tol || x1 > g.x_max() + tol || y0 < g.y0 - tol || y1 > g.y_max() + tol {
        return Err(Error::OutsideDomain { point: [0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.0, 0.0] });
    }
    Ok(())
}

/// Sutherland–Hodgman clip of a polygon to a rectangle, returning the area.
fn polygon_rect_area(v: &[[f64; 2]], x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut poly: Vec<[f64; 2]> = v.to_vec();
    let planes: [(usize, f64, bool); 4] = [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)];
    for (axis, val, keep_above) in planes {
        if poly.is_empty() {
            return 0.0;
        }
        let inside = |p: &[f64; 2]| if keep_above { p[axis] >= val } else { p[axis] <= val };
        let mut out = Vec::with_capacity(poly.len() + 4);
        let m = poly.len();
        for i in 0..m {
            let (cur, prev) = (poly[i], poly[(i + m - 1) % m]);
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (val - prev[axis]) / (cur[axis] - prev[axis]);
                out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
            }
            if ci {
                out.push(cur);
            }
        }
        poly = out;
    }
    if poly.len() < 3 {
        0.0
    } else {
        signed_area(&poly).abs()
    }
}

fn cell_overlap(d: &Domain, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    match d {
        Domain::Ball(b) => {
            let (cx, cy) = (b.center.0[0], b.center.0[1]);
            disk_rect_area(b.radius, x0 - cx, x1 - cx, y0 - cy, y1 - cy)
        }
        Domain::Annulus { r0, r1 } => {
            disk_rect_area(*r1, x0, x1, y0, y1) - disk_rect_area(*r0, x0, x1, y0, y1)
        }
        Domain::Polygon(v) => polygon_rect_area(v, x0, x1, y0, y1),
    }
}

/// `∫_Ω e^{nw} dx`.
pub fn weighted_volume(d: &Domain, f: &ConformalFactor) -> Result<f64> {
    d.check_dim(f.dim)?;
    let nf = f.dim.nf();
    if let Some(rad) = radial_of(f) {
        return Ok(match d {
            Domain::Ball(b) => {
                let dist = b.center.norm();
                if dist <= 1e-14 * b.radius {
                    rad.centered(nf, nf, b.radius)
                } else {
                    let nodes = BallNodes::new(f.dim, dist, b.radius, RadialQuadrature::default());
                    nodes.integrate_fn(|s| (nf * rad.w(s)).exp())
                }
            }
            Domain::Annulus { r0, r1 } => rad.shell(nf, nf, *r0, *r1),
            Domain::Polygon(v) => polygon_radial_volume(&rad, v),
        });
    }
    let FactorSamples::Planar { grid, w } = &f.samples else { unreachable!() };
    check_planar_inside(d, grid)?;
    let (bx0, bx1, by0, by1) = d.bbox();
    let i0 = (((bx0 - grid.x0) / grid.dx).floor().max(0.0)) as usize;
    let i1 = (((bx1 - grid.x0) / grid.dx).ceil() as usize).min(grid.nx);
    let j0 = (((by0 - grid.y0) / grid.dy).floor().max(0.0)) as usize;
    let j1 = (((by1 - grid.y0) / grid.dy).ceil() as usize).min(grid.ny);
    let mut total = 0.0;
    for j in j0..j1 {
        for i in i0..i1 {
            let xa = grid.x0 + i as f64 * grid.dx;
            let ya = grid.y0 + j as f64 * grid.dy;
            let a = cell_overlap(d, xa, xa + grid.dx, ya, ya + grid.dy);
            if a > 0.0 {
                total += a * (2.0 * w[grid.index(i, j)]).exp();
            }
        }
    }
    Ok(total)
}

fn polygon_radial_volume(rad: &Radial, v: &[[f64; 2]]) -> f64 {
    let m = v.len();
    let mut breaks: Vec<f64> = v.iter().map(|p| p[0].hypot(p[1])).collect();
    let mut dmin = f64::INFINITY;
    for i in 0..m {
        let (dist, _) = segment_foot(v[i], v[(i + 1) % m]);
        breaks.push(dist);
        dmin = dmin.min(dist);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    let gl = GaussLegendre::new(8);
    let mut total = 0.0;
    let mut lo = dmin;
    if point_in_polygon(v, 0.0, 0.0) && dmin > 0.0 {
        total += rad.centered(2.0, 2.0, dmin);
    }
    let ww = |s: f64| (2.0 * rad.w(s)).exp() * angular_measure(v, s) * s;
    for &b in &breaks {
        if b <= lo {
            continue;
        }
        total += if lo == 0.0 { graded(&gl, ww, 0.0, b, 40) } else { cos_panels(&gl, ww, lo, b, 6) };
        lo = b;
    }
    total
}

/// `∫_{∂Ω} e^{(n-1)w} dS`.
pub fn weighted_perimeter(d: &Domain, f: &ConformalFactor) -> Result<f64> {
    d.check_dim(f.dim)?;
    let k = f.dim.nf() - 1.0;
    let sigma = f.dim.sphere_area();
    let n = f.dim.n() as i32;
    if let Some(rad) = radial_of(f) {
        let g = |s: f64| (k * rad.w(s)).exp();
        return Ok(match d {
            Domain::Ball(b) => rad.sphere(g, b.center.norm(), b.radius),
            Domain::Annulus { r0, r1 } => {
                sigma * (r0.powi(n - 1) * g(*r0) + r1.powi(n - 1) * g(*r1))
            }
            Domain::Polygon(v) => {
                let gl = GaussLegendre::new(8);
                let m = v.len();
                (0..m)
                    .map(|i| {
                        let (p, q) = (v[i], v[(i + 1) % m]);
                        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
                        // distance to the supporting line and the foot parameter
                        let e = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
                        let h = (p[0] * e[1] - p[1] * e[0]).abs();
                        let xa = p[0] * e[0] + p[1] * e[1];
                        let xb = xa + len;
                        let along = |x: f64| g(h.hypot(x));
                        if xa < 0.0 && xb > 0.0 {
                            graded(&gl, along, 0.0, xb, 24) + graded(&gl, |x| along(-x), 0.0, -xa, 24)
                        } else if xa >= 0.0 {
                            graded(&gl, along, xa, xb, 24)
                        } else {
                            graded(&gl, |x| along(-x), -xb, -xa, 24)
                        }
                    })
                    .sum()
            }
        });
    }
    let FactorSamples::Planar { grid, w } = &f.samples else { unreachable!() };
    check_planar_inside(d, grid)?;
    let step = 0.25 * grid.dx.min(grid.dy);
    let ew = |x: f64, y: f64| bilinear(grid, w, x, y).map(f64::exp).unwrap_or(0.0);
    let circle = |cx: f64, cy: f64, r: f64| {
        let m = ((2.0 * PI * r / step).ceil() as usize).max(64);
        let dth = 2.0 * PI / m as f64;
        (0..m)
            .map(|i| {
                let th = (i as f64 + 0.5) * dth;
                ew(cx + r * th.cos(), cy + r * th.sin())
            })
            .sum::<f64>()
            * r
            * dth
    };
    Ok(match d {
        Domain::Ball(b) => circle(b.center.0[0], b.center.0[1], b.radius),
        Domain::Annulus { r0, r1 } => circle(0.0, 0.0, *r0) + circle(0.0, 0.0, *r1),
        Domain::Polygon(v) => {
            let m = v.len();
            (0..m)
                .map(|i| {
                    let (p, q) = (v[i], v[(i + 1) % m]);
                    let len = (q[0] - p[0]).hypot(q[1] - p[1]);
                    let pieces = ((len / step).ceil() as usize).max(1);
                    let dl = len / pieces as f64;
                    (0..pieces)
                        .map(|j| {
                            let t = (j as f64 + 0.5) / pieces as f64;
                            ew(p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))
                        })
                        .sum::<f64>()
                        * dl
                })
                .sum()
        }
    })
}

/// `|Ω|_g^{(n-1)/n} / |∂Ω|_g`.
pub fn isoperimetric_ratio(d: &Domain, f: &ConformalFactor) -> Result<f64> {
    let v = weighted_volume(d, f)?;
    let p = weighted_perimeter(d, f)?;
    if !(v > 0.0) || !(p > 0.0) || !v.is_finite() || !p.is_finite() {
        return Err(Error::Diagnostic(format!("degenerate domain: volume {v}, perimeter {p}")));
    }
    let nf = f.dim.nf();
    Ok(v.powf((nf - 1.0) / nf) / p)
}

/// Asymptotic isoperimetric constants of origin-centred balls: `L²/(4πA)`
/// for n = 2 and `L^{4/3}/(4(2π²)^{1/3}A)` for n = 4.
pub fn finn_constant(f: &ConformalFactor, radii: &[f64]) -> Result<Vec<f64>> {
    let rad = radial_of(f).ok_or_else(|| Error::param("factor", "finn constants need a radial factor"))?;
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::param("radii", "must be positive and increasing"));
    }
    let nf = f.dim.nf();
    Ok(radii
        .iter()
        .map(|&r| {
            let a = rad.centered(nf, nf, r);
            let l = f.dim.sphere_area() * r.powf(nf - 1.0) * ((nf - 1.0) * rad.w(r)).exp();
            match f.dim {
                Dim::Two => l * l / (4.0 * PI * a),
                Dim::Four => l.powf(4.0 / 3.0) / (4.0 * (2.0 * PI * PI).cbrt() * a),
            }
        })
        .collect())
}

/// Compactly supported radial test functions `f(x) = φ(|x - c| / ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Zero,
    /// `φ(t) = exp(1 - 1/(1 - t²))`.
    Bump { center: Point, radius: f64 },
    /// `φ = 1` on `[0, 1/2]`, smooth descent to 0 at 1.
    Plateau { center: Point, radius: f64 },
}

impl TestFunction {
    /// `(φ(t), φ'(t))` for `t ∈ [0, 1)`.
    fn profile(&self, t: f64) -> (f64, f64) {
        if t >= 1.0 {
            return (0.0, 0.0);
        }
        match self {
            TestFunction::Zero => (0.0, 0.0),
            TestFunction::Bump { .. } => {
                let q = 1.0 - t * t;
                let v = (1.0 - 1.0 / q).exp();
                (v, -2.0 * t * v / (q * q))
            }
            TestFunction::Plateau { .. } => {
                if t <= 0.5 {
                    return (1.0, 0.0);
                }
                let tau = 2.0 * t - 1.0;
                let a = (-1.0 / tau).exp();
                let b = (-1.0 / (1.0 - tau)).exp();
                if a == 0.0 || b == 0.0 {
                    return (if a == 0.0 { 1.0 } else { 0.0 }, 0.0);
                }
                let s = a / (a + b);
                let ds = a * b * (1.0 / (tau * tau) + 1.0 / ((1.0 - tau) * (1.0 - tau))) / ((a + b) * (a + b));
                (1.0 - s, -2.0 * ds)
            }
        }
    }

    fn support(&self) -> Option<(Point, f64)> {
        match *self {
            TestFunction::Zero => None,
            TestFunction::Bump { center, radius } | TestFunction::Plateau { center, radius } => {
                Some((center, radius))
            }
        }
    }
}

/// `‖f‖_{L^{p*}(g)} / ‖∇_g f‖_{L^p(g)}` with `p* = np/(n-p)`.
pub fn sobolev_ratio(tf: &TestFunction, f: &ConformalFactor, p: f64) -> Result<f64> {
    let nf = f.dim.nf();
    if !(p >= 1.0 && p < nf) {
        return Err(Error::param("p", format!("{p} must lie in [1, n)")));
    }
    let Some((c, rho)) = tf.support() else { return Ok(0.0) };
    if !(rho > 0.0) || !c.fits(f.dim) {
        return Err(Error::param("test function", "radius must be positive and center in ℝⁿ"));
    }
    let ps = nf * p / (nf - p);
    let (lhs, rhs) = if let Some(rad) = radial_of(f) {
        let gl = GaussLegendre::new(8);
        let d = c.norm();
        let shell = |t: f64| {
            let (phi, dphi) = tf.profile(t / rho);
            let top = if phi > 0.0 {
                phi.powf(ps) * rad.sphere(|s| (nf * rad.w(s)).exp(), d, t)
            } else {
                0.0
            };
            let bottom = if dphi != 0.0 {
                (dphi.abs() / rho).powf(p) * rad.sphere(|s| ((nf - p) * rad.w(s)).exp(), d, t)
            } else {
                0.0
            };
            (top, bottom)
        };
        let integrate = |pick: &dyn Fn((f64, f64)) -> f64| {
            let g = |t: f64| pick(shell(t));
            if d > 0.0 && d < rho {
                // the shell integrand has a kink where the sphere meets the origin
                graded(&gl, g, 0.0, 0.5 * d, 24)
                    + graded(&gl, |x| g(1.5 * d - x), 0.0, 0.5 * d, 24)
                    + graded(&gl, g, d, rho, 24)
            } else {
                graded(&gl, g, 0.0, rho, 40)
            }
        };
        (integrate(&|v| v.0), integrate(&|v| v.1))
    } else {
        let FactorSamples::Planar { grid, w } = &f.samples else { unreachable!() };
        let dom = Domain::ball(c, rho)?;
        check_planar_inside(&dom, grid)?;
        let mut top = 0.0;
        let mut bottom = 0.0;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                let t = (x - c.0[0]).hypot(y - c.0[1]) / rho;
                if t >= 1.0 {
                    continue;
                }
                let (phi, dphi) = tf.profile(t);
                let wv = w[grid.index(i, j)];
                top += phi.powf(ps) * (nf * wv).exp();
                bottom += (dphi.abs() / rho).powf(p) * ((nf - p) * wv).exp();
            }
        }
        (top * grid.cell_area(), bottom * grid.cell_area())
    };
    Ok(lhs.powf(1.0 / ps) / rhs.powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Balls,
    Stars,
    Annuli,
    Mixed,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balls" => Ok(FamilyKind::Balls),
            "stars" => Ok(FamilyKind::Stars),
            "annuli" => Ok(FamilyKind::Annuli),
            "mixed" => Ok(FamilyKind::Mixed),
            _ => Err(Error::param("family", format!("unknown family `{s}`"))),
        }
    }
}

/// Seeded finite surrogate for "all smooth bounded domains".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFamily {
    pub domains: Vec<Domain>,
    pub kind: FamilyKind,
    pub seed: u64,
}

impl DomainFamily {
    /// Domains at scales `10^{-2}..10^{2}`, centred on and off the origin.
    /// Star domains are planar, so n = 4 mixed families use balls and annuli.
    pub fn seeded(dim: Dim, kind: FamilyKind, count: usize, seed: u64) -> Result<Self> {
        if kind == FamilyKind::Stars && dim != Dim::Two {
            return Err(Error::param("family", "star domains need n = 2"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut domains = Vec::with_capacity(count);
        for i in 0..count {
            let pick = match kind {
                FamilyKind::Balls => 0,
                FamilyKind::Annuli => 1,
                FamilyKind::Stars => 2,
                FamilyKind::Mixed => {
                    if dim == Dim::Two {
                        i % 3
                    } else {
                        i % 2
                    }
                }
            };
            let radius = 10f64.powf(rng.gen_range(-2.0..=2.0));
            let domain = match pick {
                0 => {
                    // a quarter of the balls pass through the origin
                    let dist = if rng.gen_bool(0.25) {
                        radius
                    } else if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        radius * 10f64.powf(rng.gen_range(-2.0..=1.0))
                    };
                    Domain::ball(random_direction(&mut rng, dim) * dist, radius)?
                }
                1 => Domain::annulus(radius, radius * 10f64.powf(rng.gen_range(0.05..=2.0)))?,
                _ => {
                    let dist = if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        radius * 10f64.powf(rng.gen_range(-2.0..=0.5))
                    };
                    let c = random_direction(&mut rng, Dim::Two) * dist;
                    let amps: Vec<(f64, f64)> = (1..=4)
                        .map(|_| (rng.gen_range(-0.12..=0.12), rng.gen_range(0.0..2.0 * PI)))
                        .collect();
                    let m = 64;
                    let radii: Vec<f64> = (0..m)
                        .map(|k| {
                            let th = 2.0 * PI * k as f64 / m as f64;
                            let wob: f64 = amps
                                .iter()
                                .enumerate()
                                .map(|(j, (a, ph))| a * ((j + 1) as f64 * th + ph).cos())
                                .sum();
                            radius * (1.0 + wob)
                        })
                        .collect();
                    Domain::star([c.0[0], c.0[1]], &radii)?
                }
            };
            domains.push(domain);
        }
        Ok(DomainFamily { domains, kind, seed })
    }
}

fn random_direction(rng: &mut ChaCha8Rng, dim: Dim) -> Point {
    loop {
        let mut c = [0.0; 4];
        for v in c.iter_mut().take(dim.n()) {
            *v = rng.gen_range(-1.0..=1.0);
        }
        let p = Point(c);
        let l = p.norm();
        if l > 1e-3 && l <= 1.0 {
            return p * (1.0 / l);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoFamilyReport {
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    pub argmax: usize,
    pub count: usize,
    pub seed: u64,
}

/// Isoperimetric ratios over a family.
pub fn iso_family_report(fam: &DomainFamily, f: &ConformalFactor) -> Result<IsoFamilyReport> {
    let ratios: Vec<f64> = fam
        .domains
        .par_iter()
        .map(|d| isoperimetric_ratio(d, f))
        .collect::<Result<_>>()?;
    let (argmax, sup) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let inf = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(IsoFamilyReport {
        sup_ratio: sup,
        inf_ratio: inf,
        argmax,
        count: ratios.len(),
        seed: fam.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::log_space;
    use proptest::prelude::*;

    fn flat(dim: Dim) -> ConformalFactor {
        let r = log_space(1e-3, 1e3, 61);
        let w = vec![0.0; r.len()];
        ConformalFactor::from_radial_samples(dim, r, w).unwrap()
    }

    fn cone(dim: Dim, beta: f64) -> ConformalFactor {
        let r = log_space(1e-3, 1e3, 61);
        let w = r.iter().map(|x| -beta * x.ln()).collect();
        ConformalFactor::from_radial_samples(dim, r, w).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn flat_closed_forms() {
        let f2 = flat(Dim::Two);
        let unit = Domain::ball(Point::ORIGIN, 1.0).unwrap();
        assert!(close(weighted_volume(&unit, &f2).unwrap(), PI, 1e-12));
        assert!(close(weighted_perimeter(&unit, &f2).unwrap(), 2.0 * PI, 1e-12));
        let off = Domain::ball(Point::xy(0.7, -0.2), 0.5).unwrap();
        assert!(close(weighted_volume(&off, &f2).unwrap(), PI * 0.25, 1e-10));
        assert!(close(weighted_perimeter(&off, &f2).unwrap(), PI, 1e-10));
        let sq = Domain::polygon(vec![[0.2, 0.1], [1.2, 0.1], [1.2, 1.1], [0.2, 1.1]]).unwrap();
        assert!(close(weighted_perimeter(&sq, &f2).unwrap(), 4.0, 1e-10));
        assert!(close(weighted_volume(&sq, &f2).unwrap(), 1.0, 1e-7));
        let around = Domain::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        assert!(close(weighted_volume(&around, &f2).unwrap(), 4.0, 1e-7));
        for r in [1e-2, 1.0, 37.0] {
            let b = Domain::ball(Point::ORIGIN, r).unwrap();
            assert!(close(isoperimetric_ratio(&b, &f2).unwrap(), 0.5 / PI.sqrt(), 1e-10));
        }
        let f4 = flat(Dim::Four);
        let b4 = Domain::ball(Point::on_axis(0.3), 2.0).unwrap();
        assert!(close(weighted_volume(&b4, &f4).unwrap(), PI * PI / 2.0 * 16.0, 1e-10));
        assert!(close(weighted_perimeter(&b4, &f4).unwrap(), 2.0 * PI * PI * 8.0, 1e-10));
    }

    #[test]
    fn cone_closed_forms() {
        let f = cone(Dim::Four, 0.5);
        for r in [0.05, 1.0, 20.0] {
            let b = Domain::ball(Point::ORIGIN, r).unwrap();
            assert!(close(weighted_volume(&b, &f).unwrap(), PI * PI * r * r, 1e-12));
            assert!(close(weighted_perimeter(&b, &f).unwrap(), 2.0 * PI * PI * r.powf(1.5), 1e-12));
            let ratio = (PI * PI).powf(0.75) / (2.0 * PI * PI);
            assert!(close(isoperimetric_ratio(&b, &f).unwrap(), ratio, 1e-12));
        }
        for dim in [Dim::Two, Dim::Four] {
            let c = finn_constant(&cone(dim, 0.5), &[0.1, 1.0, 1e4]).unwrap();
            assert!(c.iter().all(|v| close(*v, 0.5, 1e-12)), "{c:?}");
            let c = finn_constant(&flat(dim), &[0.1, 1.0, 1e4]).unwrap();
            assert!(c.iter().all(|v| close(*v, 1.0, 1e-12)), "{c:?}");
        }
    }

    #[test]
    fn ball_through_apex() {
        // the off-center quadrature must handle the singular point on the boundary
        let f = cone(Dim::Two, 0.5);
        let b = Domain::ball(Point::xy(1.0, 0.0), 1.0).unwrap();
        // ∫ over the circle |x - e1| = 1 of |x|^{-1/2}: |x| = 2 sin(θ/2)
        // 4 · 2^{-1/2} ∫_0^{π/2} sin^{-1/2} u du = 2^{3/2} Γ(1/4)Γ(1/2) / (2Γ(3/4))
        let exact = 2f64.sqrt() * 3.625609908221908 * PI.sqrt() / 1.225416702465178;
        let p = weighted_perimeter(&b, &f).unwrap();
        assert!(close(p, exact, 1e-9), "{p} {exact}");
        let v = weighted_volume(&b, &f).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn polygon_volume_matches_ball_for_fine_polygons() {
        let f = cone(Dim::Two, 0.4);
        let m = 2000;
        let radii = vec![0.8; m];
        let star = Domain::star([0.3, 0.1], &radii).unwrap();
        let ball = Domain::ball(Point::xy(0.3, 0.1), 0.8).unwrap();
        let (a, b) = (weighted_volume(&star, &f).unwrap(), weighted_volume(&ball, &f).unwrap());
        assert!(close(a, b, 1e-4), "{a} {b}");
        let (a, b) = (weighted_perimeter(&star, &f).unwrap(), weighted_perimeter(&ball, &f).unwrap());
        assert!(close(a, b, 1e-4), "{a} {b}");
    }

    #[test]
    fn cylinder_ratio_grows_like_log_power() {
        let f = cone(Dim::Four, 1.0);
        let ratio = |r: f64| isoperimetric_ratio(&Domain::annulus(1.0, r).unwrap(), &f).unwrap();
        let slope = (ratio(6f64.exp()) / ratio(2f64.exp())).ln() / 3f64.ln();
        assert!(close(slope, 0.75, 1e-9), "{slope}");
    }

    #[test]
    fn planar_factor_agrees_with_radial() {
        let grid = GridSpec::centered(3.0, 300).unwrap();
        let w: Vec<f64> = (0..grid.ny)
            .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
            .map(|(i, j)| {
                let (x, y) = grid.center(i, j);
                -0.1 * (x * x + y * y).exp().ln_1p()
            })
            .collect();
        let fp = ConformalFactor::from_planar_samples(grid, w).unwrap();
        let r = log_space(1e-3, 10.0, 400);
        let wr = r.iter().map(|x| -0.1 * (x * x).exp().ln_1p()).collect();
        let fr = ConformalFactor::from_radial_samples(Dim::Two, r, wr).unwrap();
        let d = Domain::ball(Point::xy(0.5, 0.2), 1.1).unwrap();
        let (a, b) = (weighted_volume(&d, &fp).unwrap(), weighted_volume(&d, &fr).unwrap());
        assert!(close(a, b, 1e-3), "{a} {b}");
        let (a, b) = (weighted_perimeter(&d, &fp).unwrap(), weighted_perimeter(&d, &fr).unwrap());
        assert!(close(a, b, 1e-3), "{a} {b}");
        let far = Domain::ball(Point::xy(2.5, 0.0), 1.0).unwrap();
        assert!(matches!(weighted_volume(&far, &fp), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn sobolev_flat_plateau_is_near_isoperimetric() {
        let f = flat(Dim::Two);
        let tf = TestFunction::Plateau { center: Point::xy(0.3, 0.0), radius: 1.0 };
        let s = sobolev_ratio(&tf, &f, 1.0).unwrap();
        let iso = 0.5 / PI.sqrt();
        assert!(s > 0.5 * iso && s <= iso * (1.0 + 1e-9), "{s} {iso}");
        assert_eq!(sobolev_ratio(&TestFunction::Zero, &f, 1.0).unwrap(), 0.0);
        assert!(sobolev_ratio(&tf, &f, 2.0).is_err());
    }

    #[test]
    fn sobolev_cone_bounded_across_scales() {
        let f = cone(Dim::Four, 0.5);
        let vals: Vec<f64> = [0.01, 0.3, 1.0, 30.0]
            .iter()
            .flat_map(|&r| {
                [0.0, 0.5, 1.0, 3.0].map(|off| {
                    let tf = TestFunction::Bump { center: Point::on_axis(off * r), radius: r };
                    sobolev_ratio(&tf, &f, 2.0).unwrap()
                })
            })
            .collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |a, v| (a.0.min(*v), a.1.max(*v)));
        assert!(lo > 0.0 && hi < 10.0 * lo, "{vals:?}");
    }

    #[test]
    fn families_are_reproducible_and_valid() {
        let a = DomainFamily::seeded(Dim::Two, FamilyKind::Mixed, 60, 4).unwrap();
        assert_eq!(a, DomainFamily::seeded(Dim::Two, FamilyKind::Mixed, 60, 4).unwrap());
        let rep = iso_family_report(&a, &cone(Dim::Two, 0.5)).unwrap();
        assert!(rep.sup_ratio.is_finite() && rep.sup_ratio < 1.0);
        assert!(DomainFamily::seeded(Dim::Four, FamilyKind::Stars, 3, 1).is_err());
        let f4 = DomainFamily::seeded(Dim::Four, FamilyKind::Mixed, 40, 4).unwrap();
        let rep = iso_family_report(&f4, &cone(Dim::Four, 0.5)).unwrap();
        assert!(rep.sup_ratio.is_finite());
    }

    #[test]
    fn bad_domains_rejected() {
        assert!(Domain::ball(Point::ORIGIN, 0.0).is_err());
        assert!(Domain::annulus(2.0, 1.0).is_err());
        assert!(Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        // bow tie
        assert!(Domain::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        let sq = Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(weighted_volume(&sq, &flat(Dim::Four)).is_err());
    }

    proptest! {
        #[test]
        fn flat_ball_ratio_is_scale_free(r in 1e-2..1e2f64) {
            let f = flat(Dim::Four);
            let b = Domain::ball(Point::ORIGIN, r).unwrap();
            let expect = (PI * PI / 2.0).powf(0.75) / (2.0 * PI * PI);
            prop_assert!(close(isoperimetric_ratio(&b, &f).unwrap(), expect, 1e-10));
        }

        #[test]
        fn volume_is_additive_over_annuli(a in 0.01..1.0f64, b in 1.0..5.0f64, c in 5.0..50.0f64) {
            let f = cone(Dim::Two, 0.3);
            let whole = weighted_volume(&Domain::annulus(a, c).unwrap(), &f).unwrap();
            let parts = weighted_volume(&Domain::annulus(a, b).unwrap(), &f).unwrap()
                + weighted_volume(&Domain::annulus(b, c).unwrap(), &f).unwrap();
            prop_assert!(close(whole, parts, 1e-12));
        }
    }
}
