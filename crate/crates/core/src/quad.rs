//! Quadrature rules shared by the potential, map and weight modules.
//!
//! Three pieces matter:
//! - Gauss–Legendre panels for smooth one-dimensional integrands;
//! - cumulative integrals of `exp(g(t))` on a log-radius grid, exact when `g`
//!   is affine (power laws);
//! - radial integrals over balls and spheres that are *not* centered at the
//!   origin, reduced to one dimension through the fraction of each centered
//!   sphere covered by the ball.

use std::f64::consts::PI;

use crate::geom::{sphere_fraction_in_ball, Dim};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integral of `f` over [a, b] split into `panels` equal panels.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += w * f(mid + 0.5 * h * x);
            }
        }
        0.5 * h * total
    }

    /// Nodes and weights of the composite rule on [a, b].
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for k in 0..panels {
            let mid = a + h * (k as f64 + 0.5);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

fn legendre(order: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Three-point derivative estimates of `y(t)` on a non-uniform grid.
///
/// Exact for quadratics in the interior and at both ends.
pub fn nonuniform_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    assert_eq!(n, y.len());
    assert!(n >= 2);
    if n == 2 {
        let d = (y[1] - y[0]) / (t[1] - t[0]);
        return vec![d, d];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        d[i] = -h1 / (h0 * (h0 + h1)) * y[i - 1] + (h1 - h0) / (h0 * h1) * y[i]
            + h0 / (h1 * (h0 + h1)) * y[i + 1];
    }
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1]
        - h0 / (h1 * (h0 + h1)) * y[2];
    let m = n - 1;
    let (h0, h1) = (t[m - 1] - t[m - 2], t[m] - t[m - 1]);
    d[m] = h1 / (h0 * (h0 + h1)) * y[m - 2] - (h0 + h1) / (h0 * h1) * y[m - 1]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * y[m];
    d
}

/// Cubic Hermite interpolation on [t0, t1].
pub fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let x = (t - t0) / h;
    let x2 = x * x;
    let x3 = x2 * x;
    (2.0 * x3 - 3.0 * x2 + 1.0) * y0
        + (x3 - 2.0 * x2 + x) * h * d0
        + (-2.0 * x3 + 3.0 * x2) * y1
        + (x3 - x2) * h * d1
}

/// Cumulative integrals `∫_{t_0}^{t_i} exp(g(t)) dt` for sampled `g`.
///
/// Each interval integrates the exponential of the cubic Hermite interpolant
/// of `g` with six-point Gauss–Legendre, so affine `g` (a power law in r) is
/// integrated to rounding accuracy.
pub fn cumulative_exp_integral(t: &[f64], g: &[f64]) -> Vec<f64> {
    let n = t.len();
    let dg = nonuniform_derivative(t, g);
    let gl = GaussLegendre::new(6);
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let (a, b) = (t[i], t[i + 1]);
        let slope = (g[i + 1] - g[i]) / (b - a);
        let affine = (dg[i] - slope).abs() < 1e-12 * (1.0 + slope.abs())
            && (dg[i + 1] - slope).abs() < 1e-12 * (1.0 + slope.abs());
        let piece = if affine {
            exp_affine_integral(g[i], g[i + 1], b - a)
        } else {
            gl.integrate(
                |x| hermite(a, b, g[i], g[i + 1], dg[i], dg[i + 1], x).exp(),
                a,
                b,
                1,
            )
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

/// `∫_0^h exp(g0 + (g1 - g0) x / h) dx`.
pub fn exp_affine_integral(g0: f64, g1: f64, h: f64) -> f64 {
    let dg = g1 - g0;
    if dg.abs() < 1e-8 {
        // series of (e^{dg} - 1)/dg
        h * g0.exp() * (1.0 + dg / 2.0 + dg * dg / 6.0 + dg * dg * dg / 24.0)
    } else {
        h * (g1.exp() - g0.exp()) / dg
    }
}

/// Tunable resolution for the radial ball integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialQuadrature {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Panels on each radial piece.
    pub panels: usize,
    /// Innermost radius, relative to the outer radius, before the power-law cap.
    pub inner_ratio: f64,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        RadialQuadrature {
            order: 8,
            panels: 48,
            inner_ratio: 1e-12,
        }
    }
}

/// Quadrature nodes in the radial variable `s = |y|` for integrals of radial
/// functions over a ball `B(c, rho)` with `|c| = d`.
///
/// The weights already contain `σ_{n-1} s^{n-1}` and the covered-sphere
/// fraction. When the ball contains the origin, the region below the
/// innermost node is handled by a power-law cap whose exponent is fitted from
/// the two innermost samples.
#[derive(Debug, Clone)]
pub struct BallNodes {
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    dim: Dim,
    /// Index of the two innermost nodes used to fit the cap.
    cap: Option<(usize, usize)>,
}

impl BallNodes {
    pub fn new(dim: Dim, d: f64, rho: f64, q: RadialQuadrature) -> Self {
        let gl = GaussLegendre::new(q.order);
        let sigma = dim.sphere_area();
        let n = dim.n() as i32;
        let mut s = Vec::new();
        let mut w = Vec::new();
        let mut cap = None;
        let outer = d + rho;
        if d < rho {
            // full spheres on [0, rho - d]
            let a = rho - d;
            let lo = a * q.inner_ratio;
            // two dedicated cap nodes, then log panels
            let s0 = lo;
            let s1 = lo * 2.0;
            cap = Some((0, 1));
            s.push(s0);
            w.push(0.0);
            s.push(s1);
            w.push(0.0);
            for (t, wt) in gl.composite(lo.ln(), a.ln(), q.panels) {
                let r = t.exp();
                s.push(r);
                w.push(wt * r * sigma * r.powi(n - 1));
            }
            push_partial(&gl, dim, d, rho, a, outer, q.panels, &mut s, &mut w);
        } else {
            let a = d - rho;
            if a < 0.05 * outer {
                // nearly touching the origin: square-root edge at a, graded
                // log panels through the middle, square-root edge at the outer end
                let mid = 0.5 * outer;
                let lo = if a > 0.0 {
                    push_partial(&gl, dim, d, rho, a, 3.0 * a, q.panels, &mut s, &mut w);
                    3.0 * a
                } else {
                    outer * q.inner_ratio
                };
                for (t, wt) in gl.composite(lo.ln(), mid.ln(), q.panels) {
                    let r = t.exp();
                    let frac = sphere_fraction_in_ball(dim, r, d, rho);
                    s.push(r);
                    w.push(wt * r * sigma * r.powi(n - 1) * frac);
                }
                push_partial(&gl, dim, d, rho, mid, outer, q.panels, &mut s, &mut w);
            } else {
                push_partial(&gl, dim, d, rho, a, outer, q.panels, &mut s, &mut w);
            }
        }
        BallNodes { s, w, dim, cap }
    }

    /// Integrate tabulated values `f(s_i)`.
    ///
    /// Returns `+∞` when the fitted inner power law is not integrable.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let mut total: f64 = self.w.iter().zip(values).map(|(w, v)| w * v).sum();
        if let Some((i0, i1)) = self.cap {
            let (v0, v1) = (values[i0], values[i1]);
            let (s0, s1) = (self.s[i0], self.s[i1]);
            let a = if v0 > 0.0 && v1 > 0.0 || v0 < 0.0 && v1 < 0.0 {
                (v1 / v0).ln() / (s1 / s0).ln()
            } else {
                0.0
            };
            let nf = self.dim.nf();
            if nf + a <= 1e-9 {
                return f64::INFINITY;
            }
            total += v0 * self.dim.sphere_area() * s0.powf(nf) / (nf + a);
        }
        total
    }

    pub fn integrate_fn<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let values: Vec<f64> = self.s.iter().map(|&s| f(s)).collect();
        self.integrate(&values)
    }
}

#[allow(clippy::too_many_arguments)]
fn push_partial(
    gl: &GaussLegendre,
    dim: Dim,
    d: f64,
    rho: f64,
    a: f64,
    b: f64,
    panels: usize,
    s: &mut Vec<f64>,
    w: &mut Vec<f64>,
) {
    if b <= a {
        return;
    }
    let sigma = dim.sphere_area();
    let n = dim.n() as i32;
    // the covered fraction behaves like a square root at both ends; the
    // substitution s = a + (b-a)(1-cos φ)/2 removes it
    for (phi, wt) in gl.composite(0.0, PI, panels) {
        let r = a + 0.5 * (b - a) * (1.0 - phi.cos());
        let jac = 0.5 * (b - a) * phi.sin();
        let frac = sphere_fraction_in_ball(dim, r, d, rho);
        if frac > 0.0 {
            s.push(r);
            w.push(wt * jac * sigma * r.powi(n - 1) * frac);
        }
    }
}

/// Integral of a radial function `f(|x|)` over the sphere `|x - c| = rho`
/// with `|c| = d`, with respect to surface measure.
pub fn sphere_integral_radial<F: Fn(f64) -> f64>(
    dim: Dim,
    f: F,
    d: f64,
    rho: f64,
    panels: usize,
) -> f64 {
    let gl = GaussLegendre::new(8);
    let sin_pow = |th: f64| match dim {
        Dim::Two => 1.0,
        Dim::Four => th.sin().powi(2),
    };
    let integrand = |th: f64| {
        let s = (d * d + rho * rho + 2.0 * d * rho * th.cos()).max(0.0).sqrt();
        f(s) * sin_pow(th)
    };
    dim.equator_area() * rho.powi(dim.n() as i32 - 1) * gl.integrate(integrand, 0.0, PI, panels)
}
