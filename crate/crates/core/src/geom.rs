//! Points, supported dimensions, and the sphere/ball constants that every
//! radial reduction in the crate relies on.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Even dimensions handled by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    Two,
    Four,
}

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dim::Two),
            4 => Ok(Dim::Four),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    pub fn n(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Four => 4,
        }
    }

    pub fn nf(self) -> f64 {
        self.n() as f64
    }

    /// Surface area of the unit sphere S^{n-1}.
    pub fn sphere_area(self) -> f64 {
        match self {
            Dim::Two => 2.0 * PI,
            Dim::Four => 2.0 * PI * PI,
        }
    }

    /// Surface area of the unit sphere S^{n-2} (the "latitude" measure).
    pub fn equator_area(self) -> f64 {
        match self {
            Dim::Two => 2.0,
            Dim::Four => 4.0 * PI,
        }
    }

    /// Volume of the unit ball.
    pub fn ball_volume(self) -> f64 {
        self.sphere_area() / self.nf()
    }

    pub fn ball_volume_r(self, r: f64) -> f64 {
        self.ball_volume() * r.powi(self.n() as i32)
    }
}

/// A point of R^n stored in four coordinates; unused coordinates are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point(pub [f64; 4]);

impl Point {
    pub const ORIGIN: Point = Point([0.0; 4]);

    pub fn xy(x: f64, y: f64) -> Self {
        Point([x, y, 0.0, 0.0])
    }

    /// The point r·e₁.
    pub fn on_axis(r: f64) -> Self {
        Point([r, 0.0, 0.0, 0.0])
    }

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        if c.is_empty() || c.len() > 4 {
            return Err(Error::param(
                "point",
                format!("expected 1 to 4 coordinates, got {}", c.len()),
            ));
        }
        let mut p = [0.0; 4];
        p[..c.len()].copy_from_slice(c);
        Ok(Point(p))
    }

    /// True when the coordinates beyond the first `n` vanish.
    pub fn fits(&self, dim: Dim) -> bool {
        self.0[dim.n()..].iter().all(|&c| c == 0.0)
    }

    pub fn dot(&self, o: &Point) -> f64 {
        self.0.iter().zip(o.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, o: &Point) -> f64 {
        (*self - *o).norm()
    }

    pub fn coords(&self, dim: Dim) -> &[f64] {
        &self.0[..dim.n()]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        let mut p = self.0;
        for (a, b) in p.iter_mut().zip(o.0) {
            *a += b;
        }
        Point(p)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        let mut p = self.0;
        for (a, b) in p.iter_mut().zip(o.0) {
            *a -= b;
        }
        Point(p)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point(self.0.map(|c| c * k))
    }
}

/// A closed Euclidean ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn centered(radius: f64) -> Self {
        Ball {
            center: Point::ORIGIN,
            radius,
        }
    }

    pub fn volume(&self, dim: Dim) -> f64 {
        dim.ball_volume_r(self.radius)
    }
}

/// Fraction of the sphere {|y| = s} that lies inside the closed ball of radius
/// `rho` whose center sits at distance `d` from the origin.
pub fn sphere_fraction_in_ball(dim: Dim, s: f64, d: f64, rho: f64) -> f64 {
    if s <= 0.0 {
        return if d <= rho { 1.0 } else { 0.0 };
    }
    if d <= 0.0 {
        return if s <= rho { 1.0 } else { 0.0 };
    }
    let c = (s * s + d * d - rho * rho) / (2.0 * s * d);
    if c <= -1.0 {
        return 1.0;
    }
    if c >= 1.0 {
        return 0.0;
    }
    let theta = c.acos();
    match dim {
        Dim::Two => theta / PI,
        Dim::Four => (theta - theta.sin() * theta.cos()) / PI,
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2, "log_space({lo}, {hi}, {count})");
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Log-spaced grid with a fixed number of points per decade.
pub fn log_grid_per_decade(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = ((decades * per_decade as f64).ceil() as usize).max(1) + 1;
    log_space(lo, hi, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_constants() {
        assert!((Dim::Two.ball_volume() - PI).abs() < 1e-15);
        assert!((Dim::Four.ball_volume() - PI * PI / 2.0).abs() < 1e-15);
        assert!(Dim::new(6).is_err());
    }

    #[test]
    fn fraction_limits() {
        // ball containing the whole sphere
        assert_eq!(sphere_fraction_in_ball(Dim::Two, 1.0, 0.5, 2.0), 1.0);
        // disjoint
        assert_eq!(sphere_fraction_in_ball(Dim::Four, 1.0, 5.0, 1.0), 0.0);
        // ball through the origin, sphere radius equal to the center distance:
        // half-angle pi/3 in the plane
        let f = sphere_fraction_in_ball(Dim::Two, 1.0, 1.0, 1.0);
        assert!((f - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fraction_matches_monte_carlo_in_four_dimensions() {
        // deterministic quasi-random directions on S^3 via a lattice in Hopf coordinates
        let (s, d, rho) = (1.0, 0.8, 0.9);
        let exact = sphere_fraction_in_ball(Dim::Four, s, d, rho);
        let m = 400;
        let mut hits = 0.0;
        let mut total = 0.0;
        for i in 0..m {
            // eta in (0, pi/2), weight sin(eta)cos(eta)
            let eta = (i as f64 + 0.5) / m as f64 * PI / 2.0;
            let w = eta.sin() * eta.cos();
            for j in 0..64 {
                let xi1 = (j as f64 + 0.5) / 64.0 * 2.0 * PI;
                let x = s * eta.sin() * xi1.cos();
                let y = s * eta.sin() * xi1.sin();
                // z² + w² = s²cos²η whatever the second Hopf angle
                let zc = s * eta.cos();
                let dist2 = (x - d).powi(2) + y * y + zc * zc;
                total += w;
                if dist2 <= rho * rho {
                    hits += w;
                }
            }
        }
        assert!((hits / total - exact).abs() < 5e-3, "{} vs {}", hits / total, exact);
    }
}
