//! Signed measures with finite total variation: exact atoms plus either a
//! radial density `f(|x|) dx` or a planar cell density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{log_space, sphere_fraction_in_ball, Ball, Dim, Point};

/// Largest planar grid accepted, in cells.
pub const MAX_CELLS: usize = 16_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Point,
    pub weight: f64,
}

impl Atom {
    pub fn new(location: Point, weight: f64) -> Self {
        Atom { location, weight }
    }
}

/// Radial density sampled on a strictly increasing positive grid.
///
/// Integrals use the trapezoid rule in `t = ln r` against `σ_{n-1} r^n dt`;
/// the density is zero outside `[r_first, r_last]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    r: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialDensity {
    pub fn new(dim: Dim, r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if r.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} radii but {} values",
                r.len(),
                values.len()
            )));
        }
        if r.len() < 2 {
            return Err(Error::InvalidGrid("need at least two radii".into()));
        }
        if r[0] <= 0.0 || !r[0].is_finite() {
            return Err(Error::InvalidGrid(format!("radius {} is not positive", r[0])));
        }
        if let Some(i) = r.windows(2).position(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "radii not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("density value {v} is not finite")));
        }
        let weights = radial_weights(dim, &r);
        Ok(RadialDensity { r, values, weights })
    }

    /// Sample `f` on the grid.
    pub fn from_fn<F: Fn(f64) -> f64>(dim: Dim, r: Vec<f64>, f: F) -> Result<Self> {
        let values = r.iter().map(|&x| f(x)).collect();
        Self::new(dim, r, values)
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Volume quadrature weights: `∫ g(|x|) f(|x|) dx ≈ Σ W_i f_i g(r_i)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Linear interpolation in r; zero outside the grid.
    pub fn value_at(&self, r: f64) -> f64 {
        if r < self.r[0] || r > self.r_max() {
            return 0.0;
        }
        let i = self.r.partition_point(|&x| x <= r);
        if i == 0 {
            return self.values[0];
        }
        if i >= self.r.len() {
            return *self.values.last().unwrap();
        }
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let x = (r - r0) / (r1 - r0);
        self.values[i - 1] * (1.0 - x) + self.values[i] * x
    }

    fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        RadialDensity {
            r: self.r.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Exact weights for the piecewise-linear interpolant of `f` against `σ r^{n-1} dr`.
pub fn radial_weights(dim: Dim, r: &[f64]) -> Vec<f64> {
    let sigma = dim.sphere_area();
    let k = dim.n() - 1;
    let binom = |j: usize| (1..=j).fold(1.0, |acc, i| acc * (k + 1 - i) as f64 / i as f64);
    let mut w = vec![0.0; r.len()];
    for i in 1..r.len() {
        let (a, d) = (r[i - 1], r[i] - r[i - 1]);
        // ∫₀¹ s (a + s d)^k ds and ∫₀¹ (1 - s)(a + s d)^k ds, expanded in powers of s
        let (mut up, mut down) = (0.0, 0.0);
        for j in 0..=k {
            let t = binom(j) * a.powi((k - j) as i32) * d.powi(j as i32);
            up += t / (j + 2) as f64;
            down += t / ((j + 1) * (j + 2)) as f64;
        }
        w[i] += sigma * d * up;
        w[i - 1] += sigma * d * down;
    }
    w
}

/// Cell centre measured from both ends so that symmetric grids hit 0 exactly.
fn centre(x0: f64, dx: f64, n: usize, i: usize) -> f64 {
    let lo = x0 + (i as f64 + 0.5) * dx;
    let hi = x0 + n as f64 * dx - ((n - i) as f64 - 0.5) * dx;
    let c = 0.5 * (lo + hi);
    if c.abs() <= 1e-12 * dx { 0.0 } else { c }
}

/// Axis-aligned planar grid of `nx × ny` cells with lower-left corner `(x0, y0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid("grid needs at least one cell".into()));
        }
        if nx.saturating_mul(ny) > MAX_CELLS {
            return Err(Error::InvalidGrid(format!(
                "{nx}×{ny} cells exceed the cap of {MAX_CELLS}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidGrid(format!("cell size {dx}×{dy} must be positive")));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::InvalidGrid("corner must be finite".into()));
        }
        Ok(GridSpec { nx, ny, x0, y0, dx, dy })
    }

    /// Square grid of `cells × cells` covering `[-half, half]²`.
    pub fn centered(half: f64, cells: usize) -> Result<Self> {
        let h = 2.0 * half / cells as f64;
        Self::new(cells, cells, -half, -half, h, h)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            centre(self.x0, self.dx, self.nx, i),
            centre(self.y0, self.dy, self.ny, j),
        )
    }

    /// Cell containing `(x, y)`, if any.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.x0) / self.dx).floor();
        let fj = ((y - self.y0) / self.dy).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.nx as f64 * self.dx
    }

    pub fn y_max(&self) -> f64 {
        self.y0 + self.ny as f64 * self.dy
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x_max() && y >= self.y0 && y <= self.y_max()
    }

    pub fn diameter(&self) -> f64 {
        (self.nx as f64 * self.dx).hypot(self.ny as f64 * self.dy)
    }
}

/// Cell-averaged planar density, row-major (`j * nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarDensity {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl PlanarDensity {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("density value {v} is not finite")));
        }
        Ok(PlanarDensity { grid, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self::new(grid, values)
    }

    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        match self.grid.locate(x, y) {
            Some((i, j)) => self.values[self.grid.index(i, j)],
            None => 0.0,
        }
    }

    fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        PlanarDensity {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Radial(RadialDensity),
    Planar(PlanarDensity),
}

/// A signed Radon measure: exact atoms plus at most one sampled density.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    dim: Dim,
    atoms: Vec<Atom>,
    density: Option<Density>,
}

impl SignedMeasure {
    pub fn new(dim: Dim, atoms: Vec<Atom>, density: Option<Density>) -> Result<Self> {
        for a in &atoms {
            if !a.location.fits(dim) {
                return Err(Error::InvalidMeasure(format!(
                    "atom at {:?} has coordinates beyond dimension {}",
                    a.location.0,
                    dim.n()
                )));
            }
            if !a.weight.is_finite() || a.location.0.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMeasure("atom is not finite".into()));
            }
        }
        if matches!(density, Some(Density::Planar(_))) && dim != Dim::Two {
            return Err(Error::InvalidMeasure(
                "planar densities exist only in dimension 2".into(),
            ));
        }
        Ok(SignedMeasure { dim, atoms, density })
    }

    pub fn zero(dim: Dim) -> Self {
        SignedMeasure {
            dim,
            atoms: Vec::new(),
            density: None,
        }
    }

    pub fn atom(dim: Dim, location: Point, weight: f64) -> Result<Self> {
        Self::new(dim, vec![Atom::new(location, weight)], None)
    }

    pub fn atoms_only(dim: Dim, atoms: Vec<Atom>) -> Result<Self> {
        Self::new(dim, atoms, None)
    }

    pub fn radial(dim: Dim, density: RadialDensity) -> Self {
        SignedMeasure {
            dim,
            atoms: Vec::new(),
            density: Some(Density::Radial(density)),
        }
    }

    pub fn planar(density: PlanarDensity) -> Self {
        SignedMeasure {
            dim: Dim::Two,
            atoms: Vec::new(),
            density: Some(Density::Planar(density)),
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn radial_density(&self) -> Option<&RadialDensity> {
        match &self.density {
            Some(Density::Radial(d)) => Some(d),
            _ => None,
        }
    }

    pub fn planar_density(&self) -> Option<&PlanarDensity> {
        match &self.density {
            Some(Density::Planar(d)) => Some(d),
            _ => None,
        }
    }

    /// True when the measure is invariant under rotations about the origin.
    pub fn is_radial(&self) -> bool {
        self.planar_density().is_none()
            && self
                .atoms
                .iter()
                .all(|a| a.weight == 0.0 || a.location.norm() == 0.0)
    }

    /// Radius beyond which the measure vanishes, if it is compactly supported.
    pub fn support_radius(&self) -> f64 {
        let mut r = self
            .atoms
            .iter()
            .filter(|a| a.weight != 0.0)
            .map(|a| a.location.norm())
            .fold(0.0, f64::max);
        match &self.density {
            Some(Density::Radial(d)) => {
                if let Some(i) = d.values.iter().rposition(|&v| v != 0.0) {
                    let edge = if i + 1 < d.r.len() { d.r[i + 1] } else { d.r[i] };
                    r = r.max(edge);
                }
            }
            Some(Density::Planar(p)) => {
                let g = &p.grid;
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        if p.values[g.index(i, j)] != 0.0 {
                            let (x, y) = g.center(i, j);
                            r = r.max(
                                (x.abs() + 0.5 * g.dx).hypot(y.abs() + 0.5 * g.dy),
                            );
                        }
                    }
                }
            }
            None => {}
        }
        r
    }

    pub fn scaled(&self, k: f64) -> Self {
        SignedMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom::new(a.location, k * a.weight))
                .collect(),
            density: self.density.as_ref().map(|d| map_density(d, |v| k * v)),
        }
    }
}

fn map_density<F: Fn(f64) -> f64>(d: &Density, f: F) -> Density {
    match d {
        Density::Radial(r) => Density::Radial(r.map_values(f)),
        Density::Planar(p) => Density::Planar(p.map_values(f)),
    }
}

fn density_integral<F: Fn(f64) -> f64>(d: &Density, f: F) -> f64 {
    match d {
        Density::Radial(r) => r.weights.iter().zip(&r.values).map(|(w, &v)| w * f(v)).sum(),
        Density::Planar(p) => p.grid.cell_area() * p.values.iter().map(|&v| f(v)).sum::<f64>(),
    }
}

/// `∫ d|μ|`.
pub fn total_variation(mu: &SignedMeasure) -> f64 {
    let atoms: f64 = mu.atoms.iter().map(|a| a.weight.abs()).sum();
    atoms + mu.density.as_ref().map_or(0.0, |d| density_integral(d, f64::abs))
}

/// `∫ dμ`.
pub fn total_mass(mu: &SignedMeasure) -> f64 {
    let atoms: f64 = mu.atoms.iter().map(|a| a.weight).sum();
    atoms + mu.density.as_ref().map_or(0.0, |d| density_integral(d, |v| v))
}

/// `μ|_{B(0,k)}`.
pub fn restrict_ball(mu: &SignedMeasure, k: f64) -> Result<SignedMeasure> {
    if !(k > 0.0) {
        return Err(Error::param("k", format!("restriction radius {k} must be positive")));
    }
    let atoms = mu
        .atoms
        .iter()
        .filter(|a| a.location.norm() <= k)
        .copied()
        .collect();
    let density = match &mu.density {
        None => None,
        Some(Density::Radial(d)) => restrict_radial(mu.dim, d, k)?.map(Density::Radial),
        Some(Density::Planar(p)) => {
            let g = p.grid;
            let mut values = p.values.clone();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let (x, y) = g.center(i, j);
                    if x.hypot(y) > k {
                        values[g.index(i, j)] = 0.0;
                    }
                }
            }
            Some(Density::Planar(PlanarDensity { grid: g, values }))
        }
    };
    Ok(SignedMeasure {
        dim: mu.dim,
        atoms,
        density,
    })
}

/// `μ - μ|_{B(0,k)}`, the part of μ outside the closed ball.
pub fn complement(mu: &SignedMeasure, k: f64) -> Result<SignedMeasure> {
    if !(k > 0.0) {
        return Err(Error::param("k", format!("radius {k} must be positive")));
    }
    let atoms = mu
        .atoms
        .iter()
        .filter(|a| a.location.norm() > k)
        .copied()
        .collect();
    let density = match &mu.density {
        None => None,
        Some(Density::Radial(d)) => {
            if k >= d.r_max() {
                None
            } else if k <= d.r[0] {
                Some(Density::Radial(d.clone()))
            } else {
                let i = d.r.partition_point(|&x| x <= k);
                let mut r = vec![k];
                let mut v = vec![d.value_at(k)];
                r.extend_from_slice(&d.r[i..]);
                v.extend_from_slice(&d.values[i..]);
                if r.len() < 2 {
                    None
                } else {
                    Some(Density::Radial(RadialDensity::new(mu.dim, r, v)?))
                }
            }
        }
        Some(Density::Planar(p)) => {
            let g = p.grid;
            let mut values = p.values.clone();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let (x, y) = g.center(i, j);
                    if x.hypot(y) <= k {
                        values[g.index(i, j)] = 0.0;
                    }
                }
            }
            Some(Density::Planar(PlanarDensity { grid: g, values }))
        }
    };
    Ok(SignedMeasure {
        dim: mu.dim,
        atoms,
        density,
    })
}

fn restrict_radial(dim: Dim, d: &RadialDensity, k: f64) -> Result<Option<RadialDensity>> {
    if k <= d.r[0] {
        return Ok(None);
    }
    if k >= d.r_max() {
        return Ok(Some(d.clone()));
    }
    let i = d.r.partition_point(|&x| x < k);
    let mut r = d.r[..i].to_vec();
    let mut v = d.values[..i].to_vec();
    r.push(k);
    v.push(d.value_at(k));
    if r.len() < 2 {
        return Ok(None);
    }
    RadialDensity::new(dim, r, v).map(Some)
}

/// `(μ₊, μ₋)` with `μ = μ₊ - μ₋`.
pub fn split_pos_neg(mu: &SignedMeasure) -> (SignedMeasure, SignedMeasure) {
    let pos_atoms = mu
        .atoms
        .iter()
        .filter(|a| a.weight > 0.0)
        .copied()
        .collect();
    let neg_atoms = mu
        .atoms
        .iter()
        .filter(|a| a.weight < 0.0)
        .map(|a| Atom::new(a.location, -a.weight))
        .collect();
    let pos = mu.density.as_ref().map(|d| map_density(d, |v| v.max(0.0)));
    let neg = mu.density.as_ref().map(|d| map_density(d, |v| (-v).max(0.0)));
    (
        SignedMeasure {
            dim: mu.dim,
            atoms: pos_atoms,
            density: pos,
        },
        SignedMeasure {
            dim: mu.dim,
            atoms: neg_atoms,
            density: neg,
        },
    )
}

/// A maximal-function value; the sup diverges at atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum MaximalValue {
    Finite(f64),
    Infinite,
}

impl MaximalValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, MaximalValue::Finite(_))
    }

    /// The value, with `+∞` for the divergent case.
    pub fn value(&self) -> f64 {
        match self {
            MaximalValue::Finite(v) => *v,
            MaximalValue::Infinite => f64::INFINITY,
        }
    }
}

/// `|μ|(B(x, r))`.
pub fn variation_in_ball(mu: &SignedMeasure, ball: &Ball) -> f64 {
    let x = ball.center;
    let r = ball.radius;
    let atoms: f64 = mu
        .atoms
        .iter()
        .filter(|a| a.location.dist(&x) <= r)
        .map(|a| a.weight.abs())
        .sum();
    let dens = match &mu.density {
        None => 0.0,
        Some(Density::Radial(d)) => {
            let c = x.norm();
            d.r.iter()
                .zip(&d.values)
                .zip(&d.weights)
                .map(|((&s, v), w)| w * v.abs() * sphere_fraction_in_ball(mu.dim, s, c, r))
                .sum()
        }
        Some(Density::Planar(p)) => planar_ball_integral(p, x.0[0], x.0[1], r, f64::abs),
    };
    atoms + dens
}

/// `∫_{B((cx,cy), r)} f(density)`, with cells cut by the circle weighted by
/// their exact overlap area.
pub(crate) fn planar_ball_integral<F: Fn(f64) -> f64>(
    p: &PlanarDensity,
    cx: f64,
    cy: f64,
    r: f64,
    f: F,
) -> f64 {
    let g = &p.grid;
    let half_diag = 0.5 * g.dx.hypot(g.dy);
    let i_lo = (((cx - r - g.x0) / g.dx).floor().max(0.0)) as usize;
    let j_lo = (((cy - r - g.y0) / g.dy).floor().max(0.0)) as usize;
    let i_hi = ((((cx + r - g.x0) / g.dx).ceil()).max(0.0) as usize).min(g.nx);
    let j_hi = ((((cy + r - g.y0) / g.dy).ceil()).max(0.0) as usize).min(g.ny);
    let mut total = 0.0;
    for j in j_lo..j_hi {
        for i in i_lo..i_hi {
            let (x, y) = g.center(i, j);
            let dist = (x - cx).hypot(y - cy);
            if dist - half_diag >= r {
                continue;
            }
            let v = f(p.values[g.index(i, j)]);
            if dist + half_diag <= r {
                total += v * g.cell_area();
            } else {
                let (xa, ya) = (x - 0.5 * g.dx - cx, y - 0.5 * g.dy - cy);
                total += v * disk_rect_area(r, xa, xa + g.dx, ya, ya + g.dy);
            }
        }
    }
    total
}

/// Area of the disk of radius `r` about the origin inside `[x0,x1]×[y0,y1]`.
pub fn disk_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let f = |x, y| disk_quadrant_area(r, x, y);
    (f(x1, y1) - f(x0, y1) - f(x1, y0) + f(x0, y0)).max(0.0)
}

/// Area of the disk of radius `r` inside `{X ≤ x, Y ≤ y}`.
fn disk_quadrant_area(r: f64, x: f64, y: f64) -> f64 {
    // H(X) = ∫_0^X sqrt(r² - s²) ds
    let h = |x: f64| {
        let x = x.clamp(-r, r);
        0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
    };
    let xc = x.clamp(-r, r);
    if y <= -r || x <= -r {
        return 0.0;
    }
    if y >= r {
        return 2.0 * (h(xc) - h(-r));
    }
    let xs = (r * r - y * y).sqrt();
    if y < 0.0 {
        // integrand y + sqrt(r² - X²) on |X| < xs
        let b = xc.min(xs);
        if b <= -xs {
            return 0.0;
        }
        y * (b + xs) + h(b) - h(-xs)
    } else {
        let mut total = 2.0 * (h(xc.min(-xs)) - h(-r));
        if xc > -xs {
            let b = xc.min(xs);
            total += y * (b + xs) + h(b) - h(-xs);
        }
        if xc > xs {
            total += 2.0 * (h(xc) - h(xs));
        }
        total
    }
}

/// `sup_r |B(x,r)|⁻¹ |μ|(B(x,r))` over the supplied radii.
pub fn maximal_function(mu: &SignedMeasure, x: Point, radii: &[f64]) -> Result<MaximalValue> {
    if radii.is_empty() {
        return Err(Error::param("radii", "at least one radius is required"));
    }
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::param("radii", format!("radius {r} is not positive")));
    }
    if mu.atoms.iter().any(|a| a.weight != 0.0 && a.location == x) {
        return Ok(MaximalValue::Infinite);
    }
    let best = radii
        .iter()
        .map(|&r| {
            let ball = Ball::new(x, r);
            variation_in_ball(mu, &ball) / ball.volume(mu.dim)
        })
        .fold(0.0, f64::max);
    Ok(MaximalValue::Finite(best))
}

/// 64 log-spaced radii from the grid scale up to the domain diameter.
pub fn default_radii(mu: &SignedMeasure) -> Vec<f64> {
    let (lo, hi) = match &mu.density {
        Some(Density::Radial(d)) => (
            (d.r[1] - d.r[0]).max(1e-6 * d.r_max()),
            2.0 * d.r_max(),
        ),
        Some(Density::Planar(p)) => (p.grid.dx.min(p.grid.dy), p.grid.diameter()),
        None => {
            let s = mu.support_radius().max(1.0);
            (1e-3 * s, 4.0 * s)
        }
    };
    log_space(lo, hi.max(2.0 * lo), 64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::log_grid_per_decade;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn gaussian(dim: Dim) -> SignedMeasure {
        let r = log_grid_per_decade(1e-5, 8.0, 400);
        SignedMeasure::radial(dim, RadialDensity::from_fn(dim, r, |x| (-x * x).exp()).unwrap())
    }

    #[test]
    fn single_atom_and_zero() {
        let mu = SignedMeasure::atom(Dim::Two, Point::ORIGIN, 0.7).unwrap();
        assert_eq!(total_variation(&mu), 0.7);
        assert_eq!(total_variation(&SignedMeasure::zero(Dim::Four)), 0.0);
        assert_eq!(total_mass(&SignedMeasure::zero(Dim::Two)), 0.0);
    }

    #[test]
    fn gaussian_variation_is_pi() {
        let v = total_variation(&gaussian(Dim::Two));
        assert!((v - PI).abs() < 1e-4, "{v}");
    }

    #[test]
    fn mass_of_two_atoms() {
        let mu = SignedMeasure::atoms_only(
            Dim::Two,
            vec![
                Atom::new(Point::ORIGIN, 0.5),
                Atom::new(Point::on_axis(1.0), -0.2),
            ],
        )
        .unwrap();
        assert!((total_mass(&mu) - 0.3).abs() < 1e-15);
        assert!(total_mass(&mu).abs() <= total_variation(&mu));
    }

    #[test]
    fn restriction_examples() {
        let far = SignedMeasure::atom(Dim::Four, Point::on_axis(3.0), 1.0).unwrap();
        assert_eq!(total_variation(&restrict_ball(&far, 2.0).unwrap()), 0.0);
        let at0 = SignedMeasure::atom(Dim::Four, Point::ORIGIN, 1.0).unwrap();
        assert_eq!(restrict_ball(&at0, 1e-3).unwrap(), at0);
        assert!(restrict_ball(&at0, 0.0).is_err());

        // r^{-5} on r > 1 in R^4: variation in B(0,2) is π²
        let r = log_grid_per_decade(1.0, 100.0, 8000);
        let d = RadialDensity::from_fn(Dim::Four, r, |x| x.powi(-5)).unwrap();
        let mu = SignedMeasure::radial(Dim::Four, d);
        let v = total_variation(&restrict_ball(&mu, 2.0).unwrap());
        assert!((v - PI * PI).abs() < 1e-5, "{v}");
    }

    #[test]
    fn complement_and_restriction_add_up() {
        let mu = gaussian(Dim::Four);
        let a = total_mass(&restrict_ball(&mu, 1.3).unwrap());
        let b = total_mass(&complement(&mu, 1.3).unwrap());
        assert!((a + b - total_mass(&mu)).abs() < 1e-5, "{a} {b} {}", total_mass(&mu));
    }

    #[test]
    fn maximal_function_of_planar_atom() {
        let mu = SignedMeasure::atom(Dim::Two, Point::ORIGIN, 1.0).unwrap();
        let radii = log_space(1e-3, 10.0, 2000);
        let m = maximal_function(&mu, Point::on_axis(1.0), &radii).unwrap();
        assert!((m.value() - 1.0 / PI).abs() < 0.02 / PI);
        assert_eq!(
            maximal_function(&mu, Point::ORIGIN, &radii).unwrap(),
            MaximalValue::Infinite
        );
        assert!(maximal_function(&mu, Point::ORIGIN, &[]).is_err());
    }

    #[test]
    fn maximal_function_of_constant_density() {
        let grid = GridSpec::centered(5.0, 200).unwrap();
        let mu = SignedMeasure::planar(PlanarDensity::from_fn(grid, |_, _| 2.5).unwrap());
        let m = maximal_function(&mu, Point::xy(0.3, -0.2), &log_space(0.1, 2.0, 16)).unwrap();
        assert!((m.value() - 2.5).abs() < 2.5e-3, "{}", m.value());
    }

    #[test]
    fn split_of_atoms() {
        let (p, q) = (Point::xy(1.0, 0.0), Point::xy(0.0, 1.0));
        let mu =
            SignedMeasure::atoms_only(Dim::Two, vec![Atom::new(p, 2.0), Atom::new(q, -3.0)]).unwrap();
        let (pos, neg) = split_pos_neg(&mu);
        assert_eq!(pos.atoms(), &[Atom::new(p, 2.0)]);
        assert_eq!(neg.atoms(), &[Atom::new(q, 3.0)]);
        let nonneg = gaussian(Dim::Two);
        let (pos, neg) = split_pos_neg(&nonneg);
        assert_eq!(pos, nonneg);
        assert_eq!(total_variation(&neg), 0.0);
    }

    #[test]
    fn split_of_oscillating_density() {
        let dim = Dim::Two;
        let r = log_grid_per_decade(1e-3, 10.0, 2000);
        let d = RadialDensity::from_fn(dim, r.clone(), |x| (3.0 * x).cos() * (-x).exp()).unwrap();
        let mu = SignedMeasure::radial(dim, d);
        let (pos, neg) = split_pos_neg(&mu);
        // independent oracle: trapezoid of the pointwise parts on the same grid
        let w = radial_weights(dim, &r);
        let oracle_pos: f64 = r
            .iter()
            .zip(&w)
            .map(|(x, w)| w * ((3.0 * x).cos() * (-x).exp()).max(0.0))
            .sum();
        assert!((total_variation(&pos) - oracle_pos).abs() < 1e-12);
        assert!(
            (total_variation(&pos) + total_variation(&neg) - total_variation(&mu)).abs() < 1e-12
        );
    }

    #[test]
    fn disk_rectangle_overlap() {
        assert!((disk_rect_area(1.0, -2.0, 2.0, -2.0, 2.0) - PI).abs() < 1e-14);
        assert!((disk_rect_area(1.0, 0.0, 2.0, 0.0, 2.0) - PI / 4.0).abs() < 1e-14);
        assert!((disk_rect_area(1.0, -2.0, 2.0, 0.5, 2.0) - (PI / 3.0 - 0.75f64.sqrt() / 2.0)).abs() < 1e-14);
        assert_eq!(disk_rect_area(1.0, 0.8, 2.0, 0.8, 2.0), 0.0);
        let inner = disk_rect_area(2.0, -0.1, 0.3, 0.2, 0.5);
        assert!((inner - 0.12).abs() < 1e-14);
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(GridSpec::new(0, 3, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(3, 3, 0.0, 0.0, -1.0, 1.0).is_err());
        assert!(GridSpec::new(5000, 5000, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(RadialDensity::new(Dim::Two, vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(RadialDensity::new(Dim::Two, vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    fn atoms_strategy() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -3.0..3.0f64), 0..12)
    }

    fn to_measure(a: &[(f64, f64, f64)]) -> SignedMeasure {
        SignedMeasure::atoms_only(
            Dim::Two,
            a.iter().map(|&(x, y, w)| Atom::new(Point::xy(x, y), w)).collect(),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn split_recomposes_mass(a in atoms_strategy()) {
            let mu = to_measure(&a);
            let (p, n) = split_pos_neg(&mu);
            prop_assert!((total_mass(&p) - total_mass(&n) - total_mass(&mu)).abs() < 1e-12);
            prop_assert!((total_variation(&p) + total_variation(&n) - total_variation(&mu)).abs() < 1e-12);
        }

        #[test]
        fn restriction_variation_is_monotone(a in atoms_strategy(), k1 in 0.1..4.0f64, dk in 0.0..4.0f64) {
            let mu = to_measure(&a);
            let v1 = total_variation(&restrict_ball(&mu, k1).unwrap());
            let v2 = total_variation(&restrict_ball(&mu, k1 + dk).unwrap());
            prop_assert!(v1 <= v2 + 1e-12);
            prop_assert!(v2 <= total_variation(&mu) + 1e-12);
        }

        #[test]
        fn maximal_function_grows_with_positive_atoms(
            a in atoms_strategy(), x in -4.0..4.0f64, y in -4.0..4.0f64,
            ax in -4.0..4.0f64, ay in -4.0..4.0f64, w in 0.0..2.0f64,
        ) {
            let mu = to_measure(&a);
            let mut more = a.clone();
            more.push((ax, ay, w));
            let nu = to_measure(&more);
            let radii = log_space(0.01, 10.0, 32);
            let p = Point::xy(x, y);
            let m1 = maximal_function(&mu, p, &radii).unwrap().value();
            let m2 = maximal_function(&nu, p, &radii).unwrap().value();
            prop_assert!(m2 >= m1 - 1e-12);
        }
    }
}
