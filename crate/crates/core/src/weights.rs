//! Muckenhoupt and strong-A∞ testers for positive weights `ω`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{log_space, Ball, Dim, Point};
use crate::measures::{planar_ball_integral, GridSpec, PlanarDensity};
use crate::potential::{ConformalFactor, FactorSamples};
use crate::quad::{BallNodes, RadialQuadrature};

/// A positive weight, radial (any supported n) or sampled on planar cells.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightField {
    /// `ln ω` at radii `r`, linear in `ln r` between samples and beyond them.
    Radial { dim: Dim, r: Vec<f64>, log_w: Vec<f64> },
    /// Cell values on a planar grid.
    Planar(PlanarDensity),
}

impl WeightField {
    pub fn radial(dim: Dim, r: Vec<f64>, values: &[f64]) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::param("weight", format!("sample {v} is not positive and finite")));
        }
        Self::radial_log(dim, r, values.iter().map(|v| v.ln()).collect())
    }

    pub fn radial_log(dim: Dim, r: Vec<f64>, log_w: Vec<f64>) -> Result<Self> {
        if r.len() != log_w.len() || r.len() < 2 {
            return Err(Error::InvalidGrid("need at least two matching weight samples".into()));
        }
        if r[0] <= 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("radii must be positive and increasing".into()));
        }
        if log_w.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("weight", "samples must be positive and finite"));
        }
        Ok(WeightField::Radial { dim, r, log_w })
    }

    /// `|x|^γ`, exact at every radius.
    pub fn radial_power(dim: Dim, gamma: f64) -> Self {
        let r = vec![1e-6, 1.0, 1e6];
        let log_w = r.iter().map(|x: &f64| gamma * x.ln()).collect();
        WeightField::Radial { dim, r, log_w }
    }

    pub fn planar(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("weight", format!("sample {v} is negative or not finite")));
        }
        Ok(WeightField::Planar(PlanarDensity::new(grid, values)?))
    }

    pub fn planar_fn<F: Fn(f64, f64) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        let d = PlanarDensity::from_fn(grid, f)?;
        Self::planar(grid, d.values)
    }

    /// `ω = e^{nw}` of a conformal factor.
    pub fn from_factor(f: &ConformalFactor) -> Result<Self> {
        let nf = f.dim.nf();
        match &f.samples {
            FactorSamples::Radial { r, w } => {
                Self::radial_log(f.dim, r.clone(), w.iter().map(|v| nf * v).collect())
            }
            FactorSamples::Planar { grid, w } => {
                Self::planar(*grid, w.iter().map(|v| (nf * v).exp()).collect())
            }
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            WeightField::Radial { dim, .. } => *dim,
            WeightField::Planar(_) => Dim::Two,
        }
    }

    fn radial_log_value(r: &[f64], log_w: &[f64], x: f64) -> f64 {
        let m = r.len();
        let k = r.partition_point(|&v| v < x).clamp(1, m - 1);
        let (t0, t1) = (r[k - 1].ln(), r[k].ln());
        let slope = (log_w[k] - log_w[k - 1]) / (t1 - t0);
        if x <= 0.0 {
            return if slope < 0.0 {
                f64::INFINITY
            } else if slope > 0.0 {
                f64::NEG_INFINITY
            } else {
                log_w[0]
            };
        }
        log_w[k - 1] + slope * (x.ln() - t0)
    }

    /// `ω(x)`; planar fields are constant on cells and zero outside.
    pub fn value_at(&self, x: Point) -> f64 {
        match self {
            WeightField::Radial { r, log_w, .. } => {
                Self::radial_log_value(r, log_w, x.norm()).exp()
            }
            WeightField::Planar(p) => p.value_at(x.0[0], x.0[1]),
        }
    }

    /// `∫_B ω^q dx`; `+∞` when the integral diverges.
    pub fn ball_integral(&self, ball: &Ball, q: f64) -> Result<f64> {
        match self {
            WeightField::Radial { dim, r, log_w } => {
                let nodes = BallNodes::new(*dim, ball.center.norm(), ball.radius, RadialQuadrature::default());
                let vals: Vec<f64> = nodes
                    .s
                    .iter()
                    .map(|&s| (q * Self::radial_log_value(r, log_w, s)).exp())
                    .collect();
                Ok(nodes.integrate(&vals))
            }
            WeightField::Planar(p) => {
                let g = &p.grid;
                let (cx, cy) = (ball.center.0[0], ball.center.0[1]);
                let tol = 1e-9 * g.diameter();
                if cx - ball.radius < g.x0 - tol
                    || cx + ball.radius > g.x_max() + tol
                    || cy - ball.radius < g.y0 - tol
                    || cy + ball.radius > g.y_max() + tol
                {
                    return Err(Error::OutsideDomain { point: ball.center.0 });
                }
                Ok(planar_ball_integral(p, cx, cy, ball.radius, |v| {
                    if v == 0.0 && q < 0.0 {
                        f64::INFINITY
                    } else {
                        v.powf(q)
                    }
                }))
            }
        }
    }

    pub fn ball_average(&self, ball: &Ball, q: f64) -> Result<f64> {
        Ok(self.ball_integral(ball, q)? / ball.volume(self.dim()))
    }
}

/// Seeded finite surrogate for "all balls".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub balls: Vec<Ball>,
    pub seed: u64,
}

impl BallFamily {
    /// `count` balls with centers uniform in `[-extent, extent]^n` and radii
    /// log-uniform over `[r_min, 1000 r_min]`, plus `origin_balls`
    /// origin-centred balls spanning the same radii.
    pub fn seeded(
        dim: Dim,
        count: usize,
        extent: f64,
        r_min: f64,
        origin_balls: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut balls = Vec::with_capacity(count + origin_balls);
        for _ in 0..count {
            let mut c = [0.0; 4];
            for v in c.iter_mut().take(dim.n()) {
                *v = rng.gen_range(-extent..=extent);
            }
            let radius = r_min * 10f64.powf(rng.gen_range(0.0..=3.0));
            balls.push(Ball::new(Point(c), radius));
        }
        if origin_balls >= 2 {
            for r in log_space(r_min, 1000.0 * r_min, origin_balls) {
                balls.push(Ball::centered(r));
            }
        }
        BallFamily { balls, seed }
    }

    /// Family kept inside a planar grid.
    pub fn seeded_in_grid(grid: &GridSpec, count: usize, r_min: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 * (grid.x_max() - grid.x0).min(grid.y_max() - grid.y0);
        let r_min = r_min.min(0.5 * half);
        let r_top = (1000.0 * r_min).min(0.95 * half);
        let mut balls = Vec::with_capacity(count);
        while balls.len() < count {
            let radius = r_min * (r_top / r_min).powf(rng.gen_range(0.0..=1.0));
            let x = rng.gen_range(grid.x0 + radius..=grid.x_max() - radius);
            let y = rng.gen_range(grid.y0 + radius..=grid.y_max() - radius);
            balls.push(Ball::new(Point::xy(x, y), radius));
        }
        BallFamily { balls, seed }
    }

    pub fn origin_centered(radii: &[f64]) -> Self {
        BallFamily {
            balls: radii.iter().map(|&r| Ball::centered(r)).collect(),
            seed: 0,
        }
    }
}

/// `sup_B (⨍ω)(⨍ω^{-1/(p-1)})^{p-1}` over the family.
pub fn ap_constant(w: &WeightField, p: f64, balls: &BallFamily) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::param("p", format!("{p} must exceed 1")));
    }
    let vals: Vec<f64> = balls
        .balls
        .par_iter()
        .map(|b| {
            let a = w.ball_average(b, 1.0)?;
            let d = w.ball_average(b, -1.0 / (p - 1.0))?;
            Ok(a * d.powf(p - 1.0))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `max_x max_r ⨍_{B(x,r)} ω / ω(x)`.
pub fn a1_ratio(w: &WeightField, points: &[Point], radii: &[f64]) -> Result<f64> {
    if radii.is_empty() || points.is_empty() {
        return Err(Error::param("radii", "need at least one point and one radius"));
    }
    let vals: Vec<f64> = points
        .par_iter()
        .map(|&x| {
            let wx = w.value_at(x);
            let mut best = 0.0f64;
            for &r in radii {
                let avg = w.ball_average(&Ball::new(x, r), 1.0)?;
                best = best.max(avg / wx);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `sup_B (⨍ω^r)^{1/r} / ⨍ω`.
pub fn reverse_holder(w: &WeightField, r_exp: f64, balls: &BallFamily) -> Result<f64> {
    if !(r_exp > 1.0) {
        return Err(Error::param("r_exp", format!("{r_exp} must exceed 1")));
    }
    let vals: Vec<f64> = balls
        .balls
        .par_iter()
        .map(|b| {
            let hi = w.ball_average(b, r_exp)?;
            let lo = w.ball_average(b, 1.0)?;
            Ok(hi.powf(1.0 / r_exp) / lo)
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy)]
struct State {
    cost: f64,
    node: usize,
}

impl PartialEq for State {
    fn eq(&self, o: &Self) -> bool {
        self.cost.total_cmp(&o.cost) == Ordering::Equal
    }
}
impl Eq for State {}
impl PartialOrd for State {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for State {
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost.total_cmp(&self.cost).then_with(|| o.node.cmp(&self.node))
    }
}

/// Shortest 8-connected path between grid nodes; edge cost is the mean of
/// the endpoint densities times the edge length.
pub fn grid_dijkstra(
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    density: &[f64],
    from: (usize, usize),
    to: (usize, usize),
) -> f64 {
    let idx = |i: usize, j: usize| j * nx + i;
    let (src, dst) = (idx(from.0, from.1), idx(to.0, to.1));
    if src == dst {
        return 0.0;
    }
    let mut dist = vec![f64::INFINITY; nx * ny];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(State { cost: 0.0, node: src });
    let diag = hx.hypot(hy);
    const STEPS: [(i64, i64); 8] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ];
    while let Some(State { cost, node }) = heap.pop() {
        if node == dst {
            return cost;
        }
        if cost > dist[node] {
            continue;
        }
        let (i, j) = ((node % nx) as i64, (node / nx) as i64);
        for (di, dj) in STEPS {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                continue;
            }
            let next = idx(a as usize, b as usize);
            let len = match (di != 0, dj != 0) {
                (true, true) => diag,
                (true, false) => hx,
                _ => hy,
            };
            let c = cost + 0.5 * (density[node] + density[next]) * len;
            if c < dist[next] {
                dist[next] = c;
                heap.push(State { cost: c, node: next });
            }
        }
    }
    dist[dst]
}

/// Cells per unit separation used for radial geodesics.
const RADIAL_STEPS: f64 = 40.0;

/// Upper bound for `d_ω(x, y) = inf ∫_γ ω^{1/n} |ds|`.
///
/// Planar fields run on their own cell centers (points snap to the nearest
/// center). Radial fields run on a grid in the 2-plane through `x`, `y` and
/// the origin, with `x` and `y` on one grid row.
pub fn geodesic_distance(w: &WeightField, x: Point, y: Point) -> Result<f64> {
    let nf = w.dim().nf();
    match w {
        WeightField::Planar(p) => {
            let g = &p.grid;
            let snap = |pt: Point| -> Result<(usize, usize)> {
                if !g.contains(pt.0[0], pt.0[1]) || !pt.fits(Dim::Two) {
                    return Err(Error::OutsideDomain { point: pt.0 });
                }
                let i = (((pt.0[0] - g.x0) / g.dx - 0.5).round().max(0.0) as usize).min(g.nx - 1);
                let j = (((pt.0[1] - g.y0) / g.dy - 0.5).round().max(0.0) as usize).min(g.ny - 1);
                Ok((i, j))
            };
            let (a, b) = (snap(x)?, snap(y)?);
            let dens: Vec<f64> = p.values.iter().map(|v| v.powf(1.0 / nf)).collect();
            Ok(grid_dijkstra(g.nx, g.ny, g.dx, g.dy, &dens, a, b))
        }
        WeightField::Radial { r, log_w, .. } => {
            let diff = y - x;
            let l = diff.norm();
            if l == 0.0 {
                return Ok(0.0);
            }
            let e1 = diff * (1.0 / l);
            // component of x orthogonal to e1
            let xo = x - e1 * x.dot(&e1);
            let b = xo.norm();
            // plane coordinates: x = (ax, b), y = (ax + l, b), origin = (0, 0)
            let ax = x.dot(&e1);
            let h = l / RADIAL_STEPS;
            let margin = 0.75 * l;
            let (mut lo_u, mut hi_u) = (ax - margin, ax + l + margin);
            let (mut lo_v, mut hi_v) = (b - margin, b + margin);
            // let paths pass near the origin when it is close to the segment
            if b < 2.0 * l {
                lo_u = lo_u.min(-margin);
                hi_u = hi_u.max(margin);
                lo_v = lo_v.min(-margin);
                hi_v = hi_v.max(margin);
            }
            let i0 = ((ax - lo_u) / h).ceil() as usize;
            let j0 = ((b - lo_v) / h).ceil() as usize;
            let u0 = ax - i0 as f64 * h;
            let v0 = b - j0 as f64 * h;
            let nx = i0 + RADIAL_STEPS as usize + ((hi_u - ax - l) / h).ceil() as usize + 1;
            let ny = j0 + ((hi_v - b) / h).ceil() as usize + 1;
            let mut dens = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    let (u, v) = (u0 + i as f64 * h, v0 + j as f64 * h);
                    let rr = u.hypot(v);
                    dens.push((WeightField::radial_log_value(r, log_w, rr) / nf).exp());
                }
            }
            Ok(grid_dijkstra(
                nx,
                ny,
                h,
                h,
                &dens,
                (i0, j0),
                (i0 + RADIAL_STEPS as usize, j0),
            ))
        }
    }
}

/// `δ(x, y) = (∫_{B_{x,y}} ω)^{1/n}`, with `B_{x,y}` centred at the midpoint.
pub fn measure_distance(w: &WeightField, x: Point, y: Point) -> Result<f64> {
    let l = x.dist(&y);
    if l == 0.0 {
        return Ok(0.0);
    }
    let ball = Ball::new((x + y) * 0.5, 0.5 * l);
    Ok(w.ball_integral(&ball, 1.0)?.powf(1.0 / w.dim().nf()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongAinftyReport {
    /// `max d_ω / δ`.
    pub c_upper: f64,
    /// `max δ / d_ω`; infinite when some pair has `d_ω = 0 < δ`.
    pub c_lower: f64,
    pub pairs: usize,
    /// First pair with `d_ω = 0 < δ`.
    pub failure_witness: Option<(Point, Point)>,
}

impl StrongAinftyReport {
    pub fn is_strong(&self) -> bool {
        self.failure_witness.is_none() && self.c_upper.is_finite() && self.c_lower.is_finite()
    }
}

/// Two-sided comparison of `d_ω` and `δ` over the pairs.
pub fn strong_ainfty_report(w: &WeightField, pairs: &[(Point, Point)]) -> Result<StrongAinftyReport> {
    let vals: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(x, y)| Ok((geodesic_distance(w, x, y)?, measure_distance(w, x, y)?)))
        .collect::<Result<_>>()?;
    let mut up = 0.0f64;
    let mut low = 0.0f64;
    let mut witness = None;
    for (k, &(d, del)) in vals.iter().enumerate() {
        if del > 0.0 && d == 0.0 {
            low = f64::INFINITY;
            witness.get_or_insert(pairs[k]);
            continue;
        }
        if del > 0.0 {
            up = up.max(d / del);
        }
        if d > 0.0 {
            low = low.max(del / d);
        }
    }
    Ok(StrongAinftyReport {
        c_upper: up,
        c_lower: low,
        pairs: pairs.len(),
        failure_witness: witness,
    })
}

/// Seeded pairs with both points in `[-extent, extent]^n`.
pub fn seeded_pairs(dim: Dim, count: usize, extent: f64, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut c = [0.0; 4];
        for v in c.iter_mut().take(dim.n()) {
            *v = rng.gen_range(-extent..=extent);
        }
        Point(c)
    };
    (0..count)
        .map(|_| {
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            (a, b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcmaps::cone_profile;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_weight_is_trivial() {
        for dim in [Dim::Two, Dim::Four] {
            let w = WeightField::radial_power(dim, 0.0);
            let fam = BallFamily::seeded(dim, 32, 3.0, 0.01, 8, 7);
            assert!((ap_constant(&w, 2.0, &fam).unwrap() - 1.0).abs() < 1e-9);
            assert!((reverse_holder(&w, 1.5, &fam).unwrap() - 1.0).abs() < 1e-9);
            let pts = [Point::on_axis(0.3), Point::on_axis(2.0)];
            assert!((a1_ratio(&w, &pts, &[0.1, 1.0, 5.0]).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn power_weight_ball_averages() {
        // ⨍_{B(0,ρ)} |x|^{-1} = 2/ρ in the plane
        let w = WeightField::radial_power(Dim::Two, -1.0);
        let avg = w.ball_average(&Ball::centered(0.5), 1.0).unwrap();
        assert!((avg - 4.0).abs() < 1e-9);
        // reverse Hölder exponent 1.5 integrable, 2.1 not
        let fam = BallFamily::origin_centered(&[0.1, 1.0, 10.0]);
        let rh = reverse_holder(&w, 1.5, &fam).unwrap();
        // (⨍|x|^{-1.5})^{1/1.5} / ⨍|x|^{-1} = (2/0.5)^{2/3} ρ^{-1} / (2/ρ)
        assert!((rh - 4f64.powf(2.0 / 3.0) / 2.0).abs() < 1e-8, "{rh}");
        assert!(reverse_holder(&w, 2.1, &fam).unwrap().is_infinite());
    }

    #[test]
    fn ap_constant_of_growing_power_diverges_near_one() {
        // |x|^{1} in the plane is A_p only for p > 3/2; for p = 1.4 the dual
        // average diverges on origin-centred balls
        let w = WeightField::radial_power(Dim::Two, 1.0);
        let fam = BallFamily::origin_centered(&[0.01, 0.1, 1.0]);
        assert!(ap_constant(&w, 1.4, &fam).unwrap().is_infinite());
        assert!(ap_constant(&w, 2.0, &fam).unwrap().is_finite());
    }

    #[test]
    fn a1_ratio_dichotomy() {
        let good = WeightField::radial_power(Dim::Two, -1.0);
        let bad = WeightField::radial_power(Dim::Two, 0.5);
        let mut last = Vec::new();
        for level in 0..3 {
            let inner = 10f64.powi(-2 - 2 * level);
            let pts: Vec<Point> = log_space(inner, 1.0, 12).into_iter().map(Point::on_axis).collect();
            let radii = log_space(inner * 0.1, 10.0, 40);
            last.push((a1_ratio(&good, &pts, &radii).unwrap(), a1_ratio(&bad, &pts, &radii).unwrap()));
        }
        assert!((last[2].0 / last[0].0 - 1.0).abs() < 0.05, "{last:?}");
        assert!(last[2].1 / last[0].1 > 50.0, "{last:?}");
    }

    #[test]
    fn flat_geodesic_and_measure_distance() {
        let w = WeightField::radial_power(Dim::Two, 0.0);
        let (x, y) = (Point::xy(0.3, 0.1), Point::xy(-1.0, 2.0));
        let d = geodesic_distance(&w, x, y).unwrap();
        assert!((d / x.dist(&y) - 1.0).abs() < 1e-12);
        let del = measure_distance(&w, x, y).unwrap();
        assert!((del - PI.sqrt() / 2.0 * x.dist(&y)).abs() < 1e-9);
        assert_eq!(measure_distance(&w, x, x).unwrap(), 0.0);

        // planar octile metrication stays below 8.3%
        let grid = GridSpec::centered(2.0, 81).unwrap();
        let flat = WeightField::planar_fn(grid, |_, _| 1.0).unwrap();
        let h = grid.dx;
        for k in 0..=20 {
            let th = k as f64 * PI / 40.0;
            let a = Point::ORIGIN;
            let b = Point::xy(1.5 * th.cos(), 1.5 * th.sin());
            let d = geodesic_distance(&flat, a, b).unwrap();
            // compare with the distance between the snapped centers
            let snap = |v: f64| ((v + 2.0) / h - 0.5).round() * h + 0.5 * h - 2.0;
            let e = Point::xy(snap(b.0[0]), snap(b.0[1])).norm();
            assert!(d / e - 1.0 <= 0.0824 + 1e-9 && d >= e - 1e-12, "{th}: {d} {e}");
        }
    }

    #[test]
    fn measure_distance_closed_form() {
        let w = WeightField::radial_power(Dim::Two, -1.0);
        let x = Point::xy(0.6, 0.8);
        let d = measure_distance(&w, x, x * -1.0).unwrap();
        assert!((d - (2.0 * PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn cone_geodesic_matches_closed_form() {
        // ω^{1/2} = r^{-β}: developing the cone gives ρ = r^{1-β}/(1-β) and
        // d = 2ρ sin((1-β)π/2) between antipodal points at radius r
        let beta = 0.5;
        let w = WeightField::radial_power(Dim::Two, -2.0 * beta);
        let (x, y) = (Point::on_axis(1.0), Point::on_axis(-1.0));
        let d = geodesic_distance(&w, x, y).unwrap();
        let rho = 1.0 / (1.0 - beta);
        let exact = 2.0 * rho * ((1.0 - beta) * PI / 2.0).sin();
        assert!(d >= exact * (1.0 - 1e-3) && d < exact * 1.09, "{d} {exact}");
        // the straight diameter costs 2ρ, more than the optimal path
        assert!(d < 2.0 * rho);
    }

    #[test]
    fn axis_weight_has_zero_length_on_the_axis() {
        let grid = GridSpec::centered(1.0, 41).unwrap();
        let w = WeightField::planar_fn(grid, |x, _| x.abs().sqrt()).unwrap();
        let pairs = vec![(Point::xy(0.0, -0.5), Point::xy(0.0, 0.5))];
        let rep = strong_ainfty_report(&w, &pairs).unwrap();
        assert!(!rep.is_strong());
        assert!(rep.c_lower.is_infinite());
    }

    #[test]
    fn jacobian_weight_is_strong() {
        let p = cone_profile(0.5, 2).unwrap();
        let r = log_space(1e-6, 1e3, 100);
        let vals: Vec<f64> = r.iter().map(|&x| p.jacobian(Dim::Two, x)).collect();
        let w = WeightField::radial(Dim::Two, r, &vals).unwrap();
        let pairs = seeded_pairs(Dim::Two, 20, 2.0, 11);
        let rep = strong_ainfty_report(&w, &pairs).unwrap();
        assert!(rep.is_strong(), "{rep:?}");
        assert!(rep.c_upper < 10.0 && rep.c_lower < 10.0, "{rep:?}");
    }

    #[test]
    fn family_is_reproducible() {
        let a = BallFamily::seeded(Dim::Four, 50, 1.0, 0.01, 4, 3);
        let b = BallFamily::seeded(Dim::Four, 50, 1.0, 0.01, 4, 3);
        assert_eq!(a, b);
        assert!(a.balls.iter().all(|b| b.radius > 0.0));
    }

    proptest! {
        #[test]
        fn triangle_inequality_on_a_grid(
            pts in prop::collection::vec((-0.9..0.9f64, -0.9..0.9f64), 3),
        ) {
            let grid = GridSpec::centered(1.0, 24).unwrap();
            let w = WeightField::planar_fn(grid, |x, y| 0.2 + (3.0 * x).sin().powi(2) + y * y).unwrap();
            let p: Vec<Point> = pts.iter().map(|&(x, y)| Point::xy(x, y)).collect();
            let d = |a: Point, b: Point| geodesic_distance(&w, a, b).unwrap();
            prop_assert!(d(p[0], p[2]) <= d(p[0], p[1]) + d(p[1], p[2]) + 1e-9);
        }

        #[test]
        fn measure_distance_is_symmetric(ax in -1.0..1.0f64, ay in -1.0..1.0f64, bx in -1.0..1.0f64, by in -1.0..1.0f64) {
            let w = WeightField::radial_power(Dim::Two, -0.7);
            let (a, b) = (Point::xy(ax, ay), Point::xy(bx, by));
            prop_assert_eq!(measure_distance(&w, a, b).unwrap(), measure_distance(&w, b, a).unwrap());
        }

        #[test]
        fn a1_ratio_at_least_one(x in 0.01..3.0f64, g in -1.5..1.0f64) {
            let w = WeightField::radial_power(Dim::Two, g);
            let radii = log_space(1e-6, 1.0, 8);
            prop_assert!(a1_ratio(&w, &[Point::on_axis(x)], &radii).unwrap() >= 1.0 - 1e-9);
        }

        #[test]
        fn ap_monotone_in_family(seed in 0u64..1000, extra in 1usize..20) {
            let w = WeightField::radial_power(Dim::Two, -1.0);
            let small = BallFamily::seeded(Dim::Two, 10, 2.0, 0.01, 0, seed);
            let mut big = small.clone();
            big.balls.extend(BallFamily::seeded(Dim::Two, extra, 2.0, 0.01, 0, seed + 1).balls);
            prop_assert!(ap_constant(&w, 2.0, &big).unwrap() >= ap_constant(&w, 2.0, &small).unwrap());
        }
    }
}
