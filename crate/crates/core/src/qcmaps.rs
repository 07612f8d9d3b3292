//! Radial maps `x ↦ R(|x|) x/|x|`: evaluation, Jacobian, dilatation,
//! composition, inversion and the volume-matching construction.
//!
//! Profiles are stored as `s = ln R` against `t = ln r` together with the
//! logarithmic slope `σ = ds/dt = r R'/R`. Between nodes `s` is the cubic
//! Hermite interpolant with slopes `σ`; beyond the ends it continues as the
//! power law with the end slope. Power laws are therefore represented
//! exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{log_space, Ball, Dim};
use crate::quad::{
    cumulative_exp_integral, hermite, nonuniform_derivative, BallNodes, RadialQuadrature,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    t: Vec<f64>,
    s: Vec<f64>,
    sigma: Vec<f64>,
    /// When set, the Hermite interpolant runs along `s` (t as a function of
    /// s), which makes [`inverse`] exact between nodes.
    inverted: bool,
}

/// Cubic Hermite value and slope at `x` for nodes `xs`, values `ys`, slopes
/// `ds`, extended linearly beyond the ends.
fn hermite_eval(xs: &[f64], ys: &[f64], ds: &[f64], x: f64) -> (f64, f64) {
    let m = xs.len();
    if x <= xs[0] {
        return (ys[0] + ds[0] * (x - xs[0]), ds[0]);
    }
    if x >= xs[m - 1] {
        return (ys[m - 1] + ds[m - 1] * (x - xs[m - 1]), ds[m - 1]);
    }
    let k = xs.partition_point(|&v| v <= x).clamp(1, m - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let (y0, y1, d0, d1) = (ys[k - 1], ys[k], ds[k - 1], ds[k]);
    let y = hermite(x0, x1, y0, y1, d0, d1, x);
    let h = x1 - x0;
    let u = (x - x0) / h;
    let dy = (6.0 * u * u - 6.0 * u) / h * y0
        + (3.0 * u * u - 4.0 * u + 1.0) * d0
        + (-6.0 * u * u + 6.0 * u) / h * y1
        + (3.0 * u * u - 2.0 * u) * d1;
    (y, dy)
}

/// Solve `f(x) = target` for increasing `f` given nodes bracketing the root.
fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, target: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Dilatation summary of a radial map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilatationReport {
    #[serde(rename = "H")]
    pub h: f64,
    pub argmax_radius: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl RadialProfile {
    /// Build from `ln r`, `ln R` and `σ` at the nodes.
    pub fn from_log_slopes(t: Vec<f64>, s: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if t.len() != s.len() || t.len() != sigma.len() || t.len() < 2 {
            return Err(Error::InvalidGrid(
                "profile needs at least two nodes with matching lengths".into(),
            ));
        }
        if t.iter().chain(&s).chain(&sigma).any(|v| !v.is_finite()) {
            return Err(Error::NotMonotone("non-finite profile sample".into()));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "radii not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = s.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NotMonotone(format!(
                "image radii not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = sigma.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NotMonotone(format!(
                "logarithmic slope {} at r = {} is not positive",
                sigma[i],
                t[i].exp()
            )));
        }
        Ok(RadialProfile {
            t,
            s,
            sigma,
            inverted: false,
        })
    }

    /// Build from samples `R(r)`; slopes come from three-point differences in
    /// log–log coordinates.
    pub fn from_samples(r: &[f64], big_r: &[f64]) -> Result<Self> {
        if r.len() != big_r.len() || r.len() < 2 {
            return Err(Error::InvalidGrid("need at least two matching samples".into()));
        }
        if r.iter().chain(big_r).any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidGrid("radii must be positive".into()));
        }
        let t: Vec<f64> = r.iter().map(|v| v.ln()).collect();
        let s: Vec<f64> = big_r.iter().map(|v| v.ln()).collect();
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "radii not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = s.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NotMonotone(format!(
                "image radii not strictly increasing at index {}",
                i + 1
            )));
        }
        let sigma = nonuniform_derivative(&t, &s);
        Self::from_log_slopes(t, s, sigma)
    }

    /// The identity on `[lo, hi]`.
    pub fn identity(lo: f64, hi: f64) -> Self {
        let t = vec![lo.ln(), hi.ln()];
        RadialProfile {
            s: t.clone(),
            t,
            sigma: vec![1.0, 1.0],
            inverted: false,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn r_grid(&self) -> Vec<f64> {
        self.t.iter().map(|v| v.exp()).collect()
    }

    pub fn r_values(&self) -> Vec<f64> {
        self.s.iter().map(|v| v.exp()).collect()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn log_r(&self) -> &[f64] {
        &self.t
    }

    pub fn log_big_r(&self) -> &[f64] {
        &self.s
    }

    pub fn r_min(&self) -> f64 {
        self.t[0].exp()
    }

    pub fn r_max(&self) -> f64 {
        self.t.last().unwrap().exp()
    }

    /// `R ∝ r^a` below the grid.
    pub fn left_exponent(&self) -> f64 {
        self.sigma[0]
    }

    /// `R ∝ c r^a` above the grid.
    pub fn right_exponent(&self) -> f64 {
        *self.sigma.last().unwrap()
    }

    /// The constant `c` in the far field `R = c r^a`.
    pub fn far_field_constant(&self) -> f64 {
        let m = self.len() - 1;
        (self.s[m] - self.sigma[m] * self.t[m]).exp()
    }

    fn inverse_slopes(&self) -> Vec<f64> {
        self.sigma.iter().map(|v| 1.0 / v).collect()
    }

    /// `(ln R, σ)` at `t = ln r`.
    pub fn eval_log(&self, t: f64) -> (f64, f64) {
        if !self.inverted {
            return hermite_eval(&self.t, &self.s, &self.sigma, t);
        }
        let m = self.len();
        if t <= self.t[0] || t >= self.t[m - 1] {
            let i = if t <= self.t[0] { 0 } else { m - 1 };
            return (self.s[i] + self.sigma[i] * (t - self.t[i]), self.sigma[i]);
        }
        let k = self.t.partition_point(|&v| v <= t).clamp(1, m - 1);
        let ds = self.inverse_slopes();
        let y = bisect(
            |y| hermite_eval(&self.s, &self.t, &ds, y).0,
            self.s[k - 1],
            self.s[k],
            t,
        );
        (y, 1.0 / hermite_eval(&self.s, &self.t, &ds, y).1)
    }

    /// `R(r)`, with `R(0) = 0`.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.eval_log(r.ln()).0.exp()
    }

    /// `σ(r) = r R'(r) / R(r)`.
    pub fn sigma_at(&self, r: f64) -> f64 {
        self.eval_log(r.ln()).1
    }

    /// Jacobian `σ (R/r)^n`, extended beyond the grid by the end power laws.
    pub fn jacobian(&self, dim: Dim, r: f64) -> f64 {
        let t = r.ln();
        let (s, sigma) = self.eval_log(t);
        sigma * (dim.nf() * (s - t)).exp()
    }

    fn check_range(&self, r: f64) -> Result<()> {
        let (lo, hi) = (self.r_min(), self.r_max());
        if !(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { radius: r, lo, hi });
        }
        Ok(())
    }

    /// `t` with `s(t) = target`.
    fn solve_log(&self, target: f64) -> f64 {
        if self.inverted {
            return hermite_eval(&self.s, &self.t, &self.inverse_slopes(), target).0;
        }
        let m = self.len();
        if target <= self.s[0] {
            return self.t[0] + (target - self.s[0]) / self.sigma[0];
        }
        if target >= self.s[m - 1] {
            return self.t[m - 1] + (target - self.s[m - 1]) / self.sigma[m - 1];
        }
        let k = self.s.partition_point(|&v| v <= target).clamp(1, m - 1);
        bisect(|t| self.eval_log(t).0, self.t[k - 1], self.t[k], target)
    }

    /// `R⁻¹(ρ)`.
    pub fn eval_inverse(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.solve_log(rho.ln()).exp()
    }
}

/// The cone map `r ↦ r^{1-β}` on a default grid `[1e-8, 1e8]`.
pub fn cone_profile(beta: f64, n: usize) -> Result<RadialProfile> {
    cone_profile_on(beta, n, &log_space(1e-8, 1e8, 161))
}

pub fn cone_profile_on(beta: f64, n: usize, r: &[f64]) -> Result<RadialProfile> {
    Dim::new(n)?;
    if !(beta < 1.0) || !beta.is_finite() {
        return Err(Error::param(
            "beta",
            format!("cone exponent {beta} must be below 1; β ≥ 1 does not give a homeomorphism"),
        ));
    }
    let a = 1.0 - beta;
    let t: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let s = t.iter().map(|v| a * v).collect();
    let sigma = vec![a; t.len()];
    RadialProfile::from_log_slopes(t, s, sigma)
}

/// `J = R'(r) (R/r)^{n-1}` at a radius inside the grid.
pub fn jacobian_radial(p: &RadialProfile, n: usize, r: f64) -> Result<f64> {
    let dim = Dim::new(n)?;
    p.check_range(r)?;
    Ok(p.jacobian(dim, r))
}

/// `H = sup max(σ, 1/σ)` over the nodes.
pub fn dilatation_radial(p: &RadialProfile) -> DilatationReport {
    let mut h = 1.0;
    let mut arg = p.r_min();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (i, &sg) in p.sigma.iter().enumerate() {
        let k = sg.max(1.0 / sg);
        if k > h {
            h = k;
            arg = p.t[i].exp();
        }
        lo = lo.min(sg);
        hi = hi.max(sg);
    }
    DilatationReport {
        h: hi.max(1.0 / lo).max(h),
        argmax_radius: arg,
        sigma_min: lo,
        sigma_max: hi,
    }
}

/// `R₁ ∘ R₂` on the union of the `p₂` nodes and the pulled-back `p₁` nodes.
pub fn compose_radial(p1: &RadialProfile, p2: &RadialProfile) -> Result<RadialProfile> {
    let (lo1, hi1) = (p1.t[0], *p1.t.last().unwrap());
    let eps = 1e-12;
    let mut ts: Vec<f64> = p2
        .t
        .iter()
        .copied()
        .filter(|&t| {
            let s = p2.eval_log(t).0;
            s >= lo1 - eps && s <= hi1 + eps
        })
        .collect();
    let (lo2, hi2) = (p2.t[0], *p2.t.last().unwrap());
    for &u in &p1.t {
        let t = p2.solve_log(u);
        if t >= lo2 - eps && t <= hi2 + eps {
            ts.push(t.clamp(lo2, hi2));
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    if ts.len() < 2 {
        return Err(Error::RangeMismatch);
    }
    let mut s = Vec::with_capacity(ts.len());
    let mut sigma = Vec::with_capacity(ts.len());
    for &t in &ts {
        let (s2, g2) = p2.eval_log(t);
        let (s1, g1) = p1.eval_log(s2);
        s.push(s1);
        sigma.push(g1 * g2);
    }
    RadialProfile::from_log_slopes(ts, s, sigma)
}

/// The inverse map: `t ↔ s`, `σ ↦ 1/σ`.
pub fn inverse(p: &RadialProfile) -> RadialProfile {
    RadialProfile {
        t: p.s.clone(),
        s: p.t.clone(),
        sigma: p.sigma.iter().map(|v| 1.0 / v).collect(),
        inverted: !p.inverted,
    }
}

/// `R(r) = (n ∫₀^r ω(s) s^{n-1} ds)^{1/n}`, so that `J = ω`.
pub fn volume_matching_profile(
    r: &[f64],
    omega: &[f64],
    n: usize,
) -> Result<(RadialProfile, DilatationReport)> {
    if let Some(v) = omega.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::param("omega", format!("weight sample {v} is not positive")));
    }
    let log_omega: Vec<f64> = omega.iter().map(|v| v.ln()).collect();
    volume_matching_profile_log(r, &log_omega, n)
}

/// As [`volume_matching_profile`], taking `ln ω` to avoid overflow.
pub fn volume_matching_profile_log(
    r: &[f64],
    log_omega: &[f64],
    n: usize,
) -> Result<(RadialProfile, DilatationReport)> {
    let dim = Dim::new(n)?;
    if r.len() != log_omega.len() || r.len() < 2 {
        return Err(Error::InvalidGrid("need at least two matching weight samples".into()));
    }
    if r[0] <= 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("radii must be positive and increasing".into()));
    }
    if log_omega.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("omega", "weight samples must be positive and finite"));
    }
    let nf = dim.nf();
    let t: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    // local exponent of ω at the inner end
    let a = (log_omega[1] - log_omega[0]) / (t[1] - t[0]);
    if nf + a <= 0.0 {
        return Err(Error::NotIntegrable { exponent: a });
    }
    // work with V / r_0^n to keep magnitudes tame
    let g: Vec<f64> = t
        .iter()
        .zip(log_omega)
        .map(|(t, lw)| lw + nf * (t - r[0].ln()))
        .collect();
    let cap = log_omega[0].exp() / (nf + a);
    let cum = cumulative_exp_integral(&t, &g);
    let mut s = Vec::with_capacity(r.len());
    let mut sigma = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let v = cap + cum[i];
        // ln(nV)/n with V scaled by r_0^n
        let log_nv = (nf * v).ln() + nf * r[0].ln();
        s.push(log_nv / nf);
        // σ = r^n ω / (nV)
        sigma.push((nf * t[i] + log_omega[i] - log_nv).exp());
    }
    let p = RadialProfile::from_log_slopes(t, s, sigma)?;
    let d = dilatation_radial(&p);
    Ok((p, d))
}

/// Both sides of the change-of-variables identity on `B(0, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushforwardVolume {
    /// `∫_{B(0,r)} J dx`, by quadrature.
    pub jacobian_integral: f64,
    /// `ω_n R(r)^n`.
    pub image_volume: f64,
}

pub fn pushforward_volume(p: &RadialProfile, n: usize, r: f64) -> Result<PushforwardVolume> {
    let dim = Dim::new(n)?;
    p.check_range(r)?;
    let image_volume = dim.ball_volume_r(p.eval(r));
    // ∫ J s^{n-1} ds = ∫ exp(ln σ + n s(t)) dt on the nodes below r, plus the
    // power-law cap J ∝ s^{n(σ₀-1)} under the first node
    let tr = r.ln();
    let mut t: Vec<f64> = p.t.iter().copied().filter(|&v| v < tr).collect();
    t.push(tr);
    let jac_integral = if t.len() < 2 {
        let (s0, _) = p.eval_log(tr);
        (dim.nf() * s0).exp() / dim.nf()
    } else {
        // refine each interval so the Hermite interpolant of ln σ is accurate
        let mut fine = Vec::with_capacity(t.len() * 8);
        for w in t.windows(2) {
            for k in 0..8 {
                fine.push(w[0] + (w[1] - w[0]) * k as f64 / 8.0);
            }
        }
        fine.push(tr);
        let g: Vec<f64> = fine
            .iter()
            .map(|&v| {
                let (s, sg) = p.eval_log(v);
                sg.ln() + dim.nf() * s
            })
            .collect();
        let cum = cumulative_exp_integral(&fine, &g);
        let (s0, sg0) = p.eval_log(fine[0]);
        // J s^{n-1} ≈ c s^{n σ₀ - 1} below the grid
        let cap = sg0 * (dim.nf() * s0).exp() / (dim.nf() * sg0);
        cap + cum.last().unwrap()
    };
    Ok(PushforwardVolume {
        jacobian_integral: dim.sphere_area() * jac_integral,
        image_volume,
    })
}

/// Per ball: `(|B|⁻¹ ∫_B J^{-α}, (|B| / |f(B)|)^α)`.
pub fn inverse_holder_check(
    p: &RadialProfile,
    n: usize,
    alpha: f64,
    balls: &[Ball],
) -> Result<Vec<(f64, f64)>> {
    let dim = Dim::new(n)?;
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", "exponent must be positive"));
    }
    Ok(balls
        .iter()
        .map(|b| {
            let nodes = BallNodes::new(dim, b.center.norm(), b.radius, RadialQuadrature::default());
            let jac: Vec<f64> = nodes.s.iter().map(|&s| p.jacobian(dim, s)).collect();
            let inv: Vec<f64> = jac.iter().map(|j| j.powf(-alpha)).collect();
            let vol = b.volume(dim);
            let lhs = nodes.integrate(&inv) / vol;
            let image = nodes.integrate(&jac);
            (lhs, (vol / image).powf(alpha))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{log_grid_per_decade, Point};
    use proptest::prelude::*;

    #[test]
    fn cone_examples() {
        let id = cone_profile(0.0, 2).unwrap();
        assert_eq!(dilatation_radial(&id).h, 1.0);
        assert!((jacobian_radial(&id, 2, 3.0).unwrap() - 1.0).abs() < 1e-14);

        let p = cone_profile(0.5, 2).unwrap();
        assert!((p.eval(4.0) - 2.0).abs() < 1e-13);
        assert!((jacobian_radial(&p, 2, 4.0).unwrap() - 0.125).abs() < 1e-14);
        assert!((dilatation_radial(&p).h - 2.0).abs() < 1e-15);

        let e = cone_profile(-1.0, 4).unwrap();
        assert_eq!(dilatation_radial(&e).h, 2.0);
        assert!(cone_profile(1.0, 2).is_err());
        assert!(cone_profile(0.5, 3).is_err());
        assert!(matches!(
            jacobian_radial(&p, 2, 1e9),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn cone_compositions_multiply_exponents() {
        let (b1, b2) = (0.3, -0.6);
        let c = compose_radial(&cone_profile(b1, 4).unwrap(), &cone_profile(b2, 4).unwrap()).unwrap();
        let b = 1.0 - (1.0 - b1) * (1.0 - b2);
        let direct = cone_profile(b, 4).unwrap();
        for r in [1e-3, 0.5, 7.0, 300.0] {
            assert!((c.eval(r) / direct.eval(r) - 1.0).abs() < 1e-12);
            assert!((c.jacobian(Dim::Four, r) / direct.jacobian(Dim::Four, r) - 1.0).abs() < 1e-12);
        }
        let p = cone_profile(0.4, 2).unwrap();
        let same = compose_radial(&p, &RadialProfile::identity(1e-3, 1e3)).unwrap();
        for r in [1e-3, 0.2, 50.0] {
            assert!((same.eval(r) / p.eval(r) - 1.0).abs() < 1e-13);
        }
        let far = RadialProfile::identity(1e10, 1e11);
        assert_eq!(compose_radial(&far, &RadialProfile::identity(1.0, 2.0)), Err(Error::RangeMismatch));
    }

    #[test]
    fn volume_matching_of_power_weight() {
        for (beta, n) in [(0.5, 2usize), (0.25, 4), (-0.5, 4)] {
            let r = log_grid_per_decade(1e-4, 1e3, 20);
            let om: Vec<f64> = r.iter().map(|x| x.powf(-(n as f64) * beta)).collect();
            let (p, d) = volume_matching_profile(&r, &om, n).unwrap();
            let k = (1.0 - beta).powf(-1.0 / n as f64);
            for &x in &[1e-4, 0.3, 2.0, 1e3] {
                assert!((p.eval(x) / (k * x.powf(1.0 - beta)) - 1.0).abs() < 1e-12);
                let j = jacobian_radial(&p, n, x).unwrap();
                assert!((j / x.powf(-(n as f64) * beta) - 1.0).abs() < 1e-12);
            }
            let h = 1.0 / (1.0 - beta);
            assert!((d.h - h.max(1.0 / h)).abs() < 1e-12);
        }
        let r = log_space(1e-3, 1.0, 10);
        let flat = vec![1.0; 10];
        let (p, _) = volume_matching_profile(&r, &flat, 2).unwrap();
        assert!((p.eval(0.5) - 0.5).abs() < 1e-14);
        let bad: Vec<f64> = r.iter().map(|x| x.powf(-2.5)).collect();
        assert!(matches!(
            volume_matching_profile(&r, &bad, 2),
            Err(Error::NotIntegrable { .. })
        ));
    }

    #[test]
    fn pushforward_cone_four_dimensions() {
        let p = cone_profile(0.5, 4).unwrap();
        let v = pushforward_volume(&p, 4, 3.0).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 2.0 * 3f64.powf(2.0);
        assert!((v.image_volume / exact - 1.0).abs() < 1e-13);
        assert!((v.jacobian_integral / exact - 1.0).abs() < 1e-10);
        let id = RadialProfile::identity(0.1, 10.0);
        let w = pushforward_volume(&id, 2, 2.0).unwrap();
        assert!((w.jacobian_integral - 4.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn pushforward_of_volume_matched_weight() {
        // ω = 1 + r² in R^4: ∫_{B(0,r)} ω = 2π² (r⁴/4 + r⁶/6)
        let r = log_grid_per_decade(1e-3, 10.0, 200);
        let om: Vec<f64> = r.iter().map(|x| 1.0 + x * x).collect();
        let (p, _) = volume_matching_profile(&r, &om, 4).unwrap();
        let x: f64 = 2.0;
        let exact = 2.0 * std::f64::consts::PI.powi(2) * (x.powi(4) / 4.0 + x.powi(6) / 6.0);
        let v = pushforward_volume(&p, 4, x).unwrap();
        assert!((v.image_volume / exact - 1.0).abs() < 1e-8, "{}", v.image_volume / exact);
        assert!((v.jacobian_integral / exact - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inverse_holder_examples() {
        let balls = [
            Ball::centered(0.01),
            Ball::centered(1.0),
            Ball::centered(100.0),
            Ball::new(Point::on_axis(50.0), 0.5),
        ];
        let id = RadialProfile::identity(1e-3, 1e3);
        for (l, r) in inverse_holder_check(&id, 2, 0.3, &balls).unwrap() {
            assert!((l - 1.0).abs() < 1e-6 && (r - 1.0).abs() < 1e-6);
        }
        let p = cone_profile(0.5, 2).unwrap();
        let v = inverse_holder_check(&p, 2, 0.3, &balls).unwrap();
        // centered balls: scale invariant; J^{-α} ∝ r^{0.3} averages to a fixed ratio
        let ratios: Vec<f64> = v.iter().map(|(l, r)| l / r).collect();
        assert!((ratios[0] - ratios[1]).abs() < 1e-6 && (ratios[1] - ratios[2]).abs() < 1e-6);
        assert!((ratios[3] - 1.0).abs() < 1e-4, "{ratios:?}");
    }

    #[test]
    fn inverse_round_trips_and_keeps_dilatation() {
        let r = log_grid_per_decade(1e-2, 1e2, 30);
        let om: Vec<f64> = r.iter().map(|x| (1.0 + x).powf(-1.5) * (2.0 + x.sin())).collect();
        let (p, d) = volume_matching_profile(&r, &om, 2).unwrap();
        let q = inverse(&p);
        assert_eq!(dilatation_radial(&q).h, d.h);
        for &x in &[0.02, 0.7, 3.3, 80.0] {
            assert!((q.eval(p.eval(x)) / x - 1.0).abs() < 1e-8);
            assert!((p.eval_inverse(p.eval(x)) / x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_round_trip_through_volume_matching() {
        // smooth profile, a pure power law below the grid:
        // ln R = t - ln(1 + e^{2t})/4 + 0.3 exp(-t²/8)
        let r = log_grid_per_decade(1e-5, 1e3, 400);
        let t: Vec<f64> = r.iter().map(|x| x.ln()).collect();
        let s: Vec<f64> = t
            .iter()
            .map(|&t| t - 0.25 * (1.0 + (2.0 * t).exp()).ln() + 0.3 * (-t * t / 8.0).exp())
            .collect();
        let sigma: Vec<f64> = t
            .iter()
            .map(|&t| {
                let e = (2.0 * t).exp();
                1.0 - 0.5 * e / (1.0 + e) - 0.075 * t * (-t * t / 8.0).exp()
            })
            .collect();
        let p = RadialProfile::from_log_slopes(t, s, sigma).unwrap();
        let jac: Vec<f64> = r.iter().map(|&x| jacobian_radial(&p, 4, x).unwrap()).collect();
        let (q, _) = volume_matching_profile(&r, &jac, 4).unwrap();
        let worst = r
            .iter()
            .map(|&x| (q.eval(x) / p.eval(x) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn from_samples_detects_folds() {
        assert!(matches!(
            RadialProfile::from_samples(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]),
            Err(Error::NotMonotone(_))
        ));
        let p = RadialProfile::from_samples(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!(p.sigma().iter().all(|&s| (s - 1.0).abs() < 1e-14));
    }

    fn random_profile() -> impl Strategy<Value = RadialProfile> {
        prop::collection::vec(0.2..3.0f64, 3..12).prop_map(|sig| {
            // piecewise σ on a log grid, s by trapezoid so Hermite stays monotone
            let m = sig.len();
            let t: Vec<f64> = (0..m).map(|i| -4.0 + 8.0 * i as f64 / (m - 1) as f64).collect();
            let mut s = vec![0.0; m];
            for i in 1..m {
                s[i] = s[i - 1] + 0.5 * (sig[i] + sig[i - 1]) * (t[i] - t[i - 1]);
            }
            RadialProfile::from_log_slopes(t, s, sig).unwrap()
        })
    }

    proptest! {
        #[test]
        fn composition_dilatation_is_submultiplicative(p1 in random_profile(), p2 in random_profile()) {
            if let Ok(c) = compose_radial(&p1, &p2) {
                let h = dilatation_radial(&c).h;
                prop_assert!(h <= dilatation_radial(&p1).h * dilatation_radial(&p2).h * (1.0 + 1e-12));
            }
        }

        #[test]
        fn inverse_dilatation_matches(p in random_profile()) {
            let d = dilatation_radial(&p);
            let q = dilatation_radial(&inverse(&p));
            prop_assert!((d.h - q.h).abs() <= 1e-12 * d.h);
            for x in [0.05, 0.5, 5.0] {
                prop_assert!(p.jacobian(Dim::Two, x) > 0.0);
                prop_assert!((inverse(&p).eval(p.eval(x)) / x - 1.0).abs() < 1e-8);
            }
        }
    }
}
