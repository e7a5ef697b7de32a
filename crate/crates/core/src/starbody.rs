//! Star bodies as radial profiles: gauges, volumes, dual mixed volumes,
//! harmonic combinations, and dilate/kernel/convexity predicates.
//!
//! A star body K is stored through its radial function rho_K sampled on a
//! sphere grid. The gauge satisfies `||x||_K = 1/rho_K(x)` and the radial
//! function extends to R^d \ {0} with homogeneity degree -1. Between grid
//! nodes we interpolate: periodic-linear in angle for d = 2 (continuous and
//! positivity-preserving), nearest neighbor for d = 3, or a closed-form
//! callable when one is available.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::spherequad::{same_grid, SphereGrid};

/// Shared closed-form radial function on unit vectors.
pub type RadialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// How profile values are extended between grid directions.
#[derive(Clone)]
pub enum Interpolation {
    /// Linear interpolation in the polar angle (d = 2 only).
    PeriodicLinear,
    /// Value of the nearest grid direction (d = 3 default).
    NearestNeighbor,
    /// Exact radial function evaluated on unit vectors.
    ClosedForm(RadialFn),
}

impl fmt::Debug for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interpolation::PeriodicLinear => write!(f, "PeriodicLinear"),
            Interpolation::NearestNeighbor => write!(f, "NearestNeighbor"),
            Interpolation::ClosedForm(_) => write!(f, "ClosedForm(..)"),
        }
    }
}

/// Positive radial function sampled on a sphere grid.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl RadialProfile {
    /// Wrap per-node values. Every value must be finite and strictly
    /// positive (star-body positivity).
    pub fn new(
        grid: Arc<SphereGrid>,
        values: Vec<f64>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::NonPositiveProfile { index: i, value: v });
            }
        }
        Ok(Self {
            grid,
            values,
            interpolation,
        })
    }

    /// Sample a closed-form radial function; off-grid evaluation stays exact.
    pub fn from_fn<F>(grid: Arc<SphereGrid>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let values: Vec<f64> = grid.directions().map(&f).collect();
        Self::new(grid, values, Interpolation::ClosedForm(Arc::new(f)))
    }

    /// Sample an arbitrary function with the default interpolation for the
    /// grid dimension.
    pub fn sampled<F: FnMut(&[f64]) -> f64>(grid: Arc<SphereGrid>, mut f: F) -> Result<Self> {
        let values: Vec<f64> = grid.directions().map(&mut f).collect();
        Self::sampled_values(grid, values)
    }

    /// Wrap per-node values with the dimension-default interpolation
    /// (periodic linear in angle for d = 2, nearest neighbor for d = 3).
    pub fn sampled_values(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        let interpolation = if grid.dim() == 2 {
            Interpolation::PeriodicLinear
        } else {
            Interpolation::NearestNeighbor
        };
        Self::new(grid, values, interpolation)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Radial value at a unit direction.
    pub fn eval_unit(&self, u: &[f64]) -> f64 {
        match &self.interpolation {
            Interpolation::ClosedForm(f) => f(u),
            Interpolation::PeriodicLinear => {
                debug_assert_eq!(self.grid.dim(), 2);
                let n = self.values.len();
                let theta = u[1].atan2(u[0]).rem_euclid(2.0 * PI);
                let t = theta / (2.0 * PI) * (n as f64);
                let j = (t.floor() as usize) % n;
                let w = t - t.floor();
                (1.0 - w) * self.values[j] + w * self.values[(j + 1) % n]
            }
            Interpolation::NearestNeighbor => {
                let dim = self.grid.dim();
                let mut best = 0;
                let mut best_dot = f64::NEG_INFINITY;
                for (i, v) in self.grid.directions().enumerate() {
                    let dot: f64 = v.iter().zip(u).take(dim).map(|(a, b)| a * b).sum();
                    if dot > best_dot {
                        best_dot = dot;
                        best = i;
                    }
                }
                self.values[best]
            }
        }
    }

    /// Homogeneous degree -1 extension: rho(x) = rho(x/|x|)/|x|.
    pub fn eval_extended(&self, x: &[f64]) -> f64 {
        let norm = norm2(x);
        debug_assert!(norm > 0.0);
        let u: Vec<f64> = x.iter().map(|c| c / norm).collect();
        self.eval_unit(&u) / norm
    }
}

/// A star body: radial profile plus a display label.
#[derive(Debug, Clone)]
pub struct StarBody {
    profile: RadialProfile,
    label: String,
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

impl StarBody {
    pub fn new(profile: RadialProfile, label: impl Into<String>) -> Self {
        Self {
            profile,
            label: label.into(),
        }
    }

    /// Euclidean ball of the given radius.
    pub fn ball(grid: Arc<SphereGrid>, radius: f64) -> Self {
        assert!(radius > 0.0);
        let profile = RadialProfile::from_fn(grid, move |_| radius).expect("constant profile");
        Self::new(profile, format!("{radius}*B"))
    }

    /// `scale`-dilate of the unit l_q ball (0 < q < inf); gauge is the
    /// l_q (quasi)norm divided by `scale`.
    pub fn lq_ball(grid: Arc<SphereGrid>, q: f64, scale: f64) -> Self {
        assert!(q > 0.0 && scale > 0.0);
        let profile = RadialProfile::from_fn(grid, move |u| {
            let s: f64 = u.iter().map(|c| c.abs().powf(q)).sum();
            scale / s.powf(1.0 / q)
        })
        .expect("lq profile");
        Self::new(profile, format!("{scale}*B_l{q}"))
    }

    /// `scale`-dilate of the unit l_inf ball.
    pub fn linf_ball(grid: Arc<SphereGrid>, scale: f64) -> Self {
        assert!(scale > 0.0);
        let profile = RadialProfile::from_fn(grid, move |u| {
            let m = u.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            scale / m
        })
        .expect("linf profile");
        Self::new(profile, format!("{scale}*B_linf"))
    }

    /// Ellipsoid `{x : |A x| <= 1}` for a row-major square matrix A.
    pub fn ellipsoid(grid: Arc<SphereGrid>, a: Vec<Vec<f64>>) -> Self {
        let dim = grid.dim();
        assert_eq!(a.len(), dim);
        let profile = RadialProfile::from_fn(grid, move |u| {
            let mut s = 0.0;
            for row in &a {
                let dot: f64 = row.iter().zip(u).map(|(r, c)| r * c).sum();
                s += dot * dot;
            }
            1.0 / s.sqrt()
        })
        .expect("ellipsoid profile");
        Self::new(profile, "ellipsoid")
    }

    /// Random smooth positive body: rho(theta) = exp of a random trigonometric
    /// polynomial with `harmonics` terms and coefficient scale `amplitude`.
    pub fn random_smooth_2d<R: Rng>(
        grid: Arc<SphereGrid>,
        harmonics: usize,
        amplitude: f64,
        rng: &mut R,
    ) -> Self {
        assert_eq!(grid.dim(), 2);
        let base: f64 = rng.gen_range(-0.3..0.3);
        let coeffs: Vec<(f64, f64)> = (0..harmonics)
            .map(|_| {
                (
                    rng.gen_range(-amplitude..amplitude),
                    rng.gen_range(-amplitude..amplitude),
                )
            })
            .collect();
        let profile = RadialProfile::from_fn(grid, move |u| {
            let theta = u[1].atan2(u[0]);
            let mut s = base;
            for (k, (a, b)) in coeffs.iter().enumerate() {
                let kf = (k + 1) as f64;
                s += a * (kf * theta).cos() + b * (kf * theta).sin();
            }
            s.exp()
        })
        .expect("random body profile");
        Self::new(profile, "random")
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.profile.grid()
    }

    pub fn dim(&self) -> usize {
        self.profile.grid().dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Radial function at a unit direction.
    pub fn radial_unit(&self, u: &[f64]) -> f64 {
        self.profile.eval_unit(u)
    }

    pub fn radial_values(&self) -> &[f64] {
        self.profile.values()
    }

    pub fn min_radius(&self) -> f64 {
        self.profile
            .values()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.profile.values().iter().cloned().fold(0.0, f64::max)
    }

    /// Minkowski gauge `||x||_K = inf{t > 0 : x in tK} = |x| / rho_K(x/|x|)`,
    /// with `gauge(0) = 0` by convention. Positively homogeneous of degree 1.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let norm = norm2(x);
        if norm == 0.0 {
            return 0.0;
        }
        let u: Vec<f64> = x.iter().map(|c| c / norm).collect();
        norm / self.profile.eval_unit(&u)
    }

    /// d-dimensional volume: (1/d) * int rho_K^d du.
    pub fn volume(&self) -> f64 {
        let grid = self.profile.grid();
        let d = grid.dim() as f64;
        let powered: Vec<f64> = self.profile.values().iter().map(|r| r.powf(d)).collect();
        grid.weighted_sum(&powered) / d
    }

    /// i-th dual mixed volume between `self` (= L) and `k`:
    /// (1/d) * int rho_L^{d-i} rho_K^{i} du.
    pub fn dual_mixed_volume(&self, k: &StarBody, i: f64) -> Result<f64> {
        let grid = self.grid();
        if !same_grid(grid, k.grid()) {
            return Err(Error::GridMismatch);
        }
        let d = grid.dim() as f64;
        let vals: Vec<f64> = self
            .radial_values()
            .iter()
            .zip(k.radial_values())
            .map(|(rl, rk)| rl.powf(d - i) * rk.powf(i))
            .collect();
        Ok(grid.weighted_sum(&vals) / d)
    }

    /// Radial metric delta(K, L) = max over grid directions of |rho_K - rho_L|.
    pub fn radial_metric(&self, other: &StarBody) -> Result<f64> {
        if !same_grid(self.grid(), other.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .radial_values()
            .iter()
            .zip(other.radial_values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Harmonic q-combination: the body M with
    /// rho_M^{-q} = a * rho_K^{-q} + b * rho_L^{-q} (diamond-scaling
    /// semantics), so gauges add in the q-th power.
    pub fn harmonic_combination(
        k: &StarBody,
        l: &StarBody,
        a: f64,
        b: f64,
        q: f64,
    ) -> Result<StarBody> {
        assert!(q >= 1.0 && a >= 0.0 && b >= 0.0);
        if a + b <= 0.0 {
            return Err(Error::DegenerateCombination);
        }
        if !same_grid(k.grid(), l.grid()) {
            return Err(Error::GridMismatch);
        }
        let values: Vec<f64> = k
            .radial_values()
            .iter()
            .zip(l.radial_values())
            .map(|(rk, rl)| (a * rk.powf(-q) + b * rl.powf(-q)).powf(-1.0 / q))
            .collect();
        let interpolation = match (&k.profile.interpolation, &l.profile.interpolation) {
            (Interpolation::ClosedForm(fk), Interpolation::ClosedForm(fl)) => {
                let (fk, fl) = (fk.clone(), fl.clone());
                Interpolation::ClosedForm(Arc::new(move |u: &[f64]| {
                    (a * fk(u).powf(-q) + b * fl(u).powf(-q)).powf(-1.0 / q)
                }))
            }
            _ if k.dim() == 2 => Interpolation::PeriodicLinear,
            _ => Interpolation::NearestNeighbor,
        };
        let profile = RadialProfile::new(k.grid().clone(), values, interpolation)?;
        Ok(StarBody::new(
            profile,
            format!("harm{q}({},{})", k.label, l.label),
        ))
    }

    /// The dilate lambda * K.
    pub fn dilate(&self, lambda: f64) -> StarBody {
        assert!(lambda > 0.0);
        let values: Vec<f64> = self.radial_values().iter().map(|r| lambda * r).collect();
        let interpolation = match &self.profile.interpolation {
            Interpolation::ClosedForm(f) => {
                let f = f.clone();
                Interpolation::ClosedForm(Arc::new(move |u: &[f64]| lambda * f(u)))
            }
            other => other.clone(),
        };
        let profile = RadialProfile::new(self.grid().clone(), values, interpolation)
            .expect("dilate preserves positivity");
        StarBody::new(profile, format!("{lambda}*{}", self.label))
    }

    /// Unit-volume dilate of `self`.
    pub fn normalized_to_unit_volume(&self) -> StarBody {
        let d = self.dim() as f64;
        self.dilate(self.volume().powf(-1.0 / d))
    }

    /// If K = lambda * L for some lambda (within `tol`), return lambda.
    ///
    /// Uses the relative max-deviation of the ratio rho_K/rho_L from its
    /// mean, so the test is scale-free.
    pub fn is_dilate(&self, other: &StarBody, tol: f64) -> Option<f64> {
        if !same_grid(self.grid(), other.grid()) {
            return None;
        }
        let ratios: Vec<f64> = self
            .radial_values()
            .iter()
            .zip(other.radial_values())
            .map(|(a, b)| a / b)
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let max_dev = ratios.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
        (max_dev <= tol * mean).then_some(mean)
    }

    /// Sampled check of `gamma * B^d subseteq ker(K)`: for boundary samples
    /// x_i = rho(u_i) u_i and kernel-ball samples z_j = gamma * v_j, every
    /// segment [z_j, x_i] must stay inside K (gauge <= 1 + 1e-9 at
    /// intermediate points). Grid-dense boundary for d = 2, subsampled for
    /// d = 3.
    pub fn kernel_contains_ball(&self, gamma: f64) -> bool {
        assert!(gamma > 0.0);
        let (kernel_dirs, boundary_stride, segment_points) = if self.dim() == 2 {
            (64, 1, 16)
        } else {
            (64, self.grid().len().div_ceil(256).max(1), 8)
        };
        let kernel_grid = SphereGrid::new(self.dim(), kernel_dirs).expect("kernel sample grid");
        self.kernel_check_detail(gamma, &kernel_grid, boundary_stride, segment_points)
    }

    /// Kernel check with explicit sampling resolution (the 10x brute-force
    /// oracle in tests reuses this).
    pub fn kernel_check_detail(
        &self,
        gamma: f64,
        kernel_grid: &SphereGrid,
        boundary_stride: usize,
        segment_points: usize,
    ) -> bool {
        const TOL: f64 = 1e-9;
        let dim = self.dim();
        let grid = self.grid();
        let mut point = vec![0.0; dim];
        for j in 0..kernel_grid.len() {
            let z: Vec<f64> = kernel_grid.direction(j).iter().map(|c| gamma * c).collect();
            if self.gauge(&z) > 1.0 + TOL {
                return false;
            }
            for i in (0..grid.len()).step_by(boundary_stride) {
                let rho = self.radial_values()[i];
                let u = grid.direction(i);
                for k in 1..=segment_points {
                    let t = k as f64 / (segment_points + 1) as f64;
                    for c in 0..dim {
                        point[c] = (1.0 - t) * z[c] + t * rho * u[c];
                    }
                    if self.gauge(&point) > 1.0 + TOL {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// 2-D convexity test on the boundary polygon in grid order: all
    /// consecutive cross products must be >= -tol * (max rho)^2.
    pub fn is_convex_2d(&self, tol: f64) -> bool {
        assert_eq!(self.dim(), 2);
        let grid = self.grid();
        let n = grid.len();
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let u = grid.direction(i);
                let r = self.radial_values()[i];
                (r * u[0], r * u[1])
            })
            .collect();
        let scale = self.max_radius();
        let floor = -tol * scale * scale;
        (0..n).all(|i| {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            let r = pts[(i + 2) % n];
            let cross = (q.0 - p.0) * (r.1 - q.1) - (q.1 - p.1) * (r.0 - q.0);
            cross >= floor
        })
    }

    /// Boundary export: `theta,rho,x,y` rows for d = 2 and `x,y,z,rho` rows
    /// for d = 3, one per grid node in grid order.
    pub fn boundary_csv(&self) -> String {
        let grid = self.grid();
        let mut out = String::new();
        if self.dim() == 2 {
            out.push_str("theta,rho,x,y\n");
            for i in 0..grid.len() {
                let theta = grid.angle(i);
                let rho = self.radial_values()[i];
                let u = grid.direction(i);
                out.push_str(&format!("{theta},{rho},{},{}\n", rho * u[0], rho * u[1]));
            }
        } else {
            out.push_str("x,y,z,rho\n");
            for i in 0..grid.len() {
                let rho = self.radial_values()[i];
                let u = grid.direction(i);
                out.push_str(&format!(
                    "{},{},{},{rho}\n",
                    rho * u[0],
                    rho * u[1],
                    rho * u[2]
                ));
            }
        }
        out
    }
}

/// Radius bound R_gamma = (d+1) / (gamma^{d-1} * kappa_{d-1}) for
/// unit-volume bodies whose kernel contains gamma * B^d; kappa_{d-1} is the
/// volume of the unit ball in R^{d-1}.
pub fn max_radius_bound(dim: usize, gamma: f64) -> Result<f64> {
    assert!(gamma > 0.0);
    let kappa = match dim {
        2 => 2.0,
        3 => PI,
        other => return Err(Error::UnsupportedDimension(other)),
    };
    Ok((dim as f64 + 1.0) / (gamma.powi(dim as i32 - 1) * kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid2(n: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::new(2, n).unwrap())
    }

    #[test]
    fn gauge_of_unit_disk_and_l1_ball() {
        let g = grid2(512);
        let disk = StarBody::ball(g.clone(), 1.0);
        assert!((disk.gauge(&[3.0, 4.0]) - 5.0).abs() < 1e-12);
        let l1 = StarBody::lq_ball(g.clone(), 1.0, 1.0);
        assert!((l1.gauge(&[1.0, 1.0]) - 2.0).abs() < 1e-12);
        assert_eq!(disk.gauge(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn gauge_is_positively_homogeneous() {
        let g = grid2(256);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let body = StarBody::random_smooth_2d(g, 4, 0.4, &mut rng);
        for _ in 0..50 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            if norm2(&x) < 1e-6 {
                continue;
            }
            let g1 = body.gauge(&x);
            let g2 = body.gauge(&[2.0 * x[0], 2.0 * x[1]]);
            assert!((g2 - 2.0 * g1).abs() <= 1e-12 * g2.abs().max(1.0));
        }
    }

    #[test]
    fn radial_extension_has_degree_minus_one() {
        let g = grid2(256);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let body = StarBody::random_smooth_2d(g, 5, 0.3, &mut rng);
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            if norm2(&x) < 1e-3 {
                continue;
            }
            let t: f64 = rng.gen_range(0.1..10.0);
            let rx = body.profile().eval_extended(&x);
            let rtx = body.profile().eval_extended(&[t * x[0], t * x[1]]);
            assert!((rtx - rx / t).abs() <= 1e-12 * rx.max(1.0));
        }
    }

    #[test]
    fn volumes_of_known_bodies() {
        let g = grid2(2048);
        let disk = StarBody::ball(g.clone(), 1.0);
        assert!((disk.volume() - PI).abs() < 1e-9);
        // The l1 profile has kinks, so the trapezoid rule is only O(h^2)
        // there; 8192 nodes reach the 1e-6 tolerance.
        let l1 = StarBody::lq_ball(grid2(8192), 1.0, 1.0);
        assert!((l1.volume() - 2.0).abs() < 1e-6);
        // Scaling law.
        let k = l1.dilate(1.7);
        assert!((k.volume() - 1.7f64.powi(2) * l1.volume()).abs() < 1e-9);
    }

    #[test]
    fn ball_volume_3d() {
        let g = Arc::new(SphereGrid::new(3, 20000).unwrap());
        let ball = StarBody::ball(g, 1.0);
        let exact = 4.0 * PI / 3.0;
        assert!((ball.volume() - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn dual_mixed_volume_identities() {
        let g = grid2(1024);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = StarBody::random_smooth_2d(g.clone(), 4, 0.3, &mut rng);
        for i in [-1.0, 0.0, 3.0] {
            let v = k.dual_mixed_volume(&k, i).unwrap();
            assert!((v - k.volume()).abs() <= 1e-12 * k.volume());
        }
        // Constant radii 1 and 2: (1/2) * 2pi * 1^3 * 2^{-1} = pi/2.
        let b1 = StarBody::ball(g.clone(), 1.0);
        let b2 = StarBody::ball(g.clone(), 2.0);
        assert!((b1.dual_mixed_volume(&b2, -1.0).unwrap() - PI / 2.0).abs() < 1e-12);

        // Dilate pair saturates Lutwak's inequality.
        let l = k.dilate(1.7);
        let lhs = l.dual_mixed_volume(&k, -1.0).unwrap().powi(2);
        let rhs = l.volume().powi(3) / k.volume();
        assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn grid_mismatch_is_detected() {
        let a = StarBody::ball(grid2(64), 1.0);
        let b = StarBody::ball(grid2(128), 1.0);
        assert!(matches!(
            a.dual_mixed_volume(&b, -1.0),
            Err(Error::GridMismatch)
        ));
        assert!(matches!(a.radial_metric(&b), Err(Error::GridMismatch)));
    }

    #[test]
    fn radial_metric_basics() {
        let g = grid2(256);
        let b1 = StarBody::ball(g.clone(), 1.0);
        let b2 = StarBody::ball(g.clone(), 2.0);
        assert_eq!(b1.radial_metric(&b1).unwrap(), 0.0);
        assert!((b1.radial_metric(&b2).unwrap() - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let k = StarBody::random_smooth_2d(g.clone(), 3, 0.3, &mut rng);
            let l = StarBody::random_smooth_2d(g.clone(), 3, 0.3, &mut rng);
            let m = StarBody::random_smooth_2d(g.clone(), 3, 0.3, &mut rng);
            let km = k.radial_metric(&m).unwrap();
            let kl = k.radial_metric(&l).unwrap();
            let lm = l.radial_metric(&m).unwrap();
            assert!(km <= kl + lm + 1e-12);
        }
    }

    #[test]
    fn harmonic_combination_cases() {
        let g = grid2(512);
        let b = StarBody::ball(g.clone(), 1.0);
        // a = 1, b = 0 recovers K.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = StarBody::random_smooth_2d(g.clone(), 4, 0.3, &mut rng);
        let m = StarBody::harmonic_combination(&k, &b, 1.0, 0.0, 2.0).unwrap();
        assert!(k.radial_metric(&m).unwrap() < 1e-14);

        // K = L = B, a = b = 1, q = 2: ball of radius 1/sqrt(2).
        let m = StarBody::harmonic_combination(&b, &b, 1.0, 1.0, 2.0).unwrap();
        let half = StarBody::ball(g.clone(), 1.0 / 2.0f64.sqrt());
        assert!(m.radial_metric(&half).unwrap() < 1e-14);

        assert!(matches!(
            StarBody::harmonic_combination(&b, &b, 0.0, 0.0, 2.0),
            Err(Error::DegenerateCombination)
        ));
    }

    #[test]
    fn harmonic_combination_gauge_identity() {
        // gauge_M^2 = gauge_K^2 + (rho/2) |x|^2 for M = harm2(K, B; 1, rho/2).
        let g = grid2(1024);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k = StarBody::random_smooth_2d(g.clone(), 4, 0.3, &mut rng);
        let b = StarBody::ball(g.clone(), 1.0);
        let rho = 0.8;
        let m = StarBody::harmonic_combination(&k, &b, 1.0, rho / 2.0, 2.0).unwrap();
        for _ in 0..100 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            if norm2(&x) < 1e-3 {
                continue;
            }
            let lhs = m.gauge(&x).powi(2);
            let rhs = k.gauge(&x).powi(2) + rho / 2.0 * (x[0] * x[0] + x[1] * x[1]);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }
    }

    #[test]
    fn dilate_detection() {
        let g = grid2(512);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let k = StarBody::random_smooth_2d(g.clone(), 4, 0.3, &mut rng);
        let lam = k.dilate(2.0).is_dilate(&k, 1e-9).unwrap();
        assert!((lam - 2.0).abs() < 1e-12);

        let disk = StarBody::ball(g.clone(), 1.0);
        let l1 = StarBody::lq_ball(g.clone(), 1.0, 1.0);
        assert!(disk.is_dilate(&l1, 1e-9).is_none());

        // Tiny perturbation within a loose tolerance still counts.
        let vals: Vec<f64> = g
            .directions()
            .zip(k.radial_values())
            .map(|(u, r)| r * (1.0 + u[0] * 1e-12))
            .collect();
        let kp = StarBody::new(
            RadialProfile::new(g.clone(), vals, Interpolation::PeriodicLinear).unwrap(),
            "perturbed",
        );
        let lam = kp.is_dilate(&k, 1e-9).unwrap();
        assert!((lam - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_ball_containment() {
        let g = grid2(512);
        assert!(StarBody::ball(g.clone(), 2.0).kernel_contains_ball(1.0));
        assert!(!StarBody::ball(g.clone(), 0.5).kernel_contains_ball(1.0));
        // Convex bodies containing B^2 pass.
        let l1 = StarBody::lq_ball(g.clone(), 1.0, 1.5);
        assert!(l1.kernel_contains_ball(1.0));
        // l_{1/2} ball scaled up contains the unit ball but is not
        // star-shaped with respect to all of it.
        let lq = StarBody::lq_ball(g.clone(), 0.5, 8.0);
        assert!(!lq.kernel_contains_ball(1.0));
    }

    #[test]
    fn kernel_check_matches_dense_oracle() {
        // Non-convex mixture-like body: brute force at 10x resolution agrees
        // with the production sampling.
        let g = grid2(256);
        let body = StarBody::new(
            RadialProfile::from_fn(g.clone(), |u: &[f64]| {
                let e1 = (u[0] * u[0] / 1.0 + u[1] * u[1] / 0.01).sqrt();
                let e2 = (u[0] * u[0] / 0.01 + u[1] * u[1] / 1.0).sqrt();
                4.0 * (e1.powi(-3) + e2.powi(-3)).powf(1.0 / 3.0)
            })
            .unwrap(),
            "mixture",
        );
        let dense = SphereGrid::new(2, 640).unwrap();
        for gamma in [0.05, 0.2, 1.0] {
            let fast = body.kernel_contains_ball(gamma);
            let brute = body.kernel_check_detail(gamma, &dense, 1, 160);
            assert_eq!(fast, brute, "gamma = {gamma}");
        }
        // Small gamma passes, gamma = 1 fails for this strongly nonconvex body.
        assert!(body.kernel_contains_ball(0.05));
        assert!(!body.kernel_contains_ball(1.0));
    }

    #[test]
    fn kernel_ball_containment_3d_sampled() {
        let g = Arc::new(SphereGrid::new(3, 2000).unwrap());
        assert!(StarBody::ball(g.clone(), 2.0).kernel_contains_ball(1.0));
        assert!(!StarBody::ball(g.clone(), 0.5).kernel_contains_ball(1.0));
    }

    #[test]
    fn convexity_2d() {
        let g = grid2(1024);
        assert!(StarBody::ball(g.clone(), 1.0).is_convex_2d(1e-8));
        assert!(StarBody::lq_ball(g.clone(), 1.0, 1.0).is_convex_2d(1e-8));
        assert!(!StarBody::lq_ball(g.clone(), 0.5, 1.0).is_convex_2d(1e-8));
    }

    #[test]
    fn radius_bound_values() {
        assert!((max_radius_bound(2, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((max_radius_bound(3, 1.0).unwrap() - 4.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn unit_volume_bodies_respect_radius_bound() {
        // Any unit-volume K in S^2(gamma, 1) satisfies max rho <= R_gamma.
        let g = grid2(512);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        for _ in 0..40 {
            let k = StarBody::random_smooth_2d(g.clone(), 3, 0.25, &mut rng)
                .normalized_to_unit_volume();
            let gamma_candidates = [0.05, 0.1, 0.2, 0.3];
            for gamma in gamma_candidates {
                if k.min_radius() >= gamma && k.kernel_contains_ball(gamma) {
                    let bound = max_radius_bound(2, gamma).unwrap();
                    assert!(
                        k.max_radius() <= bound + 1e-9,
                        "max rho {} > R_gamma {}",
                        k.max_radius(),
                        bound
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 20, "too few bodies qualified: {checked}");
    }

    #[test]
    fn monotone_profiles_give_reversed_gauges() {
        let g = grid2(256);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let k = StarBody::random_smooth_2d(g.clone(), 3, 0.2, &mut rng);
        let l = StarBody::new(
            RadialProfile::new(
                g.clone(),
                k.radial_values().iter().map(|r| r * 1.3).collect(),
                Interpolation::PeriodicLinear,
            )
            .unwrap(),
            "bigger",
        );
        for _ in 0..30 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert!(k.gauge(&x) >= l.gauge(&x) - 1e-12);
        }
    }

    #[test]
    fn gauge_radial_duality_on_grid() {
        let g = grid2(512);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let k = StarBody::random_smooth_2d(g.clone(), 4, 0.3, &mut rng);
        for i in 0..g.len() {
            let u = g.direction(i);
            let rho = k.radial_values()[i];
            let x = [rho * u[0], rho * u[1]];
            assert!((k.gauge(&x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export_shapes() {
        let g2 = grid2(8);
        let csv = StarBody::ball(g2, 1.0).boundary_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "theta,rho,x,y");
        assert_eq!(csv.lines().count(), 9);

        let g3 = Arc::new(SphereGrid::new(3, 8).unwrap());
        let csv3 = StarBody::ball(g3, 1.0).boundary_csv();
        assert!(csv3.starts_with("x,y,z,rho\n"));
    }
}
