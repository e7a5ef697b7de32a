//! Probability densities, sampling, and the directional moment profiles
//! rho_{beta,D} that turn distributions into star bodies.
//!
//! For a density p on R^d and beta with d + beta > 0,
//!
//! ```text
//! rho_{beta,D}(u) = ( int_0^inf t^{d+beta-1} p(t u) dt )^{1/(d+beta)}
//! ```
//!
//! beta = 1 is the body-inducing profile rho_p (average mass the
//! distribution accrues per direction), beta = -1 the reciprocal-gauge
//! profile used by the Hellinger loss, and general beta feeds the
//! alpha-divergence losses.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, StandardNormal};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::spherequad::SphereGrid;
use crate::starbody::{norm2, Interpolation, RadialProfile, StarBody};

/// Radial shape psi for gauge-Gibbs densities `p(x) = psi(||x||_L^q) / Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialShape {
    /// psi(t) = exp(-t).
    Exp,
    /// psi(t) = exp(-t^2 / 2).
    Gauss,
}

impl RadialShape {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RadialShape::Exp => (-t).exp(),
            RadialShape::Gauss => (-0.5 * t * t).exp(),
        }
    }

    /// c_beta(psi, q) = int_0^inf t^{m-1} psi(t^q) dt with m = d + beta,
    /// in closed form via the gamma function.
    pub fn radial_constant(&self, q: f64, m: f64) -> f64 {
        assert!(m > 0.0 && q > 0.0);
        match self {
            RadialShape::Exp => gamma(m / q) / q,
            RadialShape::Gauss => 2.0_f64.powf(m / (2.0 * q) - 1.0) * gamma(m / (2.0 * q)) / q,
        }
    }

    /// Draw the radial coordinate with density proportional to
    /// t^{d-1} psi(t^q).
    fn sample_radius<R: Rng>(&self, dim: usize, q: f64, rng: &mut R) -> f64 {
        let d = dim as f64;
        match self {
            RadialShape::Exp => {
                let g = GammaDist::new(d / q, 1.0).expect("gamma shape");
                g.sample(rng).powf(1.0 / q)
            }
            RadialShape::Gauss => {
                let g = GammaDist::new(d / (2.0 * q), 1.0).expect("gamma shape");
                (2.0 * g.sample(rng)).powf(1.0 / (2.0 * q))
            }
        }
    }
}

/// Gaussian with full-rank covariance; factorizations precomputed.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    precision: DMatrix<f64>,
    norm_const: f64,
}

impl GaussianDensity {
    fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Self {
        let dim = mean.len();
        let flat: Vec<f64> = cov.iter().flat_map(|r| r.iter().cloned()).collect();
        let cov = DMatrix::from_row_slice(dim, dim, &flat);
        let chol = cov
            .clone()
            .cholesky()
            .expect("covariance must be symmetric positive definite");
        let precision = cov.clone().try_inverse().expect("covariance invertible");
        let det = cov.determinant();
        let norm_const = 1.0 / ((2.0 * std::f64::consts::PI).powf(dim as f64 / 2.0) * det.sqrt());
        Self {
            mean: DVector::from_vec(mean),
            cov,
            chol: chol.unpack(),
            precision,
            norm_const,
        }
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let dx = DVector::from_row_slice(x) - &self.mean;
        let q = (&self.precision * &dx).dot(&dx);
        self.norm_const * (-0.5 * q).exp()
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let x = &self.mean + &self.chol * DVector::from_vec(z);
        x.as_slice().to_vec()
    }

    fn is_centered(&self) -> bool {
        self.mean.iter().all(|&m| m == 0.0)
    }

    /// u' * Sigma^{-1} * u.
    fn mahalanobis_sq(&self, u: &[f64]) -> f64 {
        let v = DVector::from_row_slice(u);
        (&self.precision * &v).dot(&v)
    }
}

/// An evaluable/sampleable probability density on R^d.
#[derive(Debug, Clone)]
pub enum Density {
    /// p(x) = psi(||x||_L^q) / Z with Z = d * vol(L) * c_0(psi, q).
    GaugeGibbs {
        body: StarBody,
        q: f64,
        shape: RadialShape,
        norm: f64,
        radius_bound: f64,
    },
    Gaussian(GaussianDensity),
    Mixture {
        weights: Vec<f64>,
        components: Vec<Density>,
    },
    /// Pullback of the measurement distribution through the pseudo-inverse,
    /// convolved with isotropic Gaussian noise; reduces to a Gaussian for a
    /// Gaussian base measure.
    PushforwardConvolved {
        a: DMatrix<f64>,
        sigma2: f64,
        reduced: GaussianDensity,
    },
    UniformBody {
        body: StarBody,
        volume: f64,
        radius_bound: f64,
    },
    Empirical {
        points: Vec<Vec<f64>>,
    },
}

impl Density {
    pub fn gauge_gibbs(body: StarBody, q: f64, shape: RadialShape) -> Self {
        assert!(q > 0.0);
        let d = body.dim() as f64;
        let c0 = shape.radial_constant(q, d);
        let norm = d * body.volume() * c0;
        let radius_bound = body.max_radius() * (1.0 + 1e-3);
        Density::GaugeGibbs {
            body,
            q,
            shape,
            norm,
            radius_bound,
        }
    }

    pub fn gaussian(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Self {
        Density::Gaussian(GaussianDensity::new(mean, cov))
    }

    pub fn isotropic_gaussian(dim: usize, sigma: f64) -> Self {
        let cov = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { sigma * sigma } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::gaussian(vec![0.0; dim], cov)
    }

    pub fn mixture(weights: Vec<f64>, components: Vec<Density>) -> Self {
        assert_eq!(weights.len(), components.len());
        assert!(!components.is_empty());
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0 && weights.iter().all(|&w| w >= 0.0));
        let weights = weights.iter().map(|w| w / total).collect();
        Density::Mixture {
            weights,
            components,
        }
    }

    /// D_n = pinv(A)_# (A_# base) convolved with N(0, sigma2 * I); the base
    /// measure must be Gaussian (the closed-form case). `a` is row-major
    /// m x d with full row rank.
    pub fn pushforward_convolved(a: Vec<Vec<f64>>, base: &Density, sigma2: f64) -> Result<Self> {
        let Density::Gaussian(g) = base else {
            return Err(Error::UnsupportedBaseMeasure);
        };
        assert!(sigma2 > 0.0);
        let m = a.len();
        let d = g.dim();
        let flat: Vec<f64> = a.iter().flat_map(|r| r.iter().cloned()).collect();
        let a = DMatrix::from_row_slice(m, d, &flat);
        let pinv = a
            .clone()
            .svd(true, true)
            .pseudo_inverse(1e-12)
            .expect("pseudo-inverse");
        let proj = &pinv * &a; // projection onto the row span of A
        let mean = (&proj * &g.mean).as_slice().to_vec();
        let mut cov = &proj * &g.cov * proj.transpose();
        for i in 0..d {
            cov[(i, i)] += sigma2;
        }
        // Symmetrize rounding noise before factorization.
        let cov = (&cov + cov.transpose()) * 0.5;
        let cov_rows: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| cov[(i, j)]).collect())
            .collect();
        let reduced = GaussianDensity::new(mean, cov_rows);
        Ok(Density::PushforwardConvolved { a, sigma2, reduced })
    }

    pub fn uniform_body(body: StarBody) -> Self {
        let volume = body.volume();
        let radius_bound = body.max_radius() * (1.0 + 1e-3);
        Density::UniformBody {
            body,
            volume,
            radius_bound,
        }
    }

    pub fn empirical(points: Vec<Vec<f64>>) -> Self {
        assert!(!points.is_empty());
        Density::Empirical { points }
    }

    pub fn dim(&self) -> usize {
        match self {
            Density::GaugeGibbs { body, .. } => body.dim(),
            Density::Gaussian(g) => g.dim(),
            Density::Mixture { components, .. } => components[0].dim(),
            Density::PushforwardConvolved { reduced, .. } => reduced.dim(),
            Density::UniformBody { body, .. } => body.dim(),
            Density::Empirical { points } => points[0].len(),
        }
    }

    /// Whether a pointwise density evaluator exists (everything except
    /// `Empirical`).
    pub fn has_density(&self) -> bool {
        match self {
            Density::Empirical { .. } => false,
            Density::Mixture { components, .. } => components.iter().all(|c| c.has_density()),
            _ => true,
        }
    }

    /// Pointwise density value. Panics for `Empirical` (no density exists);
    /// guard with [`Density::has_density`].
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Density::GaugeGibbs {
                body,
                q,
                shape,
                norm,
                ..
            } => shape.eval(body.gauge(x).powf(*q)) / norm,
            Density::Gaussian(g) => g.eval(x),
            Density::Mixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.eval(x))
                .sum(),
            Density::PushforwardConvolved { reduced, .. } => reduced.eval(x),
            Density::UniformBody { body, volume, .. } => {
                if body.gauge(x) <= 1.0 {
                    1.0 / volume
                } else {
                    0.0
                }
            }
            Density::Empirical { .. } => {
                panic!("empirical distributions have no pointwise density")
            }
        }
    }

    /// Draw one sample. Gauge-Gibbs and uniform-body kinds use exact
    /// rejection in the direction and radius coordinates.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Density::GaugeGibbs {
                body,
                q,
                shape,
                radius_bound,
                ..
            } => {
                let dim = body.dim();
                // Direction density on the sphere is proportional to rho_L^d.
                let u = loop {
                    let u = random_unit(dim, rng);
                    let rho = body.radial_unit(&u);
                    if rng.gen::<f64>() < (rho / radius_bound).powi(dim as i32) {
                        break u;
                    }
                };
                let t = shape.sample_radius(dim, *q, rng);
                let rho = body.radial_unit(&u);
                u.iter().map(|c| c * t * rho).collect()
            }
            Density::Gaussian(g) => g.sample(rng),
            Density::Mixture {
                weights,
                components,
            } => {
                let mut pick: f64 = rng.gen();
                for (w, c) in weights.iter().zip(components) {
                    if pick < *w {
                        return c.sample(rng);
                    }
                    pick -= w;
                }
                components.last().unwrap().sample(rng)
            }
            Density::PushforwardConvolved { reduced, .. } => reduced.sample(rng),
            Density::UniformBody {
                body, radius_bound, ..
            } => loop {
                let u = random_unit(body.dim(), rng);
                let r = radius_bound * rng.gen::<f64>().powf(1.0 / body.dim() as f64);
                let x: Vec<f64> = u.iter().map(|c| c * r).collect();
                if body.gauge(&x) <= 1.0 {
                    return x;
                }
            },
            Density::Empirical { points } => points[rng.gen_range(0..points.len())].clone(),
        }
    }

    /// Closed-form moment profile values raised to the (d+beta)-th power,
    /// when the density kind admits one.
    fn moment_power_closed_form(&self, beta: f64, u: &[f64]) -> Option<f64> {
        let d = self.dim() as f64;
        let m = d + beta;
        match self {
            Density::GaugeGibbs {
                body,
                q,
                shape,
                norm,
                ..
            } => {
                let c = shape.radial_constant(*q, m);
                Some(c * body.radial_unit(u).powf(m) / norm)
            }
            Density::Gaussian(g) if g.is_centered() => {
                let gm = 2.0_f64.powf(m / 2.0 - 1.0) * gamma(m / 2.0);
                Some(g.norm_const * gm * g.mahalanobis_sq(u).powf(-m / 2.0))
            }
            Density::PushforwardConvolved { reduced, .. } if reduced.is_centered() => {
                let gm = 2.0_f64.powf(m / 2.0 - 1.0) * gamma(m / 2.0);
                Some(reduced.norm_const * gm * reduced.mahalanobis_sq(u).powf(-m / 2.0))
            }
            Density::UniformBody { body, volume, .. } => {
                Some(body.radial_unit(u).powf(m) / (m * volume))
            }
            Density::Mixture {
                weights,
                components,
            } => {
                let mut acc = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    acc += w * c.moment_power_closed_form(beta, u)?;
                }
                Some(acc)
            }
            _ => None,
        }
    }

    fn eval_ray(&self, u: &[f64], t: f64) -> f64 {
        let x: Vec<f64> = u.iter().map(|c| c * t).collect();
        self.eval(&x)
    }
}

fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = norm2(&v);
        if n > 1e-12 {
            return v.iter().map(|c| c / n).collect();
        }
    }
}

/// Directional moment profile rho_{beta,D} on a sphere grid; the
/// (d+beta)-th root is already applied, so values are homogeneous of
/// degree -1 under the radial extension.
#[derive(Debug, Clone)]
pub struct MomentProfile {
    beta: f64,
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl MomentProfile {
    /// Wrap externally computed profile values (nonnegative, one per node).
    pub fn from_values(beta: f64, grid: Arc<SphereGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        assert!(grid.dim() as f64 + beta > 0.0);
        assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { beta, grid, values }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// Convert to a radial profile (requires strictly positive values).
    pub fn to_radial_profile(&self) -> Result<RadialProfile> {
        let interpolation = if self.grid.dim() == 2 {
            Interpolation::PeriodicLinear
        } else {
            Interpolation::NearestNeighbor
        };
        RadialProfile::new(self.grid.clone(), self.values.clone(), interpolation)
    }

    pub fn to_star_body(&self, label: impl Into<String>) -> Result<StarBody> {
        Ok(StarBody::new(self.to_radial_profile()?, label))
    }
}

/// rho_{beta,D} on `grid`, using closed forms where the density kind admits
/// one and per-direction numerical integration otherwise.
pub fn moment_profile(
    density: &Density,
    beta: f64,
    grid: &Arc<SphereGrid>,
) -> Result<MomentProfile> {
    let d = density.dim() as f64;
    assert!(d + beta > 0.0, "moment profile requires d + beta > 0");
    if !density.has_density() {
        return Err(Error::EmpiricalDensity);
    }
    let m = d + beta;
    let mut values = Vec::with_capacity(grid.len());
    for (i, u) in grid.directions().enumerate() {
        let power = match density.moment_power_closed_form(beta, u) {
            Some(p) => p,
            None => radial_moment_integral(|t| density.eval_ray(u, t), m - 1.0)
                .ok_or(Error::DivergentMoment { index: i })?,
        };
        values.push(power.max(0.0).powf(1.0 / m));
    }
    Ok(MomentProfile {
        beta,
        grid: grid.clone(),
        values,
    })
}

/// Like [`moment_profile`] but forcing the 1-D numerical integration path;
/// used to cross-check the closed forms.
pub fn moment_profile_numeric(
    density: &Density,
    beta: f64,
    grid: &Arc<SphereGrid>,
) -> Result<MomentProfile> {
    let d = density.dim() as f64;
    assert!(d + beta > 0.0);
    if !density.has_density() {
        return Err(Error::EmpiricalDensity);
    }
    let m = d + beta;
    let mut values = Vec::with_capacity(grid.len());
    for (i, u) in grid.directions().enumerate() {
        let power = radial_moment_integral(|t| density.eval_ray(u, t), m - 1.0)
            .ok_or(Error::DivergentMoment { index: i })?;
        values.push(power.max(0.0).powf(1.0 / m));
    }
    Ok(MomentProfile {
        beta,
        grid: grid.clone(),
        values,
    })
}

/// Monte Carlo estimate of E_D[||x||_K]; returns (mean, standard error).
pub fn expected_gauge_mc(density: &Density, body: &StarBody, n: usize, seed: u64) -> (f64, f64) {
    use rand::SeedableRng;
    assert!(n >= 1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    // Welford accumulation: single pass, no sample storage.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let x = density.sample(&mut rng);
        let g = body.gauge(&x);
        let delta = g - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (g - mean);
    }
    let se = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    (mean, se)
}

/// E_D[||x||_K] by spherical quadrature: int rho_p^{d+1} rho_K^{-1} du.
pub fn expected_gauge_quadrature(
    density: &Density,
    body: &StarBody,
    grid: &Arc<SphereGrid>,
) -> Result<f64> {
    expected_gauge_power(density, body, 1.0, grid)
}

/// E_D[||x||_K^s] by quadrature: int rho_{s,D}^{d+s} rho_K^{-s} du.
///
/// s = 1 is the plain expected gauge; s = -1 gives E[||x||_K^{-1}] =
/// int rho_{-1,D}^{d-1} rho_K du.
pub fn expected_gauge_power(
    density: &Density,
    body: &StarBody,
    s: f64,
    grid: &Arc<SphereGrid>,
) -> Result<f64> {
    let profile = moment_profile(density, s, grid)?;
    let d = grid.dim() as f64;
    let vals: Vec<f64> = profile
        .values()
        .iter()
        .zip(body.radial_values())
        .map(|(rp, rk)| rp.powf(d + s) * rk.powf(-s))
        .collect();
    Ok(grid.weighted_sum(&vals))
}

// ---------------------------------------------------------------------------
// 1-D improper radial integrals.
// ---------------------------------------------------------------------------

/// int_0^inf t^{exponent} f(t) dt via the substitution t = s/(1-s) and
/// composite 32-point Gauss-Legendre panels on [0,1), doubling the panel
/// count until the relative change is <= 1e-9. Returns None past 2^14
/// panels (non-decaying tail) or on non-finite integrand values.
pub(crate) fn radial_moment_integral<F: Fn(f64) -> f64>(f: F, exponent: f64) -> Option<f64> {
    const REL_TOL: f64 = 1e-9;
    const MAX_PANELS: usize = 1 << 14;
    let g = |s: f64| {
        let t = s / (1.0 - s);
        let jac = 1.0 / ((1.0 - s) * (1.0 - s));
        t.powf(exponent) * f(t) * jac
    };
    let mut panels = 1;
    let mut prev = panel_quadrature(&g, panels)?;
    while panels < MAX_PANELS {
        panels *= 2;
        let next = panel_quadrature(&g, panels)?;
        if (next - prev).abs() <= REL_TOL * next.abs().max(1e-300) {
            return Some(next);
        }
        prev = next;
    }
    None
}

fn panel_quadrature<F: Fn(f64) -> f64>(g: &F, panels: usize) -> Option<f64> {
    let (nodes, weights) = gauss_legendre_unit();
    let h = 1.0 / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let left = k as f64 * h;
        for (x, w) in nodes.iter().zip(weights) {
            let v = g(left + x * h);
            if !v.is_finite() {
                return None;
            }
            acc += w * h * v;
        }
    }
    Some(acc)
}

/// 32-point Gauss-Legendre nodes/weights on (0,1), computed once by Newton
/// iteration on the Legendre recurrence.
fn gauss_legendre_unit() -> (&'static [f64], &'static [f64]) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (n, w) = RULE.get_or_init(|| {
        const N: usize = 32;
        let mut nodes = vec![0.0; N];
        let mut weights = vec![0.0; N];
        for i in 0..N.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_N(x) and its derivative.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let wgt = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[N - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * wgt;
            weights[N - 1 - i] = 0.5 * wgt;
        }
        (nodes, weights)
    });
    (n, w)
}
