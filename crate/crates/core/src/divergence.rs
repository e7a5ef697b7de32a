//! Hellinger and alpha-divergence critic losses, their dual-mixed-volume
//! forms, the critical dilation parameter lambda*, the closed-form bodies
//! K_{+,lambda} / K_{-,lambda}, and per-direction fixed-point solving.
//!
//! Hellinger loss (a = rho_{1,D_r}, b = rho_{-1,D_n}, both strictly
//! positive):
//!
//! ```text
//! E_r ||x||_K + E_n ||x||_K^{-1} = int (a^{d+1}/rho_K + b^{d-1} rho_K) du
//!                                = d * V_{-1}(L_r, K_{r,n}(K)),
//! rho_{K_{r,n}} = (rho_K^{-1} + rho_K b^{d-1}/a^{d+1})^{-1}.
//! ```
//!
//! K_{r,n} = lambda L_r reduces per direction to the quadratic
//! `lambda (b^{d-1}/a^d) x^2 - x + lambda a = 0`, solvable for
//! 0 < lambda <= lambda* = min_u sqrt((a/b)^{d-1}/4).
//!
//! The alpha-divergence loss (alpha in (-inf,0) u (0,1)) is
//! `alpha^{-1} E_r ||x||_K^alpha + (1-alpha)^{-1} E_n ||x||_K^{alpha-1}`;
//! for alpha in (0,1) it is a single -alpha dual mixed volume against the
//! body K^alpha_{r,n} built here with outer exponent -1/alpha (the unique
//! choice that keeps the radial function homogeneous of degree -1 and makes
//! the identity hold; see `build_kalpha`).

use std::sync::Arc;

use crate::density::{expected_gauge_mc, moment_profile, Density, MomentProfile};
use crate::error::{Error, Result};
use crate::spherequad::{same_grid, SphereGrid};
use crate::starbody::{Interpolation, RadialProfile, StarBody};

fn positive_profile(p: &MomentProfile) -> Result<()> {
    for (i, &v) in p.values().iter().enumerate() {
        if v <= 0.0 {
            return Err(Error::NonPositiveProfile { index: i, value: v });
        }
    }
    Ok(())
}

fn default_interpolation(grid: &SphereGrid) -> Interpolation {
    if grid.dim() == 2 {
        Interpolation::PeriodicLinear
    } else {
        Interpolation::NearestNeighbor
    }
}

/// Hellinger critic problem with cached profiles a = rho_{1,D_r} and
/// b = rho_{-1,D_n}.
#[derive(Debug, Clone)]
pub struct HellingerProblem {
    d_r: Option<Density>,
    d_n: Option<Density>,
    grid: Arc<SphereGrid>,
    a: MomentProfile,
    b: MomentProfile,
}

impl HellingerProblem {
    pub fn new(d_r: Density, d_n: Density, grid: Arc<SphereGrid>) -> Result<Self> {
        let a = moment_profile(&d_r, 1.0, &grid)?;
        let b = moment_profile(&d_n, -1.0, &grid)?;
        positive_profile(&a)?;
        positive_profile(&b)?;
        Ok(Self {
            d_r: Some(d_r),
            d_n: Some(d_n),
            grid,
            a,
            b,
        })
    }

    /// Build from explicit profiles (quadrature-only problem).
    pub fn from_profiles(a: MomentProfile, b: MomentProfile) -> Result<Self> {
        assert_eq!(a.grid().len(), b.grid().len());
        positive_profile(&a)?;
        positive_profile(&b)?;
        let grid = a.grid().clone();
        Ok(Self {
            d_r: None,
            d_n: None,
            grid,
            a,
            b,
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    /// The data body L_r induced by the clean distribution.
    pub fn l_r(&self) -> StarBody {
        self.a.to_star_body("L_r").expect("positive profile")
    }

    /// The reciprocal-moment body for the noise distribution.
    pub fn l_n_tilde(&self) -> StarBody {
        self.b.to_star_body("L_n_tilde").expect("positive profile")
    }

    fn check_grid(&self, k: &StarBody) -> Result<()> {
        if !same_grid(&self.grid, k.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// E_r ||x||_K + E_n ||x||_K^{-1} by quadrature.
    pub fn loss(&self, k: &StarBody) -> Result<f64> {
        self.check_grid(k)?;
        let d = self.grid.dim() as f64;
        let vals: Vec<f64> = self
            .a
            .values()
            .iter()
            .zip(self.b.values())
            .zip(k.radial_values())
            .map(|((a, b), rk)| a.powf(d + 1.0) / rk + b.powf(d - 1.0) * rk)
            .collect();
        Ok(self.grid.weighted_sum(&vals))
    }

    /// The two quadrature terms (E_r ||x||_K, E_n ||x||_K^{-1}) separately;
    /// over dilates lambda K the loss is term0/lambda + lambda*term1.
    pub fn loss_terms(&self, k: &StarBody) -> Result<(f64, f64)> {
        self.check_grid(k)?;
        let d = self.grid.dim() as f64;
        let mut t0 = Vec::with_capacity(self.grid.len());
        let mut t1 = Vec::with_capacity(self.grid.len());
        for ((a, b), rk) in self
            .a
            .values()
            .iter()
            .zip(self.b.values())
            .zip(k.radial_values())
        {
            t0.push(a.powf(d + 1.0) / rk);
            t1.push(b.powf(d - 1.0) * rk);
        }
        Ok((self.grid.weighted_sum(&t0), self.grid.weighted_sum(&t1)))
    }

    /// Monte Carlo estimate of the loss; (mean, combined standard error).
    pub fn loss_mc(&self, k: &StarBody, n: usize, seed: u64) -> (f64, f64) {
        let (d_r, d_n) = self
            .d_r
            .as_ref()
            .zip(self.d_n.as_ref())
            .expect("Monte Carlo loss needs densities, not bare profiles");
        let (mr, se_r) = expected_gauge_mc(d_r, k, n, seed);
        let (mi, se_i) = power_gauge_mc(d_n, k, -1.0, n, seed.wrapping_add(1));
        (mr + mi, (se_r * se_r + se_i * se_i).sqrt())
    }

    /// The K-dependent body K_{r,n}(K): the L1 harmonic radial combination
    /// with radial function (rho_K^{-1} + rho_K b^{d-1}/a^{d+1})^{-1}.
    pub fn build_krn(&self, k: &StarBody) -> Result<StarBody> {
        self.check_grid(k)?;
        let d = self.grid.dim() as f64;
        let values: Vec<f64> = self
            .a
            .values()
            .iter()
            .zip(self.b.values())
            .zip(k.radial_values())
            .map(|((a, b), rk)| 1.0 / (1.0 / rk + rk * b.powf(d - 1.0) / a.powf(d + 1.0)))
            .collect();
        let profile =
            RadialProfile::new(self.grid.clone(), values, default_interpolation(&self.grid))?;
        Ok(StarBody::new(profile, "K_rn"))
    }

    /// Critical dilation parameter lambda* = min_u sqrt((a/b)^{d-1}/4);
    /// below it the per-direction quadratic has two positive roots
    /// everywhere.
    pub fn lambda_star(&self) -> f64 {
        let d = self.grid.dim() as f64;
        self.a
            .values()
            .iter()
            .zip(self.b.values())
            .map(|(a, b)| (0.25 * (a / b).powf(d - 1.0)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// The two star bodies K_{+,lambda}, K_{-,lambda} solving
    /// K_{r,n}(K) = lambda L_r, for 0 < lambda <= lambda*.
    pub fn dilate_solutions(&self, lambda: f64) -> Result<(StarBody, StarBody)> {
        if lambda <= 0.0 {
            return Err(Error::InvalidLambda(lambda));
        }
        let lambda_star = self.lambda_star();
        if lambda > lambda_star {
            return Err(Error::LambdaAboveCritical {
                lambda,
                lambda_star,
            });
        }
        let d = self.grid.dim();
        let mut plus = Vec::with_capacity(self.grid.len());
        let mut minus = Vec::with_capacity(self.grid.len());
        for (a, b) in self.a.values().iter().zip(self.b.values()) {
            let (hi, lo) = hellinger_quadratic_roots(*a, *b, lambda, d)
                .expect("discriminant nonnegative for lambda <= lambda*");
            plus.push(hi);
            minus.push(lo);
        }
        let interp = default_interpolation(&self.grid);
        let k_plus = StarBody::new(
            RadialProfile::new(self.grid.clone(), plus, interp.clone())?,
            "K_plus",
        );
        let k_minus = StarBody::new(
            RadialProfile::new(self.grid.clone(), minus, interp)?,
            "K_minus",
        );
        Ok((k_plus, k_minus))
    }
}

/// Positive roots of `lambda (b^{d-1}/a^d) x^2 - x + lambda a = 0` as
/// (larger, smaller); None when the discriminant is negative. The
/// coefficient signs (+, -, +) allow exactly two positive roots, counted
/// with multiplicity, whenever they are real.
pub fn hellinger_quadratic_roots(a: f64, b: f64, lambda: f64, d: usize) -> Option<(f64, f64)> {
    assert!(a > 0.0 && b > 0.0 && lambda > 0.0 && d >= 2);
    let ratio = (b / a).powi(d as i32 - 1);
    let mut disc = 1.0 - 4.0 * lambda * lambda * ratio;
    // Exactly-critical lambda lands a hair below zero in floats.
    if (-1e-12..0.0).contains(&disc) {
        disc = 0.0;
    }
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let lead = lambda * b.powi(d as i32 - 1) / a.powi(d as i32);
    let hi = (1.0 + sq) / (2.0 * lead);
    // The product of the roots is a^{d+1}/b^{d-1}; the stable form avoids
    // cancellation in 1 - sq near disc = 1.
    let lo = a.powi(d as i32 + 1) / b.powi(d as i32 - 1) / hi;
    Some((hi, lo))
}

fn power_gauge_mc(density: &Density, body: &StarBody, s: f64, n: usize, seed: u64) -> (f64, f64) {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let x = density.sample(&mut rng);
        let v = body.gauge(&x).powf(s);
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let se = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    (mean, se)
}

/// Alpha-divergence critic problem with cached profiles
/// rho_{alpha,D_r} and rho_{alpha-1,D_n}.
#[derive(Debug, Clone)]
pub struct AlphaProblem {
    d_r: Option<Density>,
    d_n: Option<Density>,
    grid: Arc<SphereGrid>,
    alpha: f64,
    rho_r: MomentProfile,
    rho_n: MomentProfile,
}

impl AlphaProblem {
    pub fn new(d_r: Density, d_n: Density, grid: Arc<SphereGrid>, alpha: f64) -> Result<Self> {
        Self::validate_alpha(grid.dim(), alpha);
        let rho_r = moment_profile(&d_r, alpha, &grid)?;
        let rho_n = moment_profile(&d_n, alpha - 1.0, &grid)?;
        positive_profile(&rho_r)?;
        positive_profile(&rho_n)?;
        Ok(Self {
            d_r: Some(d_r),
            d_n: Some(d_n),
            grid,
            alpha,
            rho_r,
            rho_n,
        })
    }

    pub fn from_profiles(alpha: f64, rho_r: MomentProfile, rho_n: MomentProfile) -> Result<Self> {
        assert_eq!(rho_r.grid().len(), rho_n.grid().len());
        let grid = rho_r.grid().clone();
        Self::validate_alpha(grid.dim(), alpha);
        positive_profile(&rho_r)?;
        positive_profile(&rho_n)?;
        Ok(Self {
            d_r: None,
            d_n: None,
            grid,
            alpha,
            rho_r,
            rho_n,
        })
    }

    fn validate_alpha(dim: usize, alpha: f64) {
        let d = dim as f64;
        assert!(
            alpha < 1.0 && alpha != 0.0,
            "alpha must lie in (-inf, 0) or (0, 1)"
        );
        assert!(
            d + alpha > 0.0 && d + alpha - 1.0 > 0.0,
            "moment profiles require d + alpha > 0 and d + alpha - 1 > 0"
        );
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    /// L_r^alpha, the body with radial function rho_{alpha,D_r}.
    pub fn l_r(&self) -> StarBody {
        self.rho_r
            .to_star_body("L_r_alpha")
            .expect("positive profile")
    }

    /// L_n^alpha, the body with radial function rho_{alpha-1,D_n}.
    pub fn l_n(&self) -> StarBody {
        self.rho_n
            .to_star_body("L_n_alpha")
            .expect("positive profile")
    }

    fn check_grid(&self, k: &StarBody) -> Result<()> {
        if !same_grid(&self.grid, k.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// alpha^{-1} E_r ||x||_K^alpha + (1-alpha)^{-1} E_n ||x||_K^{alpha-1}
    /// by quadrature.
    pub fn loss(&self, k: &StarBody) -> Result<f64> {
        self.check_grid(k)?;
        let d = self.grid.dim() as f64;
        let al = self.alpha;
        let vals: Vec<f64> = self
            .rho_r
            .values()
            .iter()
            .zip(self.rho_n.values())
            .zip(k.radial_values())
            .map(|((rr, rn), rk)| {
                rr.powf(d + al) * rk.powf(-al) / al
                    + rn.powf(d + al - 1.0) * rk.powf(1.0 - al) / (1.0 - al)
            })
            .collect();
        Ok(self.grid.weighted_sum(&vals))
    }

    /// Monte Carlo estimate of the loss; (mean, combined standard error).
    pub fn loss_mc(&self, k: &StarBody, n: usize, seed: u64) -> (f64, f64) {
        let (d_r, d_n) = self
            .d_r
            .as_ref()
            .zip(self.d_n.as_ref())
            .expect("Monte Carlo loss needs densities, not bare profiles");
        let al = self.alpha;
        let (mr, se_r) = power_gauge_mc(d_r, k, al, n, seed);
        let (mn, se_n) = power_gauge_mc(d_n, k, al - 1.0, n, seed.wrapping_add(1));
        let (cr, cn) = (1.0 / al, 1.0 / (1.0 - al));
        (
            cr * mr + cn * mn,
            ((cr * se_r).powi(2) + (cn * se_n).powi(2)).sqrt(),
        )
    }

    /// The K-dependent bodies behind the two-term V_{-1} representation:
    /// rho = (rho_r^{d+a} rho_K^{1-a})^{1/(d+1)} and
    /// rho = (rho_n^{d+a-1} rho_K^{2-a})^{1/(d+1)}.
    pub fn tilde_bodies(&self, k: &StarBody) -> Result<(StarBody, StarBody)> {
        self.check_grid(k)?;
        let d = self.grid.dim() as f64;
        let al = self.alpha;
        let mut vr = Vec::with_capacity(self.grid.len());
        let mut vn = Vec::with_capacity(self.grid.len());
        for ((rr, rn), rk) in self
            .rho_r
            .values()
            .iter()
            .zip(self.rho_n.values())
            .zip(k.radial_values())
        {
            vr.push((rr.powf(d + al) * rk.powf(1.0 - al)).powf(1.0 / (d + 1.0)));
            vn.push((rn.powf(d + al - 1.0) * rk.powf(2.0 - al)).powf(1.0 / (d + 1.0)));
        }
        let interp = default_interpolation(&self.grid);
        Ok((
            StarBody::new(
                RadialProfile::new(self.grid.clone(), vr, interp.clone())?,
                "L_r_tilde_alpha",
            ),
            StarBody::new(
                RadialProfile::new(self.grid.clone(), vn, interp)?,
                "L_n_tilde_alpha",
            ),
        ))
    }

    /// The body K^alpha_{r,n}(K) with
    /// rho = (alpha^{-1} rho_K^{-alpha}
    ///        + (1-alpha)^{-1} (rho_n^{d+a-1}/rho_r^{d+a}) rho_K^{1-alpha})^{-1/alpha}.
    ///
    /// The outer exponent -1/alpha is forced by degree -1 homogeneity of
    /// the radial extension and by the V_{-alpha} identity (checked in
    /// tests); requires alpha in (0, 1).
    pub fn build_kalpha(&self, k: &StarBody) -> Result<StarBody> {
        assert!(
            self.alpha > 0.0 && self.alpha < 1.0,
            "K^alpha_rn requires alpha in (0, 1)"
        );
        self.check_grid(k)?;
        let d = self.grid.dim() as f64;
        let al = self.alpha;
        let values: Vec<f64> = self
            .rho_r
            .values()
            .iter()
            .zip(self.rho_n.values())
            .zip(k.radial_values())
            .map(|((rr, rn), rk)| {
                let c = rn.powf(d + al - 1.0) / rr.powf(d + al);
                (rk.powf(-al) / al + c * rk.powf(1.0 - al) / (1.0 - al)).powf(-1.0 / al)
            })
            .collect();
        let profile =
            RadialProfile::new(self.grid.clone(), values, default_interpolation(&self.grid))?;
        Ok(StarBody::new(profile, "K_alpha_rn"))
    }

    /// -alpha dual mixed volume identity right-hand side:
    /// d * V_{-alpha}(L_r^alpha, K^alpha_{r,n}(K)).
    pub fn dual_mixed_volume_form(&self, k: &StarBody) -> Result<f64> {
        let krn = self.build_kalpha(k)?;
        let l_r = self.l_r();
        l_r.dual_mixed_volume(&krn, -self.alpha)
            .map(|v| v * self.grid.dim() as f64)
    }

    /// Solve the per-direction fixed-point condition
    ///
    /// ```text
    /// g(x) = alpha^{-1} x^{-alpha} + c(u) (1-alpha)^{-1} x^{1-alpha}
    ///      = lambda^{-1/alpha} rho_{L_r^alpha}(u)^{-1/alpha} =: RHS(u)
    /// ```
    ///
    /// with c(u) = rho_n^{d+a-1}/rho_r^{d+a}. g decreases to its minimum at
    /// x_min = 1/c(u) and increases afterwards, so each branch is solved by
    /// bisection. Returns the body of all upper-branch roots and the body
    /// of all lower-branch roots; fewer (possibly none) when RHS falls
    /// below the per-direction minimum somewhere.
    pub fn fixed_point_solve(&self, lambda: f64) -> Result<Vec<StarBody>> {
        assert!(
            self.alpha > 0.0 && self.alpha < 1.0,
            "fixed points require alpha in (0, 1)"
        );
        if lambda <= 0.0 {
            return Err(Error::InvalidLambda(lambda));
        }
        let d = self.grid.dim() as f64;
        let al = self.alpha;
        let n = self.grid.len();
        let mut upper = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n);
        for (rr, rn) in self.rho_r.values().iter().zip(self.rho_n.values()) {
            let c = rn.powf(d + al - 1.0) / rr.powf(d + al);
            let g = |x: f64| x.powf(-al) / al + c * x.powf(1.0 - al) / (1.0 - al);
            let rhs = (lambda * rr).powf(-1.0 / al);
            let x_min = 1.0 / c;
            if g(x_min) > rhs {
                return Ok(Vec::new());
            }
            lower.push(bisect_branch(&g, rhs, x_min, false));
            upper.push(bisect_branch(&g, rhs, x_min, true));
        }
        let interp = default_interpolation(&self.grid);
        let k_plus = StarBody::new(
            RadialProfile::new(self.grid.clone(), upper.clone(), interp.clone())?,
            "K_alpha_plus",
        );
        let identical = upper
            .iter()
            .zip(&lower)
            .all(|(u, l)| (u - l).abs() <= 1e-12 * u.abs());
        if identical {
            return Ok(vec![k_plus]);
        }
        let k_minus = StarBody::new(
            RadialProfile::new(self.grid.clone(), lower, interp)?,
            "K_alpha_minus",
        );
        Ok(vec![k_plus, k_minus])
    }
}

/// Bisect g(x) = rhs on one monotone branch around the interior minimum
/// x_min; `upper` selects the increasing branch [x_min, inf) versus the
/// decreasing branch (0, x_min].
fn bisect_branch(g: &impl Fn(f64) -> f64, rhs: f64, x_min: f64, upper: bool) -> f64 {
    // Bracket by repeated doubling/halving away from the minimum; g is
    // unbounded along both branch ends so at most 60 steps suffice for any
    // representable rhs.
    let (mut lo, mut hi);
    if upper {
        lo = x_min;
        hi = x_min;
        for _ in 0..60 {
            hi *= 2.0;
            if g(hi) >= rhs {
                break;
            }
        }
    } else {
        hi = x_min;
        lo = x_min;
        for _ in 0..60 {
            lo *= 0.5;
            if g(lo) >= rhs {
                break;
            }
        }
    }
    // On [lo, hi] the function is monotone; bisect to relative width 1e-12.
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let above = g(mid) >= rhs;
        if above == upper {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
