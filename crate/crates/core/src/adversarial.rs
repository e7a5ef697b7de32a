//! The Wasserstein-critic loss F(K; D_r, D_n), the data-dependent body
//! L_{r,n}, the closed-form optimum K*, reweighting/scaling helpers, and a
//! discretized ERM solver.
//!
//! Writing rho_r, rho_n for the beta = 1 moment profiles of the two
//! densities, the loss is
//!
//! ```text
//! F(K) = E_r ||x||_K - w * E_n ||x||_K
//!      = int (rho_r^{d+1} - w * rho_n^{d+1}) rho_K^{-1} du,
//! ```
//!
//! and whenever rho_r^{d+1} > w * rho_n^{d+1} pointwise, F(K) =
//! d * V_{-1}(L_{r,n}, K) for the body L_{r,n} with radial function
//! (rho_r^{d+1} - w * rho_n^{d+1})^{1/(d+1)}. Lutwak's inequality then makes
//! the unit-volume dilate of L_{r,n} the unique unit-volume minimizer.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::density::{expected_gauge_mc, moment_profile, Density, MomentProfile};
use crate::error::{Error, Result};
use crate::spherequad::{same_grid, SphereGrid};
use crate::starbody::{Interpolation, RadialProfile, StarBody};
use crate::transport::w1_exact;

/// Adversarial critic problem: clean and noise densities on a shared grid,
/// with an optional weight on the noise term.
#[derive(Debug, Clone)]
pub struct AdversarialProblem {
    d_r: Option<Density>,
    d_n: Option<Density>,
    grid: Arc<SphereGrid>,
    noise_weight: f64,
    rho_r: MomentProfile,
    rho_n: MomentProfile,
}

/// Result of [`AdversarialProblem::reweight_to_containment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reweighting {
    /// Largest admissible noise weight.
    Bounded(f64),
    /// The noise profile vanishes identically; any weight works.
    Unconstrained,
}

impl AdversarialProblem {
    /// Build from densities; caches both beta = 1 moment profiles.
    pub fn new(d_r: Density, d_n: Density, grid: Arc<SphereGrid>) -> Result<Self> {
        let rho_r = moment_profile(&d_r, 1.0, &grid)?;
        let rho_n = moment_profile(&d_n, 1.0, &grid)?;
        Ok(Self {
            d_r: Some(d_r),
            d_n: Some(d_n),
            grid,
            noise_weight: 1.0,
            rho_r,
            rho_n,
        })
    }

    /// Build directly from moment profiles (quadrature-only problem; the
    /// Monte Carlo routines are unavailable).
    pub fn from_profiles(rho_r: MomentProfile, rho_n: MomentProfile) -> Self {
        assert_eq!(rho_r.grid().len(), rho_n.grid().len());
        let grid = rho_r.grid().clone();
        Self {
            d_r: None,
            d_n: None,
            grid,
            noise_weight: 1.0,
            rho_r,
            rho_n,
        }
    }

    pub fn with_noise_weight(mut self, w: f64) -> Self {
        assert!(w > 0.0);
        self.noise_weight = w;
        self
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn noise_weight(&self) -> f64 {
        self.noise_weight
    }

    pub fn clean_profile(&self) -> &MomentProfile {
        &self.rho_r
    }

    pub fn noise_profile(&self) -> &MomentProfile {
        &self.rho_n
    }

    pub fn densities(&self) -> Option<(&Density, &Density)> {
        self.d_r.as_ref().zip(self.d_n.as_ref())
    }

    /// F(K) by quadrature: int (rho_r^{d+1} - w rho_n^{d+1}) rho_K^{-1} du.
    pub fn loss(&self, k: &StarBody) -> Result<f64> {
        if !same_grid(&self.grid, k.grid()) {
            return Err(Error::GridMismatch);
        }
        let d = self.grid.dim() as f64;
        let w = self.noise_weight;
        let vals: Vec<f64> = self
            .rho_r
            .values()
            .iter()
            .zip(self.rho_n.values())
            .zip(k.radial_values())
            .map(|((rr, rn), rk)| (rr.powf(d + 1.0) - w * rn.powf(d + 1.0)) / rk)
            .collect();
        Ok(self.grid.weighted_sum(&vals))
    }

    /// Monte Carlo estimate of F(K); returns (mean, combined standard error).
    pub fn loss_mc(&self, k: &StarBody, n: usize, seed: u64) -> (f64, f64) {
        let (d_r, d_n) = self
            .densities()
            .expect("Monte Carlo loss needs densities, not bare profiles");
        let (mr, se_r) = expected_gauge_mc(d_r, k, n, seed);
        let (mn, se_n) = expected_gauge_mc(d_n, k, n, seed.wrapping_add(1));
        let w = self.noise_weight;
        (mr - w * mn, (se_r * se_r + w * w * se_n * se_n).sqrt())
    }

    /// Per-direction containment margins rho_r^{d+1} - w * rho_n^{d+1}.
    fn margins(&self) -> Vec<f64> {
        let d = self.grid.dim() as f64;
        let w = self.noise_weight;
        self.rho_r
            .values()
            .iter()
            .zip(self.rho_n.values())
            .map(|(rr, rn)| rr.powf(d + 1.0) - w * rn.powf(d + 1.0))
            .collect()
    }

    /// The data-dependent body L_{r,n} with radial function
    /// (rho_r^{d+1} - w * rho_n^{d+1})^{1/(d+1)}.
    ///
    /// The containment hypothesis rho_r^{d+1} > w * rho_n^{d+1} is
    /// load-bearing: violating directions give a non-positive radial value,
    /// reported as `ContainmentViolated` with the worst margin.
    pub fn build_lrn(&self) -> Result<StarBody> {
        let margins = self.margins();
        let (worst_idx, worst) = margins
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite margins"))
            .expect("non-empty grid");
        if *worst <= 0.0 {
            return Err(Error::ContainmentViolated {
                index: worst_idx,
                margin: *worst,
            });
        }
        let d = self.grid.dim() as f64;
        let values: Vec<f64> = margins.iter().map(|m| m.powf(1.0 / (d + 1.0))).collect();
        let interpolation = if self.grid.dim() == 2 {
            Interpolation::PeriodicLinear
        } else {
            Interpolation::NearestNeighbor
        };
        let profile = RadialProfile::new(self.grid.clone(), values, interpolation)?;
        Ok(StarBody::new(profile, "L_rn"))
    }

    /// Closed-form optimum K* = vol(L_{r,n})^{-1/d} L_{r,n}; the unique
    /// unit-volume minimizer of the loss.
    pub fn optimal(&self) -> Result<StarBody> {
        let lrn = self.build_lrn()?;
        Ok(lrn.normalized_to_unit_volume().with_label("K_star"))
    }

    /// Largest noise weight w such that w * rho_n^{d+1} <=
    /// (1 - margin) * rho_r^{d+1} in every direction (directions with
    /// rho_n = 0 impose no constraint).
    pub fn reweight_to_containment(&self, margin: f64) -> Reweighting {
        assert!((0.0..1.0).contains(&margin));
        let d = self.grid.dim() as f64;
        let mut best: Option<f64> = None;
        for (rr, rn) in self.rho_r.values().iter().zip(self.rho_n.values()) {
            if *rn > 0.0 {
                let w = (1.0 - margin) * (rr / rn).powf(d + 1.0);
                best = Some(best.map_or(w, |b: f64| b.min(w)));
            }
        }
        match best {
            Some(w) => Reweighting::Bounded(w),
            None => Reweighting::Unconstrained,
        }
    }
}

/// Scaling factor alpha* = (1/2) (vol(K_n)/vol(K_r)) (m/M)^{d+1} that makes
/// the exponential-Gibbs pair (K_r, alpha* K_n) satisfy the containment
/// hypothesis; m and M are the inner and outer ball radii over both bodies.
pub fn scaling_alpha_star(k_r: &StarBody, k_n: &StarBody) -> f64 {
    let d = k_r.dim() as f64;
    let m = k_r.min_radius().min(k_n.min_radius());
    let big_m = k_r.max_radius().max(k_n.max_radius());
    0.5 * (k_n.volume() / k_r.volume()) * (m / big_m).powf(d + 1.0)
}

/// Options for the projected-gradient ERM solver.
#[derive(Debug, Clone)]
pub struct ErmOptions {
    /// Number of projected-gradient steps.
    pub steps: usize,
    /// Maximum per-step change of any radial value (line search shrinks it).
    pub step_size: f64,
    /// Lower clamp on radial values after each step.
    pub gamma_floor: f64,
    /// Optional reference body; when set, the trace records the radial gap
    /// to it after every step.
    pub reference: Option<StarBody>,
}

impl Default for ErmOptions {
    fn default() -> Self {
        Self {
            steps: 400,
            step_size: 0.05,
            gamma_floor: 0.05,
            reference: None,
        }
    }
}

/// One accepted ERM step.
#[derive(Debug, Clone, Copy)]
pub struct ErmStep {
    pub step: usize,
    pub loss: f64,
    pub volume: f64,
    pub radial_gap: Option<f64>,
}

/// ERM output: the final body and the loss trace.
#[derive(Debug, Clone)]
pub struct ErmSolution {
    pub body: StarBody,
    pub trace: Vec<ErmStep>,
}

/// Sample preprocessed for the grid parameterization: Euclidean norm plus
/// the two angular nodes it interpolates between.
struct BinnedSample {
    norm: f64,
    node: usize,
    frac: f64,
}

fn bin_samples(samples: &[Vec<f64>], n: usize) -> Vec<BinnedSample> {
    use std::f64::consts::PI;
    samples
        .iter()
        .filter_map(|x| {
            let norm = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if norm < 1e-300 {
                return None; // gauge(0) = 0 contributes nothing
            }
            let theta = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
            let t = theta / (2.0 * PI) * n as f64;
            let node = (t.floor() as usize) % n;
            Some(BinnedSample {
                norm,
                node,
                frac: t - t.floor(),
            })
        })
        .collect()
}

fn empirical_loss(rho: &[f64], bins_r: &[BinnedSample], bins_n: &[BinnedSample]) -> f64 {
    let n = rho.len();
    let term = |bins: &[BinnedSample]| -> f64 {
        let mut acc = 0.0;
        for b in bins {
            let r = (1.0 - b.frac) * rho[b.node] + b.frac * rho[(b.node + 1) % n];
            acc += b.norm / r;
        }
        acc / bins.len() as f64
    };
    term(bins_r) - term(bins_n)
}

fn empirical_gradient(rho: &[f64], bins_r: &[BinnedSample], bins_n: &[BinnedSample]) -> Vec<f64> {
    let n = rho.len();
    let mut grad = vec![0.0; n];
    let mut add = |bins: &[BinnedSample], sign: f64| {
        let scale = sign / bins.len() as f64;
        for b in bins {
            let j = b.node;
            let j1 = (j + 1) % n;
            let r = (1.0 - b.frac) * rho[j] + b.frac * rho[j1];
            // d/d rho_j of |x| / r, split by the interpolation weights.
            let base = -b.norm / (r * r) * scale;
            grad[j] += base * (1.0 - b.frac);
            grad[j1] += base * b.frac;
        }
    };
    add(bins_r, 1.0);
    add(bins_n, -1.0);
    grad
}

/// Project onto {rho >= floor, vol = 1}: clamp, then rescale to unit volume.
fn project(rho: &mut [f64], grid: &SphereGrid, floor: f64) {
    for r in rho.iter_mut() {
        *r = r.max(floor);
    }
    let d = grid.dim() as f64;
    let vol: f64 = (0..grid.len())
        .map(|i| grid.weight(i) * rho[i].powf(d))
        .sum::<f64>()
        / d;
    let scale = vol.powf(-1.0 / d);
    for r in rho.iter_mut() {
        *r *= scale;
    }
}

/// Projected gradient descent on grid radial values minimizing the
/// empirical critic loss mean_r ||x||_K - mean_n ||x||_K over unit-volume
/// bodies with rho >= gamma_floor. d = 2 only.
pub fn erm_solve(
    samples_r: &[Vec<f64>],
    samples_n: &[Vec<f64>],
    grid: &Arc<SphereGrid>,
    opts: &ErmOptions,
) -> Result<ErmSolution> {
    assert_eq!(grid.dim(), 2, "the ERM parameterization is 2-D");
    assert!(!samples_r.is_empty() && !samples_n.is_empty());
    let n = grid.len();
    let bins_r = bin_samples(samples_r, n);
    let bins_n = bin_samples(samples_n, n);

    // Start from the unit-volume disk.
    let mut rho = vec![std::f64::consts::PI.powf(-0.5); n];
    project(&mut rho, grid, opts.gamma_floor);

    let mut trace = Vec::with_capacity(opts.steps + 1);
    let mut loss = empirical_loss(&rho, &bins_r, &bins_n);
    if !loss.is_finite() {
        return Err(Error::DivergedErm { step: 0 });
    }
    let record = |trace: &mut Vec<ErmStep>, step: usize, loss: f64, rho: &[f64]| {
        let d = grid.dim() as f64;
        let vol: f64 = (0..n).map(|i| grid.weight(i) * rho[i].powf(d)).sum::<f64>() / d;
        let radial_gap = opts.reference.as_ref().map(|k| {
            k.radial_values()
                .iter()
                .zip(rho)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
        trace.push(ErmStep {
            step,
            loss,
            volume: vol,
            radial_gap,
        });
    };
    record(&mut trace, 0, loss, &rho);

    // Trust-region style move cap: grow after accepted steps, halve on
    // rejected candidates, stop once it collapses.
    let mut move_cap = opts.step_size;
    for step in 1..=opts.steps {
        let grad = empirical_gradient(&rho, &bins_r, &bins_n);
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax == 0.0 {
            break;
        }
        let mut improved = false;
        while move_cap > 1e-8 * opts.step_size {
            let scale = move_cap / gmax;
            let mut cand: Vec<f64> = rho.iter().zip(&grad).map(|(r, g)| r - scale * g).collect();
            project(&mut cand, grid, opts.gamma_floor);
            let cand_loss = empirical_loss(&cand, &bins_r, &bins_n);
            if !cand_loss.is_finite() {
                return Err(Error::DivergedErm { step });
            }
            if cand_loss <= loss {
                rho = cand;
                loss = cand_loss;
                improved = true;
                move_cap = (move_cap * 1.5).min(opts.step_size);
                break;
            }
            move_cap *= 0.5;
        }
        if !improved {
            break; // cap collapsed: converged at this resolution
        }
        record(&mut trace, step, loss, &rho);
    }

    let profile = RadialProfile::new(grid.clone(), rho, Interpolation::PeriodicLinear)?;
    Ok(ErmSolution {
        body: StarBody::new(profile, "K_erm"),
        trace,
    })
}

/// Outcome of the empirical Wasserstein duality check.
#[derive(Debug, Clone, Copy)]
pub struct W1Check {
    /// Empirical critic loss on the drawn samples.
    pub f_hat: f64,
    /// Exact W1 between the same empirical samples.
    pub w1_hat: f64,
    /// Standard error of `f_hat`.
    pub se: f64,
    /// Duality contract |f_hat| <= w1_hat + 3 se.
    pub holds: bool,
}

impl AdversarialProblem {
    /// Draw n paired samples, estimate F(K), and solve the exact matching
    /// W1 on the same samples. For a 1-Lipschitz gauge (unit ball inside
    /// ker K, checked first), Kantorovich duality on the empirical measures
    /// forces |F_hat| <= W1_hat; the check allows 3 standard errors of
    /// slack on top.
    pub fn w1_lower_bound_check(&self, k: &StarBody, n: usize, seed: u64) -> Result<W1Check> {
        if !k.kernel_contains_ball(1.0) {
            return Err(Error::LipschitzViolated);
        }
        let (d_r, d_n) = self
            .densities()
            .expect("W1 check needs densities, not bare profiles");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| d_r.sample(&mut rng)).collect();
        let ys: Vec<Vec<f64>> = (0..n).map(|_| d_n.sample(&mut rng)).collect();

        let gauges_r: Vec<f64> = xs.iter().map(|x| k.gauge(x)).collect();
        let gauges_n: Vec<f64> = ys.iter().map(|y| k.gauge(y)).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64], m: f64| {
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
        };
        let (mr, mn) = (mean(&gauges_r), mean(&gauges_n));
        let f_hat = mr - self.noise_weight * mn;
        let se = ((var(&gauges_r, mr) + self.noise_weight.powi(2) * var(&gauges_n, mn)) / n as f64)
            .sqrt();
        let w1_hat = w1_exact(&xs, &ys)?;
        Ok(W1Check {
            f_hat,
            w1_hat,
            se,
            holds: f_hat.abs() <= w1_hat + 3.0 * se,
        })
    }
}
