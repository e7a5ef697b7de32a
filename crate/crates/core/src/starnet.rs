//! Positively homogeneous network regularizers, their star-body extraction,
//! desk-scale critic training, and a gradient-descent denoiser.
//!
//! A network R(x) = ||f_L(...f_1(x))|| with bias-free layers and
//! positively homogeneous activations is itself positively homogeneous of
//! degree 1; when the widths are nondecreasing and every layer is injective
//! (full column rank, leaky-ReLU slope in (0,1), residual maps with
//! contraction factor < 1), R is bounded away from zero on the sphere and
//! `{R <= 1}` is a star body with radial function 1/R(u).
//!
//! Gradients are hand-rolled reverse mode; the gradient-penalty term
//! differentiates ||grad_x R|| with respect to the weights by
//! forward-over-reverse (a tangent pass in x followed by a reverse pass
//! through the augmented primal/tangent graph).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::spherequad::SphereGrid;
use crate::starbody::{norm2, RadialProfile, StarBody};
use std::sync::Arc;

/// One bias-free positively homogeneous layer.
#[derive(Debug, Clone)]
pub enum Layer {
    /// x -> LeakyReLU_slope(W x); injective when W has full column rank
    /// and slope is in (0, 1).
    Dense { weight: DMatrix<f64>, slope: f64 },
    /// x -> x + G x; invertible and positively homogeneous when the
    /// spectral norm of G is strictly below 1.
    Residual { weight: DMatrix<f64> },
}

impl Layer {
    fn in_dim(&self) -> usize {
        match self {
            Layer::Dense { weight, .. } => weight.ncols(),
            Layer::Residual { weight } => weight.ncols(),
        }
    }

    fn out_dim(&self) -> usize {
        match self {
            Layer::Dense { weight, .. } => weight.nrows(),
            Layer::Residual { weight } => weight.nrows(),
        }
    }
}

/// Leaky ReLU; the kink at 0 takes the slope-1 side.
fn lrelu(t: f64, slope: f64) -> f64 {
    if t >= 0.0 {
        t
    } else {
        slope * t
    }
}

fn lrelu_prime(t: f64, slope: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        slope
    }
}

/// Network regularizer R(x) = || layers(x) ||_2.
#[derive(Debug, Clone)]
pub struct HomogeneousNet {
    layers: Vec<Layer>,
}

/// Architecture check findings; empty means all conditions hold.
#[derive(Debug, Clone, Default)]
pub struct ArchitectureReport {
    pub violations: Vec<String>,
}

impl ArchitectureReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

struct ForwardCache {
    /// Activations z_0 (input) through z_L.
    acts: Vec<DVector<f64>>,
    /// Pre-activations of dense layers (None for residual layers).
    pres: Vec<Option<DVector<f64>>>,
    /// Head output norm ||z_L||.
    norm: f64,
}

impl HomogeneousNet {
    pub fn new(layers: Vec<Layer>) -> Self {
        assert!(!layers.is_empty());
        for pair in layers.windows(2) {
            assert_eq!(
                pair[0].out_dim(),
                pair[1].in_dim(),
                "layer dimensions must chain"
            );
        }
        Self { layers }
    }

    /// Random net with the given widths, full-rank weights, and a fixed
    /// leaky-ReLU slope.
    pub fn random<R: Rng>(widths: &[usize], slope: f64, rng: &mut R) -> Self {
        assert!(widths.len() >= 2);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (cols, rows) = (w[0], w[1]);
                let scale = 1.0 / (cols as f64).sqrt();
                let weight = DMatrix::from_fn(rows, cols, |_, _| {
                    rng.gen_range(-1.0..1.0) * scale + if rng.gen_bool(0.5) { 0.3 } else { -0.3 }
                });
                Layer::Dense { weight, slope }
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pres = Vec::with_capacity(self.layers.len());
        acts.push(DVector::from_row_slice(x));
        for layer in &self.layers {
            let z = acts.last().unwrap();
            match layer {
                Layer::Dense { weight, slope } => {
                    let pre = weight * z;
                    let act = pre.map(|t| lrelu(t, *slope));
                    pres.push(Some(pre));
                    acts.push(act);
                }
                Layer::Residual { weight } => {
                    let act = z + weight * z;
                    pres.push(None);
                    acts.push(act);
                }
            }
        }
        let norm = acts.last().unwrap().norm();
        Ok(ForwardCache { acts, pres, norm })
    }

    /// R(x): nonnegative, positively homogeneous, zero only at x = 0 for
    /// valid architectures.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward_cached(x)?.norm)
    }

    /// R(x) and its input gradient by reverse mode.
    pub fn forward_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let cache = self.forward_cached(x)?;
        if cache.norm == 0.0 {
            return Ok((0.0, vec![0.0; x.len()]));
        }
        let mut adj = cache.acts.last().unwrap() / cache.norm;
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            match layer {
                Layer::Dense { weight, slope } => {
                    let pre = cache.pres[idx].as_ref().unwrap();
                    let adj_pre =
                        DVector::from_fn(pre.len(), |i, _| adj[i] * lrelu_prime(pre[i], *slope));
                    adj = weight.transpose() * adj_pre;
                }
                Layer::Residual { weight } => {
                    adj = &adj + weight.transpose() * &adj;
                }
            }
        }
        Ok((cache.norm, adj.as_slice().to_vec()))
    }

    /// Accumulate d R(x) / d theta into `grads` with the given scale.
    fn accumulate_param_grad(&self, cache: &ForwardCache, scale: f64, grads: &mut [DMatrix<f64>]) {
        if cache.norm == 0.0 {
            return;
        }
        let mut adj = cache.acts.last().unwrap() * (scale / cache.norm);
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            match layer {
                Layer::Dense { weight, slope } => {
                    let pre = cache.pres[idx].as_ref().unwrap();
                    let adj_pre =
                        DVector::from_fn(pre.len(), |i, _| adj[i] * lrelu_prime(pre[i], *slope));
                    grads[idx] += &adj_pre * cache.acts[idx].transpose();
                    adj = weight.transpose() * adj_pre;
                }
                Layer::Residual { weight } => {
                    grads[idx] += &adj * cache.acts[idx].transpose();
                    adj = &adj + weight.transpose() * &adj;
                }
            }
        }
    }

    /// Forward-over-reverse accumulation of
    /// scale * d <grad_x R(x), v> / d theta for a fixed vector v.
    ///
    /// Runs the tangent pass zdot_0 = v through the layers, then reverse
    /// through the augmented (primal, tangent) graph. The second derivative
    /// of the activation vanishes almost everywhere and is dropped, the
    /// usual convention for piecewise-linear activations.
    fn accumulate_jvp_grad(
        &self,
        cache: &ForwardCache,
        v: &[f64],
        scale: f64,
        grads: &mut [DMatrix<f64>],
    ) {
        if cache.norm == 0.0 {
            return;
        }
        // Tangent pass.
        let mut dots = Vec::with_capacity(self.layers.len() + 1);
        dots.push(DVector::from_row_slice(v));
        for (idx, layer) in self.layers.iter().enumerate() {
            let zdot = dots.last().unwrap();
            match layer {
                Layer::Dense { weight, slope } => {
                    let predot = weight * zdot;
                    let pre = cache.pres[idx].as_ref().unwrap();
                    dots.push(DVector::from_fn(pre.len(), |i, _| {
                        predot[i] * lrelu_prime(pre[i], *slope)
                    }));
                }
                Layer::Residual { weight } => {
                    dots.push(dots.last().unwrap() + weight * zdot);
                }
            }
        }
        // Head: s = <h, hdot> / ||h||.
        let h = cache.acts.last().unwrap();
        let hdot = dots.last().unwrap();
        let n = cache.norm;
        let hh = h.dot(hdot);
        let mut adj = hdot / n - h * (hh / (n * n * n));
        let mut adj_dot = h / n;
        adj *= scale;
        adj_dot *= scale;
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            match layer {
                Layer::Dense { weight, slope } => {
                    let pre = cache.pres[idx].as_ref().unwrap();
                    let adj_pre =
                        DVector::from_fn(pre.len(), |i, _| adj[i] * lrelu_prime(pre[i], *slope));
                    let adj_predot = DVector::from_fn(pre.len(), |i, _| {
                        adj_dot[i] * lrelu_prime(pre[i], *slope)
                    });
                    grads[idx] += &adj_pre * cache.acts[idx].transpose();
                    // Tangent of the pre-activation was W * zdot_{k}; its
                    // weight sensitivity carries the *tangent* activation.
                    grads[idx] += &adj_predot * dots[idx].transpose();
                    adj = weight.transpose() * adj_pre;
                    adj_dot = weight.transpose() * adj_predot;
                }
                Layer::Residual { weight } => {
                    grads[idx] += &adj * cache.acts[idx].transpose();
                    grads[idx] += &adj_dot * dots[idx].transpose();
                    adj = &adj + weight.transpose() * &adj;
                    adj_dot = &adj_dot + weight.transpose() * &adj_dot;
                }
            }
        }
    }

    /// The star body {R <= 1} with radial function 1/R(u) sampled on the
    /// grid. Errors with `PositivityViolated` if R nearly vanishes on a
    /// grid direction.
    pub fn to_star_body(&self, grid: &Arc<SphereGrid>) -> Result<StarBody> {
        assert_eq!(grid.dim(), self.input_dim());
        let mut values = Vec::with_capacity(grid.len());
        for (i, u) in grid.directions().enumerate() {
            let r = self.forward(u)?;
            if r <= 1e-12 {
                return Err(Error::PositivityViolated { index: i, value: r });
            }
            values.push(1.0 / r);
        }
        let profile = RadialProfile::sampled_values(grid.clone(), values)?;
        Ok(StarBody::new(profile, "K_net"))
    }

    /// Check the star-body architecture conditions: nondecreasing widths,
    /// full column ranks (SVD tolerance 1e-10), slopes in (0, 1), residual
    /// spectral norm <= 0.99 by power iteration.
    pub fn validate(&self) -> ArchitectureReport {
        let mut violations = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.out_dim() < layer.in_dim() {
                violations.push(format!(
                    "layer {i}: width decreases from {} to {}",
                    layer.in_dim(),
                    layer.out_dim()
                ));
            }
            match layer {
                Layer::Dense { weight, slope } => {
                    if !(*slope > 0.0 && *slope < 1.0) {
                        violations.push(format!("layer {i}: slope {slope} not in (0, 1)"));
                    }
                    let rank = weight.clone().svd(false, false).rank(1e-10);
                    if rank < weight.ncols() {
                        violations.push(format!(
                            "layer {i}: rank {rank} < {} columns (not injective)",
                            weight.ncols()
                        ));
                    }
                }
                Layer::Residual { weight } => {
                    if weight.nrows() != weight.ncols() {
                        violations.push(format!("layer {i}: residual map must be square"));
                    } else {
                        let norm = spectral_norm(weight, 200);
                        if norm > 0.99 {
                            violations.push(format!(
                                "layer {i}: residual spectral norm {norm:.4} exceeds 0.99"
                            ));
                        }
                    }
                }
            }
        }
        ArchitectureReport { violations }
    }

    pub fn to_json(&self) -> String {
        let spec = NetJson {
            layers: self
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Dense { weight, slope } => LayerJson::Dense {
                        rows: weight.nrows(),
                        cols: weight.ncols(),
                        slope: *slope,
                        weights: weight.transpose().as_slice().to_vec(),
                    },
                    Layer::Residual { weight } => LayerJson::Residual {
                        dim: weight.nrows(),
                        weights: weight.transpose().as_slice().to_vec(),
                    },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&spec).expect("net serialization")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        let spec: NetJson = serde_json::from_str(s)?;
        let layers = spec
            .layers
            .into_iter()
            .map(|l| match l {
                LayerJson::Dense {
                    rows,
                    cols,
                    slope,
                    weights,
                } => Layer::Dense {
                    weight: DMatrix::from_row_slice(rows, cols, &weights),
                    slope,
                },
                LayerJson::Residual { dim, weights } => Layer::Residual {
                    weight: DMatrix::from_row_slice(dim, dim, &weights),
                },
            })
            .collect();
        Ok(Self::new(layers))
    }
}

/// Largest singular value by power iteration on G^T G.
pub fn spectral_norm(g: &DMatrix<f64>, iters: usize) -> f64 {
    let n = g.ncols();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 0.01);
    v /= v.norm();
    let mut sigma = 0.0;
    for _ in 0..iters {
        let w = g.transpose() * (g * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        sigma = norm.sqrt();
        v = w / norm;
    }
    sigma
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    layers: Vec<LayerJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LayerJson {
    Dense {
        rows: usize,
        cols: usize,
        slope: f64,
        weights: Vec<f64>,
    },
    Residual {
        dim: usize,
        weights: Vec<f64>,
    },
}

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------

/// Critic loss for network training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticLoss {
    /// mean_r R - mean_n R.
    Adversarial,
    /// mean_r R + mean_n R^{-1}.
    Hellinger,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub steps: usize,
    pub lr: f64,
    pub batch: usize,
    /// Weight of the (||grad R|| - 1)^2 penalty on interpolates.
    pub gp_weight: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            steps: 2000,
            lr: 2e-2,
            batch: 128,
            gp_weight: 10.0,
            seed: 0,
        }
    }
}

/// Trained net plus the per-step batch loss trace.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub net: HomogeneousNet,
    pub trace: Vec<f64>,
}

/// SGD on the critic loss plus gradient penalty, batched over the two
/// sample sets. d = 2 desk scale.
pub fn train(
    net: &HomogeneousNet,
    samples_r: &[Vec<f64>],
    samples_n: &[Vec<f64>],
    loss: CriticLoss,
    opts: &TrainOptions,
) -> Result<TrainResult> {
    assert!(!samples_r.is_empty() && !samples_n.is_empty());
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut trace = Vec::with_capacity(opts.steps);
    let b = opts.batch;

    for step in 0..opts.steps {
        let mut grads: Vec<DMatrix<f64>> = net
            .layers
            .iter()
            .map(|l| match l {
                Layer::Dense { weight, .. } => DMatrix::zeros(weight.nrows(), weight.ncols()),
                Layer::Residual { weight } => DMatrix::zeros(weight.nrows(), weight.ncols()),
            })
            .collect();
        let mut batch_loss = 0.0;

        for _ in 0..b {
            let xr = &samples_r[rng.gen_range(0..samples_r.len())];
            let xn = &samples_n[rng.gen_range(0..samples_n.len())];

            let cr = net.forward_cached(xr)?;
            let cn = net.forward_cached(xn)?;
            match loss {
                CriticLoss::Adversarial => {
                    batch_loss += (cr.norm - cn.norm) / b as f64;
                    net.accumulate_param_grad(&cr, 1.0 / b as f64, &mut grads);
                    net.accumulate_param_grad(&cn, -1.0 / b as f64, &mut grads);
                }
                CriticLoss::Hellinger => {
                    let inv = 1.0 / cn.norm.max(1e-9);
                    batch_loss += (cr.norm + inv) / b as f64;
                    net.accumulate_param_grad(&cr, 1.0 / b as f64, &mut grads);
                    net.accumulate_param_grad(&cn, -inv * inv / b as f64, &mut grads);
                }
            }

            // Gradient penalty on an interpolate between the pair.
            if opts.gp_weight > 0.0 {
                let eps: f64 = rng.gen();
                let xi: Vec<f64> = xr
                    .iter()
                    .zip(xn)
                    .map(|(a, c)| eps * a + (1.0 - eps) * c)
                    .collect();
                let (_, grad_x) = net.forward_with_gradient(&xi)?;
                let gnorm = norm2(&grad_x);
                if gnorm > 1e-12 {
                    batch_loss += opts.gp_weight * (gnorm - 1.0).powi(2) / b as f64;
                    let v: Vec<f64> = grad_x.iter().map(|g| g / gnorm).collect();
                    let scale = opts.gp_weight * 2.0 * (gnorm - 1.0) / b as f64;
                    let cache = net.forward_cached(&xi)?;
                    net.accumulate_jvp_grad(&cache, &v, scale, &mut grads);
                }
            }
        }

        if !batch_loss.is_finite() {
            return Err(Error::DivergedTraining { step });
        }
        trace.push(batch_loss);
        for (layer, grad) in net.layers.iter_mut().zip(&grads) {
            match layer {
                Layer::Dense { weight, .. } | Layer::Residual { weight } => {
                    *weight -= grad * opts.lr;
                }
            }
        }
    }

    Ok(TrainResult { net, trace })
}

// ---------------------------------------------------------------------------
// Denoising.
// ---------------------------------------------------------------------------

/// Regularizer choices for the denoiser.
#[derive(Debug, Clone)]
pub enum Regularizer {
    Body(StarBody),
    Net(HomogeneousNet),
}

impl Regularizer {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Regularizer::Body(k) => Ok(k.gauge(x)),
            Regularizer::Net(n) => n.forward(x),
        }
    }

    /// Value and gradient; star-body gauges use central differences (the
    /// interpolated profiles have no closed-form derivative), nets use
    /// reverse mode.
    fn eval_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            Regularizer::Net(n) => n.forward_with_gradient(x),
            Regularizer::Body(k) => {
                let v = k.gauge(x);
                let h = 1e-6 * norm2(x).max(1.0);
                let mut grad = vec![0.0; x.len()];
                let mut xp = x.to_vec();
                for i in 0..x.len() {
                    xp[i] = x[i] + h;
                    let fp = k.gauge(&xp);
                    xp[i] = x[i] - h;
                    let fm = k.gauge(&xp);
                    xp[i] = x[i];
                    grad[i] = (fp - fm) / (2.0 * h);
                }
                Ok((v, grad))
            }
        }
    }
}

/// Monotone transform applied to the regularizer in the denoising
/// objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Penalty {
    Identity,
    Square,
}

/// Denoising problem: minimize ||x - y||^2 + lambda * phi(R(x)) by
/// gradient descent from x_0 = y with backtracking line search.
#[derive(Debug, Clone)]
pub struct DenoiseProblem {
    pub y: Vec<f64>,
    pub regularizer: Regularizer,
    pub lambda: f64,
    pub penalty: Penalty,
    pub steps: usize,
    pub step_size: f64,
}

impl DenoiseProblem {
    pub fn new(y: Vec<f64>, regularizer: Regularizer, lambda: f64, penalty: Penalty) -> Self {
        Self {
            y,
            regularizer,
            lambda,
            penalty,
            steps: 2000,
            step_size: 0.25,
        }
    }

    fn objective(&self, x: &[f64]) -> Result<f64> {
        let fit: f64 = x.iter().zip(&self.y).map(|(a, b)| (a - b) * (a - b)).sum();
        let r = self.regularizer.eval(x)?;
        let pen = match self.penalty {
            Penalty::Identity => r,
            Penalty::Square => r * r,
        };
        Ok(fit + self.lambda * pen)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (r, gr) = self.regularizer.eval_with_gradient(x)?;
        let pen_scale = match self.penalty {
            Penalty::Identity => 1.0,
            Penalty::Square => 2.0 * r,
        };
        Ok(x.iter()
            .zip(&self.y)
            .zip(&gr)
            .map(|((a, b), g)| 2.0 * (a - b) + self.lambda * pen_scale * g)
            .collect())
    }

    /// Returns the final iterate and the (nonincreasing) objective trace.
    pub fn solve(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut x = self.y.clone();
        let mut obj = self.objective(&x)?;
        let mut trace = vec![obj];
        let mut step = self.step_size;
        for iter in 0..self.steps {
            if !obj.is_finite() {
                return Err(Error::DivergedDenoise { step: iter });
            }
            let grad = self.gradient(&x)?;
            let gnorm = norm2(&grad);
            if gnorm < 1e-14 {
                break;
            }
            let mut accepted = false;
            while step * gnorm > 1e-14 {
                let cand: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
                let cand_obj = self.objective(&cand)?;
                if cand_obj <= obj {
                    x = cand;
                    obj = cand_obj;
                    accepted = true;
                    step *= 1.3;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            trace.push(obj);
        }
        Ok((x, trace))
    }
}

/// E ||z|| for z ~ N(0, sigma^2 I_d): sigma * sqrt(2) Gamma((d+1)/2) / Gamma(d/2).
pub fn lambda_tilde(dim: usize, sigma: f64) -> f64 {
    sigma * 2.0_f64.sqrt() * gamma((dim as f64 + 1.0) / 2.0) / gamma(dim as f64 / 2.0)
}

/// Regularization presets from the denoising recipes: 2 * lambda_tilde for
/// the adversarial regularizer, 5.1 * lambda_tilde^2 for the
/// Hellinger-based one. Config defaults, not tuned claims.
pub fn denoise_lambda_preset(loss: CriticLoss, dim: usize, sigma: f64) -> f64 {
    let lt = lambda_tilde(dim, sigma);
    match loss {
        CriticLoss::Adversarial => 2.0 * lt,
        CriticLoss::Hellinger => 5.1 * lt * lt,
    }
}
