//! Declarative scenario schema (JSON, `schema: 1`, unknown fields
//! rejected) and conversion into core objects.

use std::sync::Arc;

use serde::Deserialize;

use stargeo_core::{Density, RadialShape, SphereGrid, StarBody};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Schema version; must be 1.
    pub schema: u32,
    pub name: String,
    pub dim: usize,
    /// Quadrature grid resolution.
    pub grid: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; overridden by --out.
    #[serde(default)]
    pub out: Option<String>,
    pub task: Task,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// L_r, L_n, L_{r,n} and K* for a density pair. The optional `alpha`
    /// echoes the scaling bookkeeping of the l1/l2 Gibbs example into the
    /// report next to the composed constants.
    AdversarialFigure {
        real: DensitySpec,
        noise: DensitySpec,
        #[serde(default)]
        noise_weight: Option<f64>,
        /// Apply reweight_to_containment with this margin if the raw pair
        /// violates containment.
        #[serde(default)]
        reweight_margin: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
    /// L_r, L_n_tilde and the K_{+,lambda}/K_{-,lambda} pair at the given
    /// fractions of lambda*.
    HellingerFigure {
        real: DensitySpec,
        noise: DensitySpec,
        lambda_fractions: Vec<f64>,
    },
    /// Loss identities and fixed points across a list of alpha values.
    AlphaSweep {
        real: DensitySpec,
        noise: DensitySpec,
        alphas: Vec<f64>,
    },
    /// Rank-deficient measurement of a correlated Gaussian: D_r = N(0, UU'),
    /// D_n = pinv(A)_#(A_# D_r) convolved with N(0, sigma2 I).
    ToyInverse {
        u: Vec<Vec<f64>>,
        a: Vec<Vec<f64>>,
        sigma2: f64,
        #[serde(default)]
        reweight_margin: Option<f64>,
    },
    /// Gaussian-mixture body, M_{2,rho} probes, and the rho* bisection.
    WeakConvexSweep {
        epsilon: f64,
        rhos: Vec<f64>,
        cap: f64,
        tol: f64,
    },
    /// The invariant check battery.
    VerifySuite {
        #[serde(default)]
        quick: bool,
    },
    /// Projected-gradient ERM on sampled data.
    ErmRun {
        real: DensitySpec,
        noise: DensitySpec,
        samples: usize,
        #[serde(default = "default_erm_steps")]
        steps: usize,
        #[serde(default = "default_erm_step_size")]
        step_size: f64,
        #[serde(default = "default_gamma_floor")]
        gamma_floor: f64,
    },
    /// SGD training of a homogeneous network critic.
    TrainRun {
        real: DensitySpec,
        noise: DensitySpec,
        samples: usize,
        loss: CriticLossSpec,
        widths: Vec<usize>,
        #[serde(default = "default_slope")]
        slope: f64,
        #[serde(default = "default_train_steps")]
        steps: usize,
        #[serde(default = "default_lr")]
        lr: f64,
        #[serde(default = "default_batch")]
        batch: usize,
        #[serde(default = "default_gp_weight")]
        gp_weight: f64,
    },
}

fn default_erm_steps() -> usize {
    400
}
fn default_erm_step_size() -> f64 {
    0.05
}
fn default_gamma_floor() -> f64 {
    0.05
}
fn default_slope() -> f64 {
    0.2
}
fn default_train_steps() -> usize {
    2000
}
fn default_lr() -> f64 {
    2e-2
}
fn default_batch() -> usize {
    128
}
fn default_gp_weight() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CriticLossSpec {
    Adversarial,
    Hellinger,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    GaugeGibbs {
        body: BodySpec,
        #[serde(default = "default_q")]
        q: f64,
        shape: ShapeSpec,
    },
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    IsotropicGaussian {
        sigma: f64,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<DensitySpec>,
    },
    PushforwardConvolved {
        a: Vec<Vec<f64>>,
        base: Box<DensitySpec>,
        sigma2: f64,
    },
    UniformBody {
        body: BodySpec,
    },
}

fn default_q() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    Exp,
    Gauss,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        #[serde(default = "default_scale")]
        radius: f64,
    },
    LqBall {
        q: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    LinfBall {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// {x : |A x| <= 1} for row-major A.
    Ellipsoid { a: Vec<Vec<f64>> },
}

fn default_scale() -> f64 {
    1.0
}

impl Scenario {
    pub fn parse(json: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            serde_json::from_str(json).map_err(|e| CliError::Validation(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.schema != 1 {
            return Err(CliError::Validation(format!(
                "unsupported schema version {} (expected 1)",
                self.schema
            )));
        }
        if !(self.dim == 2 || self.dim == 3) {
            return Err(CliError::Validation(format!(
                "dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        if self.grid < 8 {
            return Err(CliError::Validation(format!(
                "grid must be at least 8, got {}",
                self.grid
            )));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Validation(
                "scenario name must be a non-empty path-safe string".into(),
            ));
        }
        Ok(())
    }
}

impl BodySpec {
    pub fn build(&self, grid: &Arc<SphereGrid>) -> StarBody {
        match self {
            BodySpec::Ball { radius } => StarBody::ball(grid.clone(), *radius),
            BodySpec::LqBall { q, scale } => StarBody::lq_ball(grid.clone(), *q, *scale),
            BodySpec::LinfBall { scale } => StarBody::linf_ball(grid.clone(), *scale),
            BodySpec::Ellipsoid { a } => StarBody::ellipsoid(grid.clone(), a.clone()),
        }
    }
}

impl DensitySpec {
    pub fn build(&self, grid: &Arc<SphereGrid>) -> Result<Density, CliError> {
        Ok(match self {
            DensitySpec::GaugeGibbs { body, q, shape } => Density::gauge_gibbs(
                body.build(grid),
                *q,
                match shape {
                    ShapeSpec::Exp => RadialShape::Exp,
                    ShapeSpec::Gauss => RadialShape::Gauss,
                },
            ),
            DensitySpec::Gaussian { mean, cov } => {
                if mean.len() != grid.dim() || cov.len() != grid.dim() {
                    return Err(CliError::Validation(
                        "gaussian mean/cov dimensions must match the scenario dim".into(),
                    ));
                }
                Density::gaussian(mean.clone(), cov.clone())
            }
            DensitySpec::IsotropicGaussian { sigma } => {
                Density::isotropic_gaussian(grid.dim(), *sigma)
            }
            DensitySpec::Mixture {
                weights,
                components,
            } => {
                let comps = components
                    .iter()
                    .map(|c| c.build(grid))
                    .collect::<Result<Vec<_>, _>>()?;
                Density::mixture(weights.clone(), comps)
            }
            DensitySpec::PushforwardConvolved { a, base, sigma2 } => {
                let base = base.build(grid)?;
                Density::pushforward_convolved(a.clone(), &base, *sigma2)
                    .map_err(CliError::Numerical)?
            }
            DensitySpec::UniformBody { body } => Density::uniform_body(body.build(grid)),
        })
    }
}
