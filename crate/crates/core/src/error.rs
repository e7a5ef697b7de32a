use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported ambient dimension {0} (supported: 2, 3)")]
    UnsupportedDimension(usize),

    #[error("integrand returned a non-finite value at direction index {index}")]
    NonFiniteIntegrand { index: usize },

    #[error("operands live on different sphere grids")]
    GridMismatch,

    #[error(
        "radial profile must be strictly positive and finite (value {value} at index {index})"
    )]
    NonPositiveProfile { index: usize, value: f64 },

    #[error("harmonic combination requires a + b > 0")]
    DegenerateCombination,

    #[error("radial moment integral did not converge (direction index {index})")]
    DivergentMoment { index: usize },

    #[error("density has no pointwise evaluator (empirical samples only)")]
    EmpiricalDensity,

    #[error("pushforward-convolved noise requires a Gaussian base measure")]
    UnsupportedBaseMeasure,

    #[error(
        "containment violated: rho_r^(d+1) - lambda*rho_n^(d+1) = {margin:.6e} at direction index {index}"
    )]
    ContainmentViolated { index: usize, margin: f64 },

    #[error("lambda = {lambda} exceeds the critical value lambda_star = {lambda_star}")]
    LambdaAboveCritical { lambda: f64, lambda_star: f64 },

    #[error("lambda must be strictly positive (got {0})")]
    InvalidLambda(f64),

    #[error("gauge is not 1-Lipschitz: unit ball not contained in the kernel")]
    LipschitzViolated,

    #[error("ERM loss became non-finite at step {step}")]
    DivergedErm { step: usize },

    #[error("training loss became non-finite at step {step}")]
    DivergedTraining { step: usize },

    #[error("denoising objective became non-finite at step {step}")]
    DivergedDenoise { step: usize },

    #[error("input has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("network output {value:.3e} is not positive on the sphere (direction index {index})")]
    PositivityViolated { index: usize, value: f64 },

    #[error("sample lists have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;
