//! Star-body machinery for critic-based regularizer learning.
//!
//! Star bodies are compact sets star-shaped about the origin whose boundary
//! meets every ray from the origin exactly once; they correspond one-to-one
//! with positive continuous radial functions on the unit sphere, and their
//! gauges `||x||_K = 1/rho_K(x)` form an expressive family of (generally
//! nonconvex) regularizers. This crate provides:
//!
//! * sphere quadrature grids for d = 2, 3 ([`spherequad`]);
//! * radial profiles, gauges, volumes, dual mixed volumes, harmonic
//!   combinations, and dilate/kernel/convexity predicates ([`starbody`]);
//! * probability densities and the directional moment profiles that turn
//!   distributions into data-dependent star bodies ([`density`]);
//! * the Wasserstein-critic loss, its closed-form optimum, and a
//!   discretized ERM solver ([`adversarial`]);
//! * Hellinger and alpha-divergence losses with their dual-mixed-volume
//!   forms and per-direction fixed points ([`divergence`]);
//! * weak-convexity probing via harmonic 2-combinations ([`weakconvex`]);
//! * positively homogeneous network regularizers, desk-scale critic
//!   training, and a gradient-descent denoiser ([`starnet`]);
//! * exact 1-Wasserstein distance between equal-size samples ([`transport`]).

pub mod adversarial;
pub mod density;
pub mod divergence;
mod error;
pub mod spherequad;
pub mod starbody;
pub mod starnet;
pub mod transport;
pub mod weakconvex;

pub use adversarial::{
    erm_solve, scaling_alpha_star, AdversarialProblem, ErmOptions, ErmSolution, Reweighting,
    W1Check,
};
pub use density::{
    expected_gauge_mc, expected_gauge_power, expected_gauge_quadrature, moment_profile,
    moment_profile_numeric, Density, MomentProfile, RadialShape,
};
pub use divergence::{hellinger_quadratic_roots, AlphaProblem, HellingerProblem};
pub use error::{Error, Result};
pub use spherequad::SphereGrid;
pub use starbody::{max_radius_bound, Interpolation, RadialProfile, StarBody};
pub use starnet::{
    denoise_lambda_preset, lambda_tilde, train, CriticLoss, DenoiseProblem, HomogeneousNet, Layer,
    Penalty, Regularizer, TrainOptions, TrainResult,
};
pub use transport::w1_exact;
pub use weakconvex::{
    gaussian_mixture_body, is_weakly_convex, m2, rho_star, weak_convexity_report, RhoStar,
    WeakConvexityReport,
};
