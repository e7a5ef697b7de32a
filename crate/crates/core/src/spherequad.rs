//! Quadrature grids and integration over the unit sphere S^{d-1}, d = 2, 3.
//!
//! d = 2 uses equally spaced angles with trapezoid weights (spectrally
//! accurate for periodic integrands); d = 3 uses a Fibonacci lattice with
//! equal weights, adequate for the 1e-3 tolerances used at d = 3.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default grid resolution for d = 2.
pub const DEFAULT_GRID_2D: usize = 2048;
/// Default grid resolution for d = 3.
pub const DEFAULT_GRID_3D: usize = 20000;

/// Quadrature directions and weights on S^{d-1}.
///
/// Invariants (checked in tests): every direction has unit Euclidean norm,
/// weights are strictly positive, and the weights sum to the surface area of
/// the sphere (2*pi for d = 2, 4*pi for d = 3). Grids are immutable after
/// construction and integration uses a fixed summation order, so results are
/// reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    dim: usize,
    /// Flat row-major storage: direction i occupies `[i*dim, (i+1)*dim)`.
    directions: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereGrid {
    /// Build a quadrature grid with `n` nodes on S^{d-1}.
    ///
    /// d = 2: `n` equally spaced angles starting at 0, each with weight
    /// 2*pi/n. d = 3: Fibonacci lattice with equal weights 4*pi/n.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        assert!(n >= 1, "grid must have at least one node");
        match dim {
            2 => {
                let mut directions = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let theta = 2.0 * PI * (i as f64) / (n as f64);
                    directions.push(theta.cos());
                    directions.push(theta.sin());
                }
                let w = 2.0 * PI / (n as f64);
                Ok(Self {
                    dim: 2,
                    directions,
                    weights: vec![w; n],
                })
            }
            3 => {
                // Golden-angle spiral: z descends uniformly with a half-cell
                // offset at the poles.
                let golden_angle = PI * (3.0 - 5.0_f64.sqrt());
                let mut directions = Vec::with_capacity(3 * n);
                for i in 0..n {
                    let z = 1.0 - (2.0 * (i as f64) + 1.0) / (n as f64);
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden_angle * (i as f64);
                    directions.push(r * phi.cos());
                    directions.push(r * phi.sin());
                    directions.push(z);
                }
                let w = 4.0 * PI / (n as f64);
                Ok(Self {
                    dim: 3,
                    directions,
                    weights: vec![w; n],
                })
            }
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    /// Ambient dimension d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of quadrature nodes.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Unit direction at node `i`.
    pub fn direction(&self, i: usize) -> &[f64] {
        &self.directions[i * self.dim..(i + 1) * self.dim]
    }

    /// Quadrature weight at node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn directions(&self) -> impl Iterator<Item = &[f64]> {
        self.directions.chunks_exact(self.dim)
    }

    /// Polar angle of node `i` for d = 2 grids: theta_i = 2*pi*i/n.
    pub fn angle(&self, i: usize) -> f64 {
        debug_assert_eq!(self.dim, 2);
        2.0 * PI * (i as f64) / (self.len() as f64)
    }

    /// Quadrature of `f` over S^{d-1}: sum of w_i * f(u_i) in node order.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.len() {
            let v = f(self.direction(i));
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { index: i });
            }
            acc += self.weights[i] * v;
        }
        Ok(acc)
    }

    /// Weighted sum of per-node values, `values[i]` paired with node `i`.
    ///
    /// Used internally where finiteness of the node values is already
    /// guaranteed by profile validation.
    pub fn weighted_sum(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Total quadrature weight; equals the surface area of S^{d-1}.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Structural grid identity check used by binary star-body operations.
pub(crate) fn same_grid(a: &SphereGrid, b: &SphereGrid) -> bool {
    std::ptr::eq(a, b) || a == b
}
