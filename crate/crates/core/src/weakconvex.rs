//! Weak-convexity probing for squared gauges.
//!
//! `||x||_K^2` is rho-weakly convex exactly when the harmonic 2-combination
//! M_{2,rho} = K +h2 (rho/2) B^d is convex, since
//! `||x||_{M_{2,rho}}^2 = ||x||_K^2 + (rho/2) ||x||^2`. Convexity of
//! M_{2,rho} is monotone in rho (the squared gauge gains a convex
//! quadratic), which justifies locating the critical rho* by bisection.

use crate::error::Result;
use crate::starbody::StarBody;

/// Convexity tolerance for the 2-D boundary cross-product test.
///
/// Discrete cross products shrink like h^3 with the angular step h, so a
/// fixed lax floor washes out genuine concavity on fine grids. 1e-13 sits
/// well above float noise in the cross products and keeps the classified
/// transition rho* resolution-stable from n = 1024 through n = 16384.
pub const CONVEXITY_TOL: f64 = 1e-13;

/// Outcome of the rho* search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoStar {
    Found(f64),
    NotFoundBelowCap,
}

/// Weak-convexity probe report.
#[derive(Debug, Clone)]
pub struct WeakConvexityReport {
    /// (rho, is M_{2,rho} convex) pairs in probe order.
    pub rho_probes: Vec<(f64, bool)>,
    pub rho_star: RhoStar,
    pub cap: f64,
    /// Bisection width for rho*.
    pub tol: f64,
    /// Grid resolution the convexity test ran at; near-critical
    /// classification is resolution-dependent.
    pub grid_size: usize,
}

/// M_{2,rho}(K) = K +h2 (rho/2)-diamond B^d: the body whose squared gauge
/// is `||x||_K^2 + (rho/2) ||x||^2`.
pub fn m2(k: &StarBody, rho: f64) -> Result<StarBody> {
    assert!(rho >= 0.0);
    let ball = StarBody::ball(k.grid().clone(), 1.0);
    let m = StarBody::harmonic_combination(k, &ball, 1.0, rho / 2.0, 2.0)?;
    Ok(m.with_label(format!("M2({},{rho})", k.label())))
}

/// Is `||x||_K^2` rho-weakly convex? (d = 2 boundary test on M_{2,rho}.)
pub fn is_weakly_convex(k: &StarBody, rho: f64) -> bool {
    assert_eq!(k.dim(), 2, "the convexity test is 2-D");
    m2(k, rho)
        .expect("rho >= 0 keeps the combination valid")
        .is_convex_2d(CONVEXITY_TOL)
}

/// Smallest rho (within `tol`) making M_{2,rho} convex, by bisection on
/// [0, cap]; `NotFoundBelowCap` when even rho = cap fails.
pub fn rho_star(k: &StarBody, cap: f64, tol: f64) -> RhoStar {
    assert!(cap > 0.0 && tol > 0.0);
    if is_weakly_convex(k, 0.0) {
        return RhoStar::Found(0.0);
    }
    if !is_weakly_convex(k, cap) {
        return RhoStar::NotFoundBelowCap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if is_weakly_convex(k, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    RhoStar::Found(0.5 * (lo + hi))
}

/// Run the probe ladder and the rho* bisection in one report.
pub fn weak_convexity_report(
    k: &StarBody,
    probes: &[f64],
    cap: f64,
    tol: f64,
) -> WeakConvexityReport {
    let rho_probes: Vec<(f64, bool)> = probes
        .iter()
        .map(|&rho| (rho, is_weakly_convex(k, rho)))
        .collect();
    WeakConvexityReport {
        rho_probes,
        rho_star: rho_star(k, cap, tol),
        cap,
        tol,
        grid_size: k.grid().len(),
    }
}

impl WeakConvexityReport {
    /// CSV export: `rho,is_convex` rows followed by a summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,is_convex\n");
        for (rho, c) in &self.rho_probes {
            out.push_str(&format!("{rho},{c}\n"));
        }
        match self.rho_star {
            RhoStar::Found(r) => out.push_str(&format!(
                "# rho_star = {r} (tol {}, cap {}, grid {})\n",
                self.tol, self.cap, self.grid_size
            )),
            RhoStar::NotFoundBelowCap => out.push_str(&format!(
                "# rho_star not found below cap {} (tol {}, grid {})\n",
                self.cap, self.tol, self.grid_size
            )),
        }
        out
    }
}

/// The Gaussian-mixture star body used in the weak-convexity example:
/// P_eps = 1/2 N(0, diag(1, eps)) + 1/2 N(0, diag(eps, 1)), represented by
/// its beta = 1 moment profile on `grid`.
pub fn gaussian_mixture_body(
    grid: &std::sync::Arc<crate::spherequad::SphereGrid>,
    eps: f64,
) -> Result<StarBody> {
    assert!(eps > 0.0 && eps < 1.0);
    let mix = crate::density::Density::mixture(
        vec![0.5, 0.5],
        vec![
            crate::density::Density::gaussian(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, eps]]),
            crate::density::Density::gaussian(vec![0.0, 0.0], vec![vec![eps, 0.0], vec![0.0, 1.0]]),
        ],
    );
    crate::density::moment_profile(&mix, 1.0, grid)?.to_star_body("L_P_eps")
}
