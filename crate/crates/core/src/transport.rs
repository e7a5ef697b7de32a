//! Exact 1-Wasserstein distance between equal-size empirical samples.
//!
//! For uniform empirical measures of equal size the Kantorovich problem is a
//! minimum-cost perfect matching under Euclidean cost; we solve it exactly
//! with the O(n^3) shortest-augmenting-path Hungarian algorithm (dual
//! potentials).

use crate::error::{Error, Result};
use crate::starbody::norm2;

/// Exact W1 between the uniform empirical measures on `xs` and `ys`:
/// (1/n) times the minimum-cost perfect matching under Euclidean cost.
pub fn w1_exact(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    assert!(n >= 1, "need at least one sample");
    assert!(n <= 2048, "matching solver is sized for n <= 2048");

    let dist = |i: usize, j: usize| -> f64 {
        let diff: Vec<f64> = xs[i].iter().zip(&ys[j]).map(|(a, b)| a - b).collect();
        norm2(&diff)
    };

    // Shortest augmenting paths with dual potentials; 1-indexed with a
    // virtual column 0.
    const INF: f64 = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // row matched to column j
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = dist(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let total: f64 = (1..=n).map(|j| dist(assigned_row[j] - 1, j - 1)).sum();
    Ok(total / n as f64)
}
