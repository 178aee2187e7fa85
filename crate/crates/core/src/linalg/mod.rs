//! Sparse linear algebra: CSR storage, Krylov solvers, a lattice multigrid
//! preconditioner and a tridiagonal solver for radial problems.

mod csr;
mod krylov;
mod multigrid;

use serde::{Deserialize, Serialize};

pub use csr::CsrMatrix;
pub use krylov::{bicgstab, pcg, Identity, Jacobi, KrylovStats, Preconditioner};
pub use multigrid::Multigrid;


use crate::error::{Error, Result};

/// Preconditioner family for grid solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    Jacobi,
    #[default]
    Multigrid,
}

/// Stopping rule for linear solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap; `None` means `50·√N`.
    pub max_iter: Option<usize>,
    pub preconditioner: PreconditionerKind,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions { tol: 1e-10, max_iter: None, preconditioner: PreconditionerKind::Multigrid }
    }
}

impl LinearOptions {
    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| ((50.0 * (n as f64).sqrt()).ceil() as usize).max(50))
    }
}

/// Solve the tridiagonal system `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Solver { iterations: 0, residual: f64::INFINITY });
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Solver { iterations: i, residual: f64::INFINITY });
        }
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_product() {
        let n = 50;
        let lower: Vec<f64> = (0..n).map(|i| -1.0 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -1.0 + 0.005 * i as f64).collect();
        let diag = vec![3.0; n];
        let xs: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = diag[i] * xs[i];
                if i > 0 {
                    s += lower[i] * xs[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * xs[i + 1];
                }
                s
            })
            .collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn default_cap() {
        let o = LinearOptions::default();
        assert_eq!(o.iteration_cap(10_000), 5000);
    }
}
