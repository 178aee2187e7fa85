use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::lattice::BoxLattice;
use crate::error::{Error, Result};

/// One-dimensional sine basis of the Dirichlet lattice: orthonormal modes
/// and the eigenvalues of the negative second difference.
struct Axis {
    modes: Vec<Vec<f64>>,
    eig: Vec<f64>,
}

impl Axis {
    fn new(m: usize, h: f64) -> Self {
        let norm = (2.0 / (m as f64 + 1.0)).sqrt();
        let arg = PI / (m as f64 + 1.0);
        let modes = (0..m)
            .map(|k| (0..m).map(|i| norm * (arg * (k + 1) as f64 * (i + 1) as f64).sin()).collect())
            .collect();
        let eig = (0..m).map(|k| 4.0 / (h * h) * (0.5 * arg * (k + 1) as f64).sin().powi(2)).collect();
        Axis { modes, eig }
    }
}

/// Symbol of `Σ_{|γ|≤m} (D^γ)ᵀD^γ` in terms of the per-axis eigenvalues.
fn energy_symbol(order: usize, eig: &[f64]) -> f64 {
    let s1: f64 = eig.iter().sum();
    if order == 1 {
        return 1.0 + s1;
    }
    let s2: f64 = eig.iter().map(|e| e * e).sum();
    1.0 + s1 + s2 + 0.5 * (s1 * s1 - s2)
}

/// `Σ_k w(k) ψ_k(a) ψ_k(b)` for all pairs of `nodes`, summed over every mode of the box.
fn mode_sum(lattice: &BoxLattice, nodes: &[Vec<usize>], weight: impl Fn(&[f64]) -> f64 + Sync) -> DMatrix<f64> {
    let axis = Axis::new(lattice.m, lattice.h);
    let (n, m, k) = (lattice.n, lattice.m, nodes.len());
    let partial = (0..m)
        .into_par_iter()
        .map(|first| {
            let mut acc = vec![0.0; k * k];
            let mut idx = vec![0usize; n];
            idx[0] = first;
            let mut eig = vec![0.0; n];
            let mut amp = vec![0.0; k];
            loop {
                for d in 0..n {
                    eig[d] = axis.eig[idx[d]];
                }
                let w = weight(&eig);
                for (a, node) in nodes.iter().enumerate() {
                    amp[a] = (0..n).map(|d| axis.modes[idx[d]][node[d]]).product();
                }
                for a in 0..k {
                    let wa = w * amp[a];
                    for b in a..k {
                        acc[a * k + b] += wa * amp[b];
                    }
                }
                let mut d = n - 1;
                loop {
                    if d == 0 {
                        return acc;
                    }
                    idx[d] += 1;
                    if idx[d] < m {
                        break;
                    }
                    idx[d] = 0;
                    d -= 1;
                }
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(vec![0.0; k * k], |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        });
    DMatrix::from_fn(k, k, |a, b| if a <= b { partial[a * k + b] } else { partial[b * k + a] })
}

/// Exact minimum of the quadratic Sobolev energy `Σ_{|γ|≤m} ∫ |D^γφ|²` with
/// `φ = 1` on `nodes`, from the Schur complement `((A⁻¹)_KK)⁻¹` of the energy matrix.
pub(crate) fn quadratic_capacity(lattice: &BoxLattice, order: usize, nodes: &[Vec<usize>]) -> Result<f64> {
    if nodes.is_empty() {
        return Ok(0.0);
    }
    let vol = lattice.h.powi(lattice.n as i32);
    let g = mode_sum(lattice, nodes, |eig| 1.0 / (vol * energy_symbol(order, eig)));
    let ones = DVector::from_element(nodes.len(), 1.0);
    let x = g
        .cholesky()
        .ok_or(Error::Solver { iterations: 0, residual: f64::NAN })?
        .solve(&ones);
    Ok(ones.dot(&x))
}

/// Gram matrix `μ ↦ h^(−n) μᵀ(I − Δ_h)^(−m)μ` of point masses at `nodes`.
pub(crate) fn bessel_gram(lattice: &BoxLattice, order: usize, nodes: &[Vec<usize>]) -> DMatrix<f64> {
    let vol = lattice.h.powi(lattice.n as i32);
    mode_sum(lattice, nodes, |eig| (1.0 + eig.iter().sum::<f64>()).powi(-(order as i32)) / vol)
}
