//! Order properties of the grid solver: the comparison principle on random
//! ordered data pairs and the a-priori bound `|u| ≤ 𝔾(|λ|) + r₀ + sup|ℙ(μ)|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{solve_absorption, AbsorptionOptions};
use crate::elliptic::{green_potential, poisson_potential, DiscreteOperator};
use crate::error::Result;
use crate::grid::GridFunction;
use crate::measure::{BoundaryDensity, Density, MeasureData};
use crate::nonlinearity::Nonlinearity;

/// Largest `|u| − (𝔾(|λ|) + r₀ + sup|ℙ(μ)|)` over the nodes; nonpositive when the bound holds.
pub fn a_priori_excess(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    lambda: &MeasureData,
    mu: &MeasureData,
    u: &GridFunction,
) -> Result<f64> {
    let g = if lambda.has_interior() {
        green_potential(op, &lambda.dominating_interior())?.into_values()
    } else {
        vec![0.0; u.len()]
    };
    let msup = if mu.has_boundary() { poisson_potential(op, &mu.boundary())?.sup_abs() } else { 0.0 };
    let r0 = nl.sign_radius();
    Ok(u.values().iter().zip(&g).map(|(v, b)| v.abs() - (b + r0 + msup)).fold(f64::NEG_INFINITY, f64::max))
}

/// One ordered pair `(λ₁, μ₁) ≤ (λ₂, μ₂)` and its solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub nonlinearity: Nonlinearity,
    pub lower: MeasureData,
    pub upper: MeasureData,
    /// `max(u₁ − u₂)` over the nodes.
    pub violation: f64,
    pub violating_nodes: usize,
    /// Larger a-priori excess of the two solutions.
    pub bound_excess: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: Vec<ComparisonPair>,
}

impl ComparisonReport {
    pub fn max_violation(&self) -> f64 {
        self.pairs.iter().map(|p| p.violation).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn violating_nodes(&self) -> usize {
        self.pairs.iter().map(|p| p.violating_nodes).sum()
    }

    pub fn max_bound_excess(&self) -> f64 {
        self.pairs.iter().map(|p| p.bound_excess).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn unconverged(&self) -> usize {
        self.pairs.iter().filter(|p| !p.converged).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair,nonlinearity,violation,violating_nodes,bound_excess,converged\n");
        for (i, p) in self.pairs.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{:.16e},{},{:.16e},{}\n",
                p.nonlinearity, p.violation, p.violating_nodes, p.bound_excess, p.converged
            ));
        }
        out
    }
}

const FAMILY: [Nonlinearity; 4] = [
    Nonlinearity::Power { q: 2.0 },
    Nonlinearity::Power { q: 3.5 },
    Nonlinearity::Exp { a: 1.0 },
    Nonlinearity::ExpOdd { a: 1.0 },
];

fn random_bump(rng: &mut ChaCha8Rng, dim: usize, mass: f64) -> Density {
    let radius = rng.gen_range(0.0..0.6);
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    dir.iter_mut().for_each(|v| *v *= radius / norm);
    Density::Bump { center: dir, eps: rng.gen_range(0.15..0.4), mass }
}

/// Random ordered data pair: signed interior bumps and cosine boundary data,
/// raised by a nonnegative bump and a nonnegative constant (each absent with
/// probability 1/4).
fn random_pair(rng: &mut ChaCha8Rng, dim: usize) -> (MeasureData, MeasureData) {
    let mut lower = MeasureData::zero();
    for _ in 0..2 {
        let mass = rng.gen_range(-3.0..3.0);
        lower.densities.push(random_bump(rng, dim, mass));
    }
    lower.boundary_densities.push(BoundaryDensity::Cosine {
        mean: rng.gen_range(-1.0..1.0),
        amplitude: rng.gen_range(0.0..1.0),
        mode: rng.gen_range(1..=3) as f64,
    });
    let mut upper = lower.clone();
    if rng.gen_bool(0.75) {
        let mass = rng.gen_range(0.0..3.0);
        upper.densities.push(random_bump(rng, dim, mass));
    }
    if rng.gen_bool(0.75) {
        upper.boundary_densities.push(BoundaryDensity::Constant { value: rng.gen_range(0.0..1.0) });
    }
    (lower, upper)
}

/// Solve `count` random ordered pairs, cycling through power (q = 2, 3.5),
/// exponential and odd exponential absorption.
pub fn comparison_suite(op: &DiscreteOperator, count: usize, seed: u64) -> Result<ComparisonReport> {
    let dim = op.grid().dim();
    let opts = AbsorptionOptions::default();
    let pairs = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let nl = FAMILY[i % FAMILY.len()].clone();
            let (lower, upper) = random_pair(&mut rng, dim);
            let solve = |m: &MeasureData| solve_absorption(op, &nl, &m.interior(), &m.boundary(), &opts);
            let (u1, r1) = solve(&lower)?;
            let (u2, r2) = solve(&upper)?;
            let diff: Vec<f64> = u1.values().iter().zip(u2.values()).map(|(a, b)| a - b).collect();
            let bound_excess = a_priori_excess(op, &nl, &lower.interior(), &lower.boundary(), &u1)?
                .max(a_priori_excess(op, &nl, &upper.interior(), &upper.boundary(), &u2)?);
            Ok(ComparisonPair {
                violation: diff.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                violating_nodes: diff.iter().filter(|&&d| d > 0.0).count(),
                bound_excess,
                converged: r1.converged() && r2.converged(),
                nonlinearity: nl,
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport { pairs })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::elliptic::{assemble, CoefficientSet};
    use crate::grid::{build_masked_grid, Shape};

    #[test]
    fn random_ordered_pairs_keep_their_order() {
        let g = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 16.0).unwrap());
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let rep = comparison_suite(&op, 24, 11).unwrap();
        assert_eq!(rep.unconverged(), 0);
        assert!(rep.max_violation() <= 1e-10, "{}", rep.max_violation());
        assert!(rep.max_bound_excess() <= 1e-10, "{}", rep.max_bound_excess());
        let again = comparison_suite(&op, 24, 11).unwrap();
        assert_eq!(rep.to_csv(), again.to_csv());
    }
}
