//! Semilinear absorption problems `Lu + g(u) = λ`, `u = μ` on ∂Ω.
//!
//! The grid solver substitutes `v = u − ℙ(μ)`, clips `g` at increasing levels
//! and runs damped Newton at each level until the clip set is empty. Radial
//! problems use a finite-volume discretization on geometric grids, which is
//! what the relaxation sweeps run on.

mod grid;
mod order;
mod radial;
mod relaxation;

use serde::{Deserialize, Serialize};

pub use grid::{admissibility_integral, recovered_mass, solve_absorption, AbsorptionOptions};
pub use order::{a_priori_excess, comparison_suite, ComparisonPair, ComparisonReport};
pub use radial::{radial_bump, solve_radial, RadialGeometry, RadialOptions, RadialProblem, RadialSolution};
pub use relaxation::{
    keller_osserman_check, radial_relaxation_sweep, relaxation_sweep, KellerOsserman, RadialRelaxation,
    RelaxationReport, RelaxationStage, Schedule,
};

pub use crate::nonlinearity::{is_weakly_singular, subcritical_predicate_2d, Location, Nonlinearity};

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converged,
    Diverged,
    #[default]
    Stalled,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::Diverged => "diverged",
            Verdict::Stalled => "stalled",
        })
    }
}

/// Iteration history and diagnostics of a nonlinear solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Sup norm of the last accepted correction.
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub truncation_levels: Vec<f64>,
    pub verdict: Verdict,
    /// `(probe radius, mass)` pairs.
    pub recovered_masses: Vec<(f64, f64)>,
    /// Sup-norm gap between the lower and upper monotone starts.
    pub bracket_gap: Option<f64>,
}

impl SolveReport {
    pub fn converged_trivially(k: f64) -> Self {
        SolveReport { truncation_levels: vec![k], verdict: Verdict::Converged, ..Default::default() }
    }

    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }
}
