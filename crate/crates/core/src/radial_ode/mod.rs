//! Radial and separable reductions of `−Δu ± |u|^(q−1)u = 0`: explicit
//! singular solutions, adaptive shooting, the interior dichotomy, the reduced
//! energy of the conformal source equation and the spherical-cap eigenproblem
//! behind boundary singularities.

mod cap;
mod dichotomy;
mod energy;
mod ode;
mod profiles;

pub use cap::{boundary_separable_residual, cap_eigenproblem, cap_eigenvalue, CapProfile, SeparableResidual};
pub use dichotomy::{
    classify_interior_singularity, dichotomy_sweep, flux_mass, regular_slope, weak_mass_constant, Classification,
    DichotomyClass, DichotomySweep, SweepEntry,
};
pub use energy::{conformal_exponent, conformal_trajectory, energy_drift, reduced_energy};
pub use ode::{integrate, OdeOptions};
pub use profiles::{
    ell_qn, explicit_residual, gamma_qn, keller_osserman_constant, keller_osserman_residual, log_radii,
    shoot_radial, singular_exponent, OdeKind, RadialProfile,
};
