//! Divergence-form elliptic operators on masked lattices: assembly with
//! ellipticity and uniqueness checks, adjoints, very weak Dirichlet solves
//! with measure data, Green and Poisson potentials, torsion and kernel
//! estimates.

mod coeffs;
mod kernels;
mod operator;

use std::sync::Arc;

pub use coeffs::{CoefficientSet, Diffusion, ScalarField};
pub use kernels::{
    ball_green_closed_form, ball_poisson_closed_form, kernel_estimate_report, KernelReport, KernelStudy,
};
pub use operator::{assemble, DiscreteOperator};

use crate::error::Result;
use crate::grid::GridFunction;
use crate::measure::MeasureData;

/// Solve `L u = λ` in Ω, `u = μ` on ∂Ω. The result carries its ghost values.
pub fn solve_very_weak(op: &DiscreteOperator, lambda: &MeasureData, mu: &MeasureData) -> Result<GridFunction> {
    let grid = op.grid();
    let rhs = if lambda.has_interior() {
        lambda.discretize(grid)?.into_values()
    } else {
        vec![0.0; grid.len()]
    };
    let ghost = mu.discretize_boundary(grid);
    let has_ghost = ghost.iter().any(|&v| v != 0.0);
    let (u, _) = op.solve_rhs(&rhs, has_ghost.then_some(ghost.as_slice()))?;
    GridFunction::new(Arc::clone(grid), u)?.with_ghost_values(ghost)
}

/// Solve `L u = f` with a nodal right-hand side and zero boundary data.
pub fn solve_nodal(op: &DiscreteOperator, f: &[f64]) -> Result<Vec<f64>> {
    Ok(op.solve_rhs(f, None)?.0)
}

/// `𝔾(λ)`.
pub fn green_potential(op: &DiscreteOperator, lambda: &MeasureData) -> Result<GridFunction> {
    solve_very_weak(op, lambda, &MeasureData::zero())
}

/// `ℙ(μ)`.
pub fn poisson_potential(op: &DiscreteOperator, mu: &MeasureData) -> Result<GridFunction> {
    solve_very_weak(op, &MeasureData::zero(), mu)
}

/// `η₁` solving `L* η = 1`, `η = 0` on ∂Ω.
pub fn torsion(op: &DiscreteOperator) -> Result<GridFunction> {
    let adj = op.adjoint();
    let ones = vec![1.0; op.grid().len()];
    let (eta, _) = adj.solve_rhs(&ones, None)?;
    GridFunction::new(Arc::clone(op.grid()), eta)
}

/// Outward flux `−∮ a∇u·n dS` across the cube faces of the node box
/// `{x : |x − centre|_∞ ≤ r}`, with ghosts contributing their stored values.
pub fn box_flux(op: &DiscreteOperator, u: &GridFunction, centre: &[f64], r: f64) -> f64 {
    use crate::grid::Neighbor;
    let grid = op.grid();
    let dim = grid.dim();
    let h = grid.h();
    let ghost = u.ghost_values();
    let inside = |x: &[f64; 3]| (0..dim).all(|k| (x[k] - centre[k]).abs() <= r + 1e-12);
    let mut flux = 0.0;
    for i in 0..grid.len() {
        let x = grid.node_position(i);
        if !inside(&x) {
            continue;
        }
        for (s, nb) in grid.neighbors(i).iter().enumerate() {
            let axis = s / 2;
            let step = if s % 2 == 0 { -1.0 } else { 1.0 };
            let mut y = x;
            y[axis] += step * h;
            if inside(&y) {
                continue;
            }
            let uj = match *nb {
                Neighbor::Interior(j) => u.values()[j],
                Neighbor::Ghost(g) => ghost.map_or(0.0, |gv| gv[g]),
            };
            let mut mid = x;
            mid[axis] += step * 0.5 * h;
            let a = op.coeffs().a.component(axis, &mid);
            flux += a * (u.values()[i] - uj) * h.powi(dim as i32 - 2);
        }
    }
    flux
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_masked_grid, CartesianGrid, Shape};
    use crate::measure::{BoundaryDensity, Density};
    use std::f64::consts::PI;

    fn disk(h: f64) -> Arc<CartesianGrid> {
        Arc::new(build_masked_grid(2, Shape::Disk, h).unwrap())
    }

    #[test]
    fn constant_boundary_data_extends_harmonically() {
        let g = disk(1.0 / 32.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let mu = MeasureData::boundary_density(BoundaryDensity::Constant { value: 1.0 });
        let u = poisson_potential(&op, &mu).unwrap();
        assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn green_potential_is_linear_and_positive() {
        let g = disk(1.0 / 32.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let d0 = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 1.0).unwrap();
        let da = MeasureData::dirac(&Shape::Disk, &[0.3, 0.2], 1.0).unwrap();
        let u0 = green_potential(&op, &d0).unwrap();
        let ua = green_potential(&op, &da).unwrap();
        let both = green_potential(&op, &d0.add(&da)).unwrap();
        let twice = green_potential(&op, &d0.scale(2.0)).unwrap();
        for i in 0..g.len() {
            assert!(u0.values()[i] >= 0.0);
            assert!((both.values()[i] - u0.values()[i] - ua.values()[i]).abs() < 1e-8 * (1.0 + both.values()[i]));
            assert!((twice.values()[i] - 2.0 * u0.values()[i]).abs() <= 1e-12 * twice.values()[i].max(1.0));
        }
        assert!(green_potential(&op, &MeasureData::zero()).unwrap().sup_abs() == 0.0);
    }

    #[test]
    fn torsion_matches_closed_forms() {
        let g = disk(1.0 / 64.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let eta = torsion(&op).unwrap();
        let o = g.node_at([0, 0, 0]).unwrap();
        assert!((eta.values()[o] - 0.25).abs() < 0.01);
        assert!(eta.values().iter().all(|&v| v >= 0.0));
        let b = Arc::new(build_masked_grid(3, Shape::Ball, 1.0 / 32.0).unwrap());
        let op = assemble(&b, &CoefficientSet::laplacian()).unwrap();
        let eta = torsion(&op).unwrap();
        let o = b.node_at([0, 0, 0]).unwrap();
        assert!((eta.values()[o] - 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn poisson_potential_of_boundary_atom_at_centre() {
        let mut errs = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let g = disk(h);
            let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
            let mu = MeasureData::boundary_dirac(&Shape::Disk, &[1.0, 0.0], 1.0).unwrap();
            let u = poisson_potential(&op, &mu).unwrap();
            assert!(u.values().iter().all(|&v| v >= 0.0));
            let o = g.node_at([0, 0, 0]).unwrap();
            errs.push((u.values()[o] - 1.0 / (2.0 * PI)).abs() * 2.0 * PI);
        }
        assert!(errs[1] < 0.1, "{errs:?}");
    }

    #[test]
    fn flux_recovers_dirac_mass() {
        let g = disk(1.0 / 64.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let u = green_potential(&op, &MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 1.0).unwrap()).unwrap();
        for r in [0.1, 0.3] {
            let m = box_flux(&op, &u, &[0.0, 0.0], r);
            assert!((m - 1.0).abs() < 1e-8, "{m}");
        }
    }

    #[test]
    fn duality_identity() {
        let g = disk(1.0 / 32.0);
        let c = CoefficientSet::isotropic(ScalarField::Sine { base: 1.0, amp: 0.3, axis: 0, freq: 2.0 }, 0.7)
            .with_drifts(vec![ScalarField::constant(0.4), ScalarField::zero()], vec![]);
        let op = assemble(&g, &c).unwrap();
        let lambda = MeasureData::dirac(&Shape::Disk, &[0.2, -0.1], 1.0)
            .unwrap()
            .add(&MeasureData::density(Density::Constant { value: 0.5 }));
        let u = green_potential(&op, &lambda).unwrap();
        let smooth: Vec<f64> = (0..g.len()).map(|i| 1.0 + g.node_position(i)[0].powi(2)).collect();
        let zeta = op.adjoint().solve_rhs(&smooth, None).unwrap().0;
        let lhs: f64 = u.values().iter().zip(&smooth).map(|(a, b)| a * b).sum::<f64>() * g.cell_volume();
        let rhs_vals = lambda.discretize(&g).unwrap();
        let rhs: f64 = rhs_vals.values().iter().zip(&zeta).map(|(a, b)| a * b).sum::<f64>() * g.cell_volume();
        assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1.0));
    }

    #[test]
    fn nonnegative_data_give_nonnegative_solutions() {
        use rand::{Rng, SeedableRng};
        let g = disk(1.0 / 16.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let f: Vec<f64> = (0..g.len()).map(|_| if rng.gen_bool(0.1) { rng.gen_range(0.0..5.0) } else { 0.0 }).collect();
            let ghost: Vec<f64> = (0..g.ghosts().len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let (u, _) = op.solve_rhs(&f, Some(&ghost)).unwrap();
            assert!(u.iter().all(|&v| v >= -1e-10));
        }
    }
}
