use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::{CartesianGrid, Neighbor};
use crate::linalg::{
    bicgstab, pcg, CsrMatrix, Jacobi, KrylovStats, LinearOptions, Multigrid, Preconditioner, PreconditionerKind,
};

const UNIQUENESS_SAMPLES: usize = 100;
const UNIQUENESS_TOL: f64 = -1e-8;
const UNIQUENESS_SEED: u64 = 0x5eed_0001;

/// Assembled flux-form operator on the interior nodes of a lattice.
#[derive(Clone)]
pub struct DiscreteOperator {
    grid: Arc<CartesianGrid>,
    coeffs: CoefficientSet,
    matrix: CsrMatrix,
    boundary: CsrMatrix,
    symmetric: bool,
    options: LinearOptions,
    pc: OnceLock<Arc<dyn Preconditioner>>,
}

impl fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteOperator")
            .field("unknowns", &self.matrix.nrows())
            .field("nnz", &self.matrix.nnz())
            .field("symmetric", &self.symmetric)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

/// Assemble `L` on the grid, checking ellipticity and the sampled uniqueness form.
pub fn assemble(grid: &Arc<CartesianGrid>, coeffs: &CoefficientSet) -> Result<DiscreteOperator> {
    check_ellipticity(grid, coeffs)?;
    check_uniqueness(grid, coeffs)?;
    Ok(assemble_unchecked(grid, coeffs))
}

pub(crate) fn assemble_unchecked(grid: &Arc<CartesianGrid>, coeffs: &CoefficientSet) -> DiscreteOperator {
    let dim = grid.dim();
    let h = grid.h();
    let h2 = h * h;
    let n = grid.len();
    let mut rows = Vec::with_capacity(n);
    let mut brows = Vec::with_capacity(n);
    for i in 0..n {
        let x = grid.node_position(i);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * dim + 1);
        let mut brow: Vec<(usize, f64)> = Vec::new();
        let push = |nb: Neighbor, v: f64, row: &mut Vec<(usize, f64)>, brow: &mut Vec<(usize, f64)>| match nb {
            Neighbor::Interior(j) => row.push((j, v)),
            Neighbor::Ghost(g) => brow.push((g, v)),
        };
        let mut diag = coeffs.d.eval(&x);
        let nbs = grid.neighbors(i);
        for axis in 0..dim {
            let (minus, plus) = (nbs[2 * axis], nbs[2 * axis + 1]);
            let mut xm = x;
            xm[axis] -= 0.5 * h;
            let mut xp = x;
            xp[axis] += 0.5 * h;
            let am = coeffs.a.component(axis, &xm);
            let ap = coeffs.a.component(axis, &xp);
            diag += (am + ap) / h2;
            push(minus, -am / h2, &mut row, &mut brow);
            push(plus, -ap / h2, &mut row, &mut brow);

            let a_here = coeffs.a.component(axis, &x);
            let b = coeffs.b_at(axis, &x);
            if b != 0.0 {
                if b.abs() * h / a_here > 2.0 {
                    if b > 0.0 {
                        diag += b / h;
                        push(minus, -b / h, &mut row, &mut brow);
                    } else {
                        diag -= b / h;
                        push(plus, b / h, &mut row, &mut brow);
                    }
                } else {
                    push(plus, b / (2.0 * h), &mut row, &mut brow);
                    push(minus, -b / (2.0 * h), &mut row, &mut brow);
                }
            }
            let mut xn = x;
            xn[axis] -= h;
            let mut xq = x;
            xq[axis] += h;
            let cm = coeffs.c_at(axis, &xn);
            let cp = coeffs.c_at(axis, &xq);
            if cm != 0.0 || cp != 0.0 {
                let c_here = coeffs.c_at(axis, &x);
                if c_here.abs() * h / a_here > 2.0 {
                    // upwind flux c·u taken from the donor side
                    if c_here > 0.0 {
                        diag += c_here / h;
                        push(minus, -cm / h, &mut row, &mut brow);
                    } else {
                        diag -= c_here / h;
                        push(plus, cp / h, &mut row, &mut brow);
                    }
                } else {
                    push(plus, -cp / (2.0 * h), &mut row, &mut brow);
                    push(minus, cm / (2.0 * h), &mut row, &mut brow);
                }
            }
        }
        row.push((i, diag));
        rows.push(row);
        brows.push(brow);
    }
    let matrix = CsrMatrix::from_rows(n, rows);
    let boundary = CsrMatrix::from_rows(grid.ghosts().len(), brows);
    let symmetric = !coeffs.has_first_order() || matrix.is_symmetric(1e-13);
    DiscreteOperator {
        grid: Arc::clone(grid),
        coeffs: coeffs.clone(),
        matrix,
        boundary,
        symmetric,
        options: LinearOptions::default(),
        pc: OnceLock::new(),
    }
}

fn check_ellipticity(grid: &CartesianGrid, coeffs: &CoefficientSet) -> Result<()> {
    let alpha = coeffs.ellipticity;
    if !(alpha > 0.0) {
        return Err(Error::Ellipticity { node: 0, min_eig: alpha });
    }
    for i in 0..grid.len() {
        let x = grid.node_position(i);
        let min_eig = (0..grid.dim()).map(|k| coeffs.a.component(k, &x)).fold(f64::INFINITY, f64::min);
        if min_eig < alpha - 1e-12 {
            return Err(Error::Ellipticity { node: i, min_eig });
        }
    }
    Ok(())
}

/// Sampled form `∫ (d v + ½ Σ (b_i + c_i) ∂_i v) dx` over random nonnegative bumps.
fn check_uniqueness(grid: &CartesianGrid, coeffs: &CoefficientSet) -> Result<()> {
    let dim = grid.dim();
    let constant_zero = coeffs.d.is_zero() && !coeffs.has_first_order();
    if constant_zero {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(UNIQUENESS_SEED);
    let inradius = crate::grid::max_level(grid);
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| grid.rho()[i] > 0.3 * inradius).collect();
    for sample in 0..UNIQUENESS_SAMPLES {
        let centre = grid.node_position(interior[rng.gen_range(0..interior.len())]);
        let radius = rng.gen_range(0.1..0.3) * inradius;
        let mut value = 0.0;
        for i in 0..grid.len() {
            let x = grid.node_position(i);
            let mut r2 = 0.0;
            for k in 0..dim {
                r2 += (x[k] - centre[k]).powi(2);
            }
            let s2 = r2 / (radius * radius);
            if s2 >= 1.0 {
                continue;
            }
            let v = (1.0 - s2).powi(2);
            let mut term = coeffs.d.eval(&x) * v;
            for k in 0..dim {
                let dv = -4.0 * (1.0 - s2) * (x[k] - centre[k]) / (radius * radius);
                term += 0.5 * (coeffs.b_at(k, &x) + coeffs.c_at(k, &x)) * dv;
            }
            value += term;
        }
        value *= grid.cell_volume();
        if value < UNIQUENESS_TOL {
            return Err(Error::Uniqueness { sample, value });
        }
    }
    Ok(())
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<CartesianGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Coupling of each interior row to the ghost values.
    pub fn boundary_matrix(&self) -> &CsrMatrix {
        &self.boundary
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn options(&self) -> &LinearOptions {
        &self.options
    }

    pub fn with_options(mut self, options: LinearOptions) -> Self {
        if options.preconditioner != self.options.preconditioner {
            self.pc = OnceLock::new();
        }
        self.options = options;
        self
    }

    /// Discrete transpose, paired with the adjoint coefficient set.
    pub fn adjoint(&self) -> DiscreteOperator {
        let adj = assemble_unchecked(&self.grid, &self.coeffs.adjoint());
        DiscreteOperator {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.adjoint(),
            matrix: self.matrix.transpose(),
            boundary: adj.boundary,
            symmetric: self.symmetric,
            options: self.options,
            pc: OnceLock::new(),
        }
    }

    /// `A u + B g` for interior values `u` and ghost values `g`.
    pub fn apply(&self, u: &[f64], ghost: Option<&[f64]>) -> Vec<f64> {
        let mut y = self.matrix.mul_vec(u);
        if let Some(g) = ghost {
            let bg = self.boundary.mul_vec(g);
            for (yi, v) in y.iter_mut().zip(bg) {
                *yi += v;
            }
        }
        y
    }

    fn preconditioner(&self) -> Arc<dyn Preconditioner> {
        Arc::clone(self.pc.get_or_init(|| build_preconditioner(&self.matrix, &self.grid, self.options.preconditioner)))
    }

    /// Solve `A u = rhs − B g`.
    pub fn solve_rhs(&self, rhs: &[f64], ghost: Option<&[f64]>) -> Result<(Vec<f64>, KrylovStats)> {
        let mut b = rhs.to_vec();
        if let Some(g) = ghost {
            let bg = self.boundary.mul_vec(g);
            for (bi, v) in b.iter_mut().zip(bg) {
                *bi -= v;
            }
        }
        let pc = self.preconditioner();
        let cap = self.options.iteration_cap(b.len());
        if self.symmetric {
            pcg(&self.matrix, &b, None, pc.as_ref(), self.options.tol, cap)
        } else {
            bicgstab(&self.matrix, &b, None, pc.as_ref(), self.options.tol, cap)
        }
    }

    /// Solve `(A + diag(shift)) x = b` with a freshly built preconditioner.
    pub fn solve_shifted(&self, shift: &[f64], b: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, KrylovStats)> {
        let a = self.matrix.add_diagonal(shift);
        let pc = build_preconditioner(&a, &self.grid, self.options.preconditioner);
        let cap = self.options.iteration_cap(b.len());
        if self.symmetric {
            pcg(&a, b, x0, pc.as_ref(), self.options.tol, cap)
        } else {
            bicgstab(&a, b, x0, pc.as_ref(), self.options.tol, cap)
        }
    }
}

fn build_preconditioner(a: &CsrMatrix, grid: &CartesianGrid, kind: PreconditionerKind) -> Arc<dyn Preconditioner> {
    match kind {
        PreconditionerKind::Jacobi => Arc::new(Jacobi::new(a)),
        PreconditionerKind::Multigrid => Arc::new(Multigrid::new(a, grid.coords(), grid.dim())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::coeffs::ScalarField;
    use crate::grid::{build_masked_grid, Shape};

    fn disk(h: f64) -> Arc<CartesianGrid> {
        Arc::new(build_masked_grid(2, Shape::Disk, h).unwrap())
    }

    #[test]
    fn laplacian_rows() {
        let g = disk(1.0 / 16.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let o = g.node_at([0, 0, 0]).unwrap();
        assert_eq!(op.matrix().get(o, o), 4.0 * 256.0);
        assert_eq!(op.matrix().row(o).count(), 5);
        for (j, v) in op.matrix().row(o) {
            if j != o {
                assert_eq!(v, -256.0);
            }
        }
        assert!(op.is_symmetric());
        assert_eq!(op.adjoint().matrix(), op.matrix());
    }

    #[test]
    fn variable_coefficients_assemble() {
        let g = disk(1.0 / 16.0);
        let c = CoefficientSet::isotropic(ScalarField::Sine { base: 1.0, amp: 0.5, axis: 0, freq: 1.0 }, 0.5)
            .with_reaction(ScalarField::constant(1.0));
        assert!(assemble(&g, &c).is_ok());
        let bad = CoefficientSet::isotropic(ScalarField::Sine { base: 1.0, amp: 0.5, axis: 0, freq: 1.0 }, 0.9);
        assert!(matches!(assemble(&g, &bad), Err(Error::Ellipticity { .. })));
    }

    #[test]
    fn negative_reaction_breaks_uniqueness() {
        let g = disk(1.0 / 16.0);
        let c = CoefficientSet::laplacian().with_reaction(ScalarField::constant(-10.0));
        assert!(matches!(assemble(&g, &c), Err(Error::Uniqueness { .. })));
    }

    #[test]
    fn adjoint_is_transpose() {
        let g = disk(1.0 / 16.0);
        let c = CoefficientSet::isotropic(ScalarField::Sine { base: 1.0, amp: 0.3, axis: 1, freq: 2.0 }, 0.7)
            .with_drifts(
                vec![ScalarField::constant(0.5), ScalarField::Sine { base: 0.0, amp: 0.5, axis: 0, freq: 1.0 }],
                vec![ScalarField::zero(), ScalarField::constant(0.5)],
            )
            .with_reaction(ScalarField::constant(2.0));
        let op = assemble(&g, &c).unwrap();
        assert!(!op.is_symmetric());
        let adj = op.adjoint();
        assert_eq!(adj.adjoint().matrix(), op.matrix());
        let fresh = assemble_unchecked(&g, &c.adjoint());
        let x: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let y1 = adj.matrix().mul_vec(&x);
        let y2 = fresh.matrix().mul_vec(&x);
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}
