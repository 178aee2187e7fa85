use nalgebra::{DMatrix, DVector};

use super::csr::CsrMatrix;
use super::krylov::Preconditioner;
use crate::grid::Coord;

const COARSEST: usize = 400;
const MAX_LEVELS: usize = 12;

struct Level {
    a: CsrMatrix,
    diag: Vec<f64>,
    /// Prolongation from the next coarser level.
    p: Option<CsrMatrix>,
    r: Option<CsrMatrix>,
}

/// Geometric multigrid V-cycle on a masked lattice with Galerkin coarse operators.
pub struct Multigrid {
    levels: Vec<Level>,
    coarse: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Multigrid {
    /// Build the hierarchy from the fine operator and lattice coordinates of its unknowns.
    pub fn new(a: &CsrMatrix, coords: &[Coord], dim: usize) -> Self {
        let mut levels = Vec::new();
        let mut a_cur = a.clone();
        let mut c_cur: Vec<Coord> = coords.to_vec();
        while a_cur.nrows() > COARSEST && levels.len() < MAX_LEVELS {
            let Some((p, c_next)) = prolongation(&c_cur, dim) else { break };
            if c_next.len() * 10 > c_cur.len() * 9 {
                break;
            }
            let r = p.transpose();
            let a_next = r.mul(&a_cur).mul(&p);
            let diag = a_cur.diagonal();
            levels.push(Level { a: a_cur, diag, p: Some(p), r: Some(r) });
            a_cur = a_next;
            c_cur = c_next;
        }
        let n = a_cur.nrows();
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in a_cur.row(i) {
                dense[(i, j)] += v;
            }
        }
        let diag = a_cur.diagonal();
        levels.push(Level { a: a_cur, diag, p: None, r: None });
        Multigrid { levels, coarse: dense.lu() }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn cycle(&self, lvl: usize, b: &[f64], x: &mut [f64]) {
        let level = &self.levels[lvl];
        if lvl + 1 == self.levels.len() {
            let sol = self
                .coarse
                .solve(&DVector::from_column_slice(b))
                .unwrap_or_else(|| DVector::from_column_slice(b));
            x.copy_from_slice(sol.as_slice());
            return;
        }
        gauss_seidel(&level.a, &level.diag, b, x, false);
        let ax = level.a.mul_vec(x);
        let res: Vec<f64> = b.iter().zip(&ax).map(|(bi, v)| bi - v).collect();
        let r = level.r.as_ref().unwrap();
        let rc = r.mul_vec(&res);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(lvl + 1, &rc, &mut ec);
        let e = level.p.as_ref().unwrap().mul_vec(&ec);
        for (xi, ei) in x.iter_mut().zip(e) {
            *xi += ei;
        }
        gauss_seidel(&level.a, &level.diag, b, x, true);
    }
}

impl Preconditioner for Multigrid {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        self.cycle(0, r, z);
    }
}

fn gauss_seidel(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let n = a.nrows();
    let mut sweep = |i: usize| {
        let mut s = b[i];
        for (j, v) in a.row(i) {
            if j != i {
                s -= v * x[j];
            }
        }
        if diag[i] != 0.0 {
            x[i] = s / diag[i];
        }
    };
    if backward {
        (0..n).rev().for_each(&mut sweep);
    } else {
        (0..n).for_each(&mut sweep);
    }
}

/// Linear interpolation from even-coordinate nodes; absent parents count as zero.
fn prolongation(coords: &[Coord], dim: usize) -> Option<(CsrMatrix, Vec<Coord>)> {
    use std::collections::HashMap;
    let mut coarse: HashMap<Coord, usize> = HashMap::new();
    let mut c_next = Vec::new();
    for c in coords {
        if c[..dim].iter().all(|v| v.rem_euclid(2) == 0) {
            let mut cc = [0i64; 3];
            for k in 0..dim {
                cc[k] = c[k].div_euclid(2);
            }
            coarse.insert(cc, c_next.len());
            c_next.push(cc);
        }
    }
    if c_next.is_empty() {
        return None;
    }
    let rows = coords
        .iter()
        .map(|c| {
            let odd: Vec<usize> = (0..dim).filter(|&k| c[k].rem_euclid(2) == 1).collect();
            let w = 0.5f64.powi(odd.len() as i32);
            let mut row = Vec::with_capacity(1 << odd.len());
            for mask in 0..(1usize << odd.len()) {
                let mut cc = [0i64; 3];
                for k in 0..dim {
                    cc[k] = c[k].div_euclid(2);
                }
                for (bit, &k) in odd.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        cc[k] += 1;
                    }
                }
                if let Some(&j) = coarse.get(&cc) {
                    row.push((j, w));
                }
            }
            row
        })
        .collect();
    Some((CsrMatrix::from_rows(c_next.len(), rows), c_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::krylov::{pcg, Jacobi};

    fn square_laplacian(m: i64) -> (CsrMatrix, Vec<Coord>) {
        let mut coords = Vec::new();
        for j in 1..m {
            for i in 1..m {
                coords.push([i, j, 0]);
            }
        }
        let idx = |i: i64, j: i64| ((j - 1) * (m - 1) + (i - 1)) as usize;
        let rows = coords
            .iter()
            .map(|c| {
                let mut r = vec![(idx(c[0], c[1]), 4.0)];
                for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    let (i, j) = (c[0] + di, c[1] + dj);
                    if i > 0 && i < m && j > 0 && j < m {
                        r.push((idx(i, j), -1.0));
                    }
                }
                r
            })
            .collect();
        (CsrMatrix::from_rows(coords.len(), rows), coords)
    }

    #[test]
    fn multigrid_beats_jacobi() {
        let (a, coords) = square_laplacian(128);
        let mg = Multigrid::new(&a, &coords, 2);
        assert!(mg.depth() >= 3);
        let b = vec![1.0; a.nrows()];
        let (x1, s1) = pcg(&a, &b, None, &mg, 1e-10, 1000).unwrap();
        let (x2, s2) = pcg(&a, &b, None, &Jacobi::new(&a), 1e-10, 5000).unwrap();
        assert!(s1.iterations * 5 < s2.iterations, "{} vs {}", s1.iterations, s2.iterations);
        let diff = x1.iter().zip(&x2).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        assert!(diff < 1e-6 * x1.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
}
