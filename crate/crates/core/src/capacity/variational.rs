use super::lattice::BoxLattice;
use crate::error::{Error, Result};

const EPS: f64 = 1e-8;
const WINDOW: usize = 50;
const MAX_ITER: usize = 100_000;
const REL_TOL: f64 = 1e-8;

/// One difference operator `D^γ` evaluated at a fixed set of padded positions.
struct Term {
    taps: Vec<(isize, f64)>,
    positions: Vec<usize>,
}

/// Outcome of an iterative minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Minimum {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// `Σ_{|γ|≤m} h^n Σ ρ(D^γφ)` with `ρ(v) = (v² + ε²)^(p/2) − ε^p` on the padded
/// lattice (`M + 2` points per axis, zero outer layer). Pure second derivatives
/// use the centred three-point stencil, first and mixed derivatives forward differences.
pub(crate) struct Energy {
    p: f64,
    vol: f64,
    padded: usize,
    lattice: BoxLattice,
    terms: Vec<Term>,
}

impl Energy {
    pub fn new(lattice: &BoxLattice, order: usize, p: f64) -> Self {
        let (n, m, h) = (lattice.n, lattice.m, lattice.h);
        let side = m + 2;
        let stride: Vec<isize> = (0..n).map(|d| side.pow((n - 1 - d) as u32) as isize).collect();
        // Positions where axis `d` ranges over `lo[d]..=m`, the others over `1..=m`.
        let positions = |low: &[usize]| -> Vec<usize> {
            let mut out = Vec::new();
            let mut idx: Vec<usize> = low.to_vec();
            loop {
                out.push(idx.iter().zip(&stride).map(|(&i, &s)| i * s as usize).sum());
                let mut d = n;
                loop {
                    if d == 0 {
                        return out;
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] <= m {
                        break;
                    }
                    idx[d] = low[d];
                }
            }
        };
        let interior = vec![1usize; n];
        let mut terms = vec![Term { taps: vec![(0, 1.0)], positions: positions(&interior) }];
        for d in 0..n {
            let mut low = interior.clone();
            low[d] = 0;
            terms.push(Term { taps: vec![(stride[d], 1.0 / h), (0, -1.0 / h)], positions: positions(&low) });
        }
        if order >= 2 {
            let h2 = h * h;
            for &s in &stride[..n] {
                terms.push(Term {
                    taps: vec![(-s, 1.0 / h2), (0, -2.0 / h2), (s, 1.0 / h2)],
                    positions: positions(&interior),
                });
            }
            for a in 0..n {
                for b in a + 1..n {
                    let mut low = interior.clone();
                    low[a] = 0;
                    low[b] = 0;
                    terms.push(Term {
                        taps: vec![
                            (stride[a] + stride[b], 1.0 / h2),
                            (stride[a], -1.0 / h2),
                            (stride[b], -1.0 / h2),
                            (0, 1.0 / h2),
                        ],
                        positions: positions(&low),
                    });
                }
            }
        }
        Energy { p, vol: h.powi(n as i32), padded: side.pow(n as u32), lattice: lattice.clone(), terms }
    }

    fn padded_index(&self, idx: &[usize]) -> usize {
        let side = self.lattice.m + 2;
        idx.iter().fold(0, |acc, &i| acc * side + i + 1)
    }

    fn apply_term(t: &Term, phi: &[f64], pos: usize) -> f64 {
        t.taps.iter().map(|&(o, c)| c * phi[(pos as isize + o) as usize]).sum()
    }

    fn rho(&self, v: f64) -> f64 {
        if self.p == 2.0 {
            v * v
        } else {
            (v * v + EPS * EPS).powf(0.5 * self.p) - EPS.powf(self.p)
        }
    }

    fn objective(&self, phi: &[f64]) -> f64 {
        self.vol
            * self
                .terms
                .iter()
                .map(|t| t.positions.iter().map(|&pos| self.rho(Self::apply_term(t, phi, pos))).sum::<f64>())
                .sum::<f64>()
    }

    /// Gradient of the objective, zeroed on fixed nodes.
    fn gradient(&self, phi: &[f64], free: &[bool], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.terms {
            for &pos in &t.positions {
                let v = Self::apply_term(t, phi, pos);
                let w = self.p * (v * v + EPS * EPS).powf(0.5 * self.p - 1.0) * v * self.vol;
                for &(o, c) in &t.taps {
                    out[(pos as isize + o) as usize] += c * w;
                }
            }
        }
        out.iter_mut().zip(free).for_each(|(g, &f)| if !f { *g = 0.0 });
    }

    /// `Σ Dᵀ W D x` with per-term, per-position weights.
    fn weighted_apply(&self, weights: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (t, w) in self.terms.iter().zip(weights) {
            for (&pos, &wp) in t.positions.iter().zip(w) {
                let v = wp * Self::apply_term(t, x, pos);
                for &(o, c) in &t.taps {
                    out[(pos as isize + o) as usize] += c * v;
                }
            }
        }
    }

    fn weighted_diagonal(&self, weights: &[Vec<f64>]) -> Vec<f64> {
        let mut d = vec![0.0; self.padded];
        for (t, w) in self.terms.iter().zip(weights) {
            for (&pos, &wp) in t.positions.iter().zip(w) {
                for &(o, c) in &t.taps {
                    d[(pos as isize + o) as usize] += wp * c * c;
                }
            }
        }
        d
    }

    /// Padded start vector: one on `nodes`, a tent of the distance elsewhere,
    /// plus the free-node mask.
    fn start(&self, nodes: &[Vec<usize>]) -> (Vec<f64>, Vec<bool>) {
        let lat = &self.lattice;
        let mut phi = vec![0.0; self.padded];
        let mut free = vec![false; self.padded];
        let reach = 0.5 * lat.half_width;
        for k in 0..lat.len() {
            let idx = lat.unflat(k);
            let pi = self.padded_index(&idx);
            free[pi] = true;
            let dist = nodes
                .iter()
                .map(|a| a.iter().zip(&idx).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
                * lat.h;
            phi[pi] = (1.0 - dist / reach).max(0.0);
        }
        for a in nodes {
            let pi = self.padded_index(a);
            phi[pi] = 1.0;
            free[pi] = false;
        }
        (phi, free)
    }

    /// Minimize by iteratively reweighted least squares. Each step minimizes the
    /// quadratic majorant `Σ w v²`, `w = (p/2)(v₀² + ε²)^(p/2−1)`, which is exact
    /// for `p = 2` and monotone for `p < 2`.
    pub fn minimize_reweighted(&self, nodes: &[Vec<usize>]) -> Result<Minimum> {
        if self.p > 2.0 {
            return Err(Error::domain("reweighted minimization needs p ≤ 2"));
        }
        let (mut phi, free) = self.start(nodes);
        let mut value = self.objective(&phi);
        let mut ax = vec![0.0; self.padded];
        for it in 1..=MAX_ITER {
            let weights: Vec<Vec<f64>> = self
                .terms
                .iter()
                .map(|t| {
                    t.positions
                        .iter()
                        .map(|&pos| {
                            let v = Self::apply_term(t, &phi, pos);
                            0.5 * self.p * (v * v + EPS * EPS).powf(0.5 * self.p - 1.0)
                        })
                        .collect()
                })
                .collect();
            self.weighted_apply(&weights, &phi, &mut ax);
            let rhs: Vec<f64> = ax.iter().zip(&free).map(|(&a, &f)| if f { -a } else { 0.0 }).collect();
            let diag = self.weighted_diagonal(&weights);
            let step = conjugate_gradient(|x, y| self.weighted_apply(&weights, x, y), &diag, &free, &rhs)?;
            phi.iter_mut().zip(&step).for_each(|(p, s)| *p += s);
            let next = self.objective(&phi);
            let decrease = value - next;
            value = next;
            if self.p == 2.0 || decrease.abs() <= REL_TOL * value.abs() {
                let residual = if value > 0.0 && self.p != 2.0 { decrease.abs() / value } else { 0.0 };
                return Ok(Minimum { value, residual, iterations: it });
            }
        }
        Err(Error::NoConvergence { iterations: MAX_ITER, reason: "reweighted capacity minimization".into() })
    }

    /// Minimize by accelerated projected gradient with backtracking and
    /// function-value restart; stops when the relative objective decrease
    /// over the last 50 steps is at most 1e−8.
    pub fn minimize_accelerated(&self, nodes: &[Vec<usize>]) -> Result<Minimum> {
        let (mut x, free) = self.start(nodes);
        let mut y = x.clone();
        let mut fx = self.objective(&x);
        let mut history = vec![fx];
        let mut lip = 1.0f64;
        let mut t = 1.0f64;
        let mut g = vec![0.0; self.padded];
        let mut trial = vec![0.0; self.padded];
        for it in 1..=MAX_ITER {
            self.gradient(&y, &free, &mut g);
            let fy = self.objective(&y);
            let g2: f64 = g.iter().map(|v| v * v).sum();
            lip *= 0.9;
            let ftrial = loop {
                trial.iter_mut().zip(&y).zip(&g).for_each(|((z, &yi), &gi)| *z = yi - gi / lip);
                let f = self.objective(&trial);
                if f <= fy - 0.5 * g2 / lip || g2 == 0.0 {
                    break f;
                }
                lip *= 2.0;
                if !lip.is_finite() {
                    return Err(Error::NoConvergence { iterations: it, reason: "step size underflow".into() });
                }
            };
            if ftrial > fx {
                t = 1.0;
                y.copy_from_slice(&x);
                history.push(fx);
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let beta = (t - 1.0) / t_next;
                for i in 0..self.padded {
                    let xn = trial[i];
                    y[i] = xn + beta * (xn - x[i]);
                    x[i] = xn;
                }
                t = t_next;
                fx = ftrial;
                history.push(fx);
            }
            if history.len() > WINDOW {
                let old = history[history.len() - 1 - WINDOW];
                let residual = (old - fx) / fx.abs().max(f64::MIN_POSITIVE);
                if residual <= REL_TOL {
                    return Ok(Minimum { value: fx, residual, iterations: it });
                }
            }
        }
        Err(Error::NoConvergence { iterations: MAX_ITER, reason: "accelerated capacity minimization".into() })
    }

    /// Objective of `φ ≡ 1` on every interior node.
    pub fn saturated_value(&self) -> f64 {
        let mut phi = vec![0.0; self.padded];
        for k in 0..self.lattice.len() {
            phi[self.padded_index(&self.lattice.unflat(k))] = 1.0;
        }
        self.objective(&phi)
    }

    #[cfg(test)]
    pub fn minimize_quadratic_reference(&self, nodes: &[Vec<usize>]) -> f64 {
        use nalgebra::{DMatrix, DVector};
        let lat = &self.lattice;
        let ids: Vec<usize> = (0..lat.len()).map(|k| self.padded_index(&lat.unflat(k))).collect();
        let weights: Vec<Vec<f64>> = self.terms.iter().map(|t| vec![1.0; t.positions.len()]).collect();
        let mut a = DMatrix::zeros(ids.len(), ids.len());
        let mut e = vec![0.0; self.padded];
        let mut col = vec![0.0; self.padded];
        for (j, &pj) in ids.iter().enumerate() {
            e[pj] = 1.0;
            self.weighted_apply(&weights, &e, &mut col);
            e[pj] = 0.0;
            for (i, &pi) in ids.iter().enumerate() {
                a[(i, j)] = col[pi] * self.vol;
            }
        }
        let inv = a.try_inverse().unwrap();
        let k: Vec<usize> = nodes.iter().map(|nd| lat.flat(nd)).collect();
        let g = DMatrix::from_fn(k.len(), k.len(), |i, j| inv[(k[i], k[j])]);
        let ones = DVector::from_element(k.len(), 1.0);
        ones.dot(&(g.try_inverse().unwrap() * &ones))
    }
}

/// Jacobi-preconditioned CG on the free nodes of a matrix-free SPD operator.
fn conjugate_gradient(apply: impl Fn(&[f64], &mut [f64]), diag: &[f64], free: &[bool], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).zip(free).filter(|(_, &f)| f).map(|((a, b), _)| a * b).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let precondition = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if free[i] && diag[i] > 0.0 { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = 20 * n + 100;
    for it in 0..cap {
        apply(&p, &mut ap);
        ap.iter_mut().zip(free).for_each(|(v, &f)| if !f { *v = 0.0 });
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver { iterations: it, residual: dot(&r, &r).sqrt() / bnorm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / bnorm;
        if res <= 1e-12 {
            return Ok(x);
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver { iterations: cap, residual: dot(&r, &r).sqrt() / bnorm })
}
