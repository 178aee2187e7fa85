use std::sync::Arc;

use super::{SolveReport, Verdict};
use crate::error::Result;
use crate::grid::{sphere_area, RadialGrid};
use crate::linalg::solve_tridiagonal;
use crate::nonlinearity::Nonlinearity;

/// Finite-volume discretization of a radial problem on `B_1 ⊂ R^n`.
///
/// Cell `i` spans the faces at the geometric means of neighbouring nodes; cell 0
/// contains the origin. Face conductances are exact for radial harmonic
/// functions, so a point mass at the origin enters as an inner flux.
#[derive(Debug, Clone)]
pub struct RadialGeometry {
    grid: Arc<RadialGrid>,
    volumes: Vec<f64>,
    conductances: Vec<f64>,
    faces: Vec<f64>,
}

impl RadialGeometry {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        let r = grid.nodes();
        let n = grid.dimension();
        let s = sphere_area(n);
        let faces: Vec<f64> = r.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        let ball = |x: f64| s * x.powi(n as i32) / n as f64;
        let len = r.len();
        let mut volumes = Vec::with_capacity(len);
        for i in 0..len {
            let lo = if i == 0 { 0.0 } else { ball(faces[i - 1]) };
            let hi = if i + 1 == len { ball(r[len - 1]) } else { ball(faces[i]) };
            volumes.push(hi - lo);
        }
        let conductances = r
            .windows(2)
            .map(|w| {
                if n == 2 {
                    s / (w[1] / w[0]).ln()
                } else {
                    let e = 2.0 - n as f64;
                    s * (n as f64 - 2.0) / (w[0].powf(e) - w[1].powf(e))
                }
            })
            .collect();
        RadialGeometry { grid, volumes, conductances, faces }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn conductances(&self) -> &[f64] {
        &self.conductances
    }

    /// Face radii `√(r_i r_{i+1})`.
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// Index of the face nearest to radius `r` (in log distance).
    pub fn face_index(&self, r: f64) -> usize {
        let lr = r.ln();
        let mut best = (f64::INFINITY, 0);
        for (i, f) in self.faces.iter().enumerate() {
            let d = (f.ln() - lr).abs();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

/// `−Δu + g_k(u) = f + c δ₀` in `B_1`, `u = b` on the unit sphere.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub geometry: Arc<RadialGeometry>,
    pub nl: Nonlinearity,
    /// Clip level of `g`; `f64::INFINITY` for none.
    pub truncation: f64,
    /// Density per node.
    pub density: Vec<f64>,
    /// Point mass at the origin.
    pub inner_mass: f64,
    pub boundary_value: f64,
}

/// Nodal solution of a radial problem.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub geometry: Arc<RadialGeometry>,
    pub u: Vec<f64>,
    pub report: SolveReport,
}

impl RadialSolution {
    /// Outward flux `−|S| r^(n−1) u'` through face `i`.
    pub fn face_flux(&self, i: usize) -> f64 {
        self.geometry.conductances[i] * (self.u[i] - self.u[i + 1])
    }

    pub fn flux_at(&self, r: f64) -> f64 {
        self.face_flux(self.geometry.face_index(r))
    }

    /// `flux(r_probe) + ∫_{r_core<|x|<r_probe} g(u) dx`.
    pub fn recovered_mass(&self, nl: &Nonlinearity, r_probe: f64, r_core: f64) -> f64 {
        let ip = self.geometry.face_index(r_probe);
        let ic = if r_core > 0.0 { self.geometry.face_index(r_core) + 1 } else { 0 };
        let inner: f64 = (ic..=ip).map(|i| nl.eval(self.u[i]) * self.geometry.volumes[i]).sum();
        self.face_flux(ip) + inner
    }

    /// `∫_{B_1} |u| dx`.
    pub fn l1_norm(&self) -> f64 {
        self.u.iter().zip(&self.geometry.volumes).map(|(u, v)| u.abs() * v).sum()
    }

    pub fn value_at(&self, r: f64) -> f64 {
        let nodes = self.geometry.grid.nodes();
        let k = nodes.partition_point(|&x| x < r).clamp(1, nodes.len() - 1);
        let (a, b) = (nodes[k - 1].ln(), nodes[k].ln());
        let t = ((r.ln() - a) / (b - a)).clamp(0.0, 1.0);
        self.u[k - 1] + t * (self.u[k] - self.u[k - 1])
    }
}

/// Newton iteration for the radial finite-volume system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest line-search step.
    pub min_damping: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        RadialOptions { tol: 1e-10, max_iter: 500, min_damping: 1e-4 }
    }
}

fn residual(p: &RadialProblem, u: &[f64]) -> Vec<f64> {
    let g = &p.geometry;
    let m = u.len() - 1;
    let mut f = vec![0.0; m];
    for i in 0..m {
        f[i] = g.volumes[i] * (p.nl.truncated(u[i], p.truncation) - p.density[i]);
        f[i] += g.conductances[i] * (u[i] - u[i + 1]);
        if i > 0 {
            f[i] -= g.conductances[i - 1] * (u[i - 1] - u[i]);
        }
    }
    f[0] -= p.inner_mass;
    f
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Solve a radial problem by damped Newton, starting from `init` or zero.
pub fn solve_radial(p: &RadialProblem, init: Option<&[f64]>, opts: &RadialOptions) -> Result<RadialSolution> {
    let g = &p.geometry;
    let len = g.grid.len();
    let m = len - 1;
    let mut u = init.map_or_else(|| vec![p.boundary_value; len], <[f64]>::to_vec);
    u[m] = p.boundary_value;
    let mut report = SolveReport { truncation_levels: vec![p.truncation], ..Default::default() };
    let mut f = residual(p, &u);
    let mut verdict = Verdict::Stalled;
    for _ in 0..opts.max_iter {
        report.iterations += 1;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for i in 0..m {
            diag[i] = g.volumes[i] * p.nl.truncated_derivative(u[i], p.truncation).min(1e300) + g.conductances[i];
            if i > 0 {
                diag[i] += g.conductances[i - 1];
                lower[i] = -g.conductances[i - 1];
            }
            if i + 1 < m {
                upper[i] = -g.conductances[i];
            }
        }
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let du = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let n0 = l1(&f);
        let mut omega = 1.0;
        let (trial, tf) = loop {
            let mut trial = u.clone();
            for i in 0..m {
                trial[i] += omega * du[i];
            }
            let tf = residual(p, &trial);
            if l1(&tf) <= n0 || omega <= opts.min_damping {
                break (trial, tf);
            }
            omega *= 0.5;
        };
        u = trial;
        f = tf;
        let step = omega * du.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let usup = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        report.residual = step;
        report.residual_history.push(step);
        if !usup.is_finite() {
            verdict = Verdict::Diverged;
            break;
        }
        if step <= opts.tol * (1.0 + usup) {
            verdict = Verdict::Converged;
            break;
        }
    }
    report.verdict = verdict;
    Ok(RadialSolution { geometry: Arc::clone(&p.geometry), u, report })
}

/// Quartic bump density of total mass `c` and radius `eps`, renormalized on the cells.
pub fn radial_bump(geometry: &RadialGeometry, c: f64, eps: f64) -> Vec<f64> {
    let raw: Vec<f64> = geometry
        .grid
        .nodes()
        .iter()
        .map(|&r| if r < eps { (1.0 - (r / eps).powi(2)).powi(2) } else { 0.0 })
        .collect();
    let m = raw.len() - 1;
    let total: f64 = raw[..m].iter().zip(&geometry.volumes).map(|(a, v)| a * v).sum();
    raw.iter().map(|a| c * a / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_radial_grid, SpacingLaw};
    use std::f64::consts::PI;

    fn geometry(n: usize, r_min: f64, count: usize) -> Arc<RadialGeometry> {
        Arc::new(RadialGeometry::new(Arc::new(
            build_radial_grid(n, r_min, 1.0, count, SpacingLaw::Logarithmic).unwrap(),
        )))
    }

    #[test]
    fn harmonic_dirac_is_exact() {
        let g = geometry(3, 1e-6, 400);
        let p = RadialProblem {
            geometry: Arc::clone(&g),
            nl: Nonlinearity::Power { q: 2.0 },
            truncation: 0.0,
            density: vec![0.0; 400],
            inner_mass: 4.0 * PI,
            boundary_value: 0.0,
        };
        let s = solve_radial(&p, None, &RadialOptions::default()).unwrap();
        for (r, u) in g.grid().nodes().iter().zip(&s.u) {
            assert!((u - (1.0 / r - 1.0)).abs() < 1e-8 * (1.0 + u.abs()));
        }
        assert!((s.flux_at(0.3) - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn weak_singularity_of_power_absorption() {
        let g = geometry(3, 1e-5, 2000);
        let p = RadialProblem {
            geometry: Arc::clone(&g),
            nl: Nonlinearity::Power { q: 2.0 },
            truncation: f64::INFINITY,
            density: vec![0.0; 2000],
            inner_mass: 4.0 * PI,
            boundary_value: 0.0,
        };
        let s = solve_radial(&p, None, &RadialOptions::default()).unwrap();
        assert_eq!(s.report.verdict, Verdict::Converged);
        let ru = 1e-3 * s.value_at(1e-3);
        assert!((ru - 1.0).abs() < 0.02, "{ru}");
        let m = s.recovered_mass(&p.nl, 0.3, 0.0);
        assert!((m - 4.0 * PI).abs() < 1e-6 * 4.0 * PI);
    }

    #[test]
    fn bump_has_requested_mass() {
        let g = geometry(3, 1e-6, 1000);
        let f = radial_bump(&g, 7.0, 0.05);
        let m: f64 = f.iter().zip(g.volumes()).map(|(a, v)| a * v).sum();
        assert!((m - 7.0).abs() < 1e-12);
    }
}
