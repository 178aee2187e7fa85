use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::coeffs::{CoefficientSet, ScalarField};
use super::operator::assemble;
use crate::error::{Error, Result};
use crate::grid::{build_masked_grid, sphere_area, Shape};

fn check_ball_point(x: &[f64], n: usize) -> Result<f64> {
    if x.len() != n {
        return Err(Error::domain(format!("point {x:?} does not have {n} coordinates")));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 > 1.0 + 1e-12 {
        return Err(Error::domain(format!("point {x:?} lies outside the unit ball")));
    }
    Ok(r2)
}

/// Green function of `−Δ` in the unit ball by the method of images.
pub fn ball_green_closed_form(x: &[f64], y: &[f64], n: usize) -> Result<f64> {
    if !(n == 2 || n == 3) {
        return Err(Error::domain(format!("closed-form Green function needs n in {{2,3}}, got {n}")));
    }
    let x2 = check_ball_point(x, n)?;
    let y2 = check_ball_point(y, n)?;
    let dxy: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if dxy == 0.0 {
        return Err(Error::domain("Green function is singular on the diagonal"));
    }
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    // |y|·|x − y/|y|²|, written to stay regular at y = 0
    let image = (x2 * y2 - 2.0 * xy + 1.0).max(0.0).sqrt();
    let g = if n == 3 {
        (1.0 / dxy - 1.0 / image) / (4.0 * PI)
    } else {
        (image.ln() - dxy.ln()) / (2.0 * PI)
    };
    Ok(g.max(0.0))
}

/// Poisson kernel of `−Δ` in the unit ball, `(1 − |x|²)/(|S^(n−1)|·|x − y|^n)`.
pub fn ball_poisson_closed_form(x: &[f64], y: &[f64], n: usize) -> Result<f64> {
    let x2 = check_ball_point(x, n)?;
    let dxy: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if dxy == 0.0 {
        return Err(Error::domain("Poisson kernel is singular at its pole"));
    }
    Ok((1.0 - x2) / (sphere_area(n) * dxy.powi(n as i32)))
}

/// Parameters of a kernel-estimate sampling study in the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelStudy {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Spacing of the coarse grid for the grid-kernel equivalence check.
    pub coarse_h: f64,
    /// Isotropic diffusion of the perturbed operator, if any.
    pub perturbation: Option<ScalarField>,
}

/// Extremes of sampled kernel ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub n: usize,
    pub samples: usize,
    /// `sup G·|x−y|^(n−2) / min{1, ρ(x)/|x−y|}` (n ≥ 3).
    pub green_upper_sup: Option<f64>,
    /// Two-sided ratio against `|x−y|^(2−n)·min{1, ρ(x)ρ(y)/|x−y|²}` (log form in 2-D).
    pub green_sharp_sup: f64,
    pub green_sharp_inf: f64,
    /// Two-sided ratio `P(x,y)·|x−y|^n / ρ(x)`.
    pub poisson_sup: f64,
    pub poisson_inf: f64,
    /// `sup G(x,z)G(y,z) / [G(x,y)(|x−z|^(2−n) + |y−z|^(2−n))]`.
    pub three_g_sup: f64,
    /// Range of grid `G_L / G_{−Δ}` over all node pairs of the coarse grid.
    pub equivalence: Option<(f64, f64)>,
}

impl KernelReport {
    /// All sampled suprema finite and lower bounds positive.
    pub fn is_bounded(&self) -> bool {
        let finite = self.green_sharp_sup.is_finite()
            && self.poisson_sup.is_finite()
            && self.three_g_sup.is_finite()
            && self.green_upper_sup.is_none_or(f64::is_finite);
        let positive = self.green_sharp_inf > 0.0 && self.poisson_inf > 0.0;
        let equiv = self.equivalence.is_none_or(|(lo, hi)| lo > 0.0 && hi.is_finite());
        finite && positive && equiv
    }

    /// Equivalence constant `C` with `G_L/G_{−Δ} ∈ [1/C, C]`.
    pub fn equivalence_constant(&self) -> Option<f64> {
        self.equivalence.map(|(lo, hi)| hi.max(1.0 / lo))
    }
}

fn sample_ball(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 < 1.0 && r2 > 0.0 {
            return x;
        }
    }
}

fn sample_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let x = sample_ball(rng, n);
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.into_iter().map(|v| v / r).collect()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn rho(x: &[f64]) -> f64 {
    1.0 - x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sample the Green and Poisson kernel estimates, the 3-G inequality and,
/// optionally, the equivalence of grid kernels for a perturbed diffusion.
pub fn kernel_estimate_report(study: &KernelStudy) -> Result<KernelReport> {
    let n = study.n;
    let mut rng = ChaCha8Rng::seed_from_u64(study.seed);
    let mut upper = f64::NEG_INFINITY;
    let (mut gs_sup, mut gs_inf) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut p_sup, mut p_inf) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut tg = f64::NEG_INFINITY;
    for _ in 0..study.samples {
        let x = sample_ball(&mut rng, n);
        let y = sample_ball(&mut rng, n);
        let z = sample_ball(&mut rng, n);
        let dxy = dist(&x, &y);
        let g = ball_green_closed_form(&x, &y, n)?;
        let (rx, ry) = (rho(&x), rho(&y));
        if n >= 3 {
            upper = upper.max(g * dxy.powi(n as i32 - 2) / (rx / dxy).min(1.0));
            let sharp = dxy.powi(2 - n as i32) * (rx * ry / (dxy * dxy)).min(1.0);
            gs_sup = gs_sup.max(g / sharp);
            gs_inf = gs_inf.min(g / sharp);
        } else {
            let sharp = (1.0 + rx * ry / (dxy * dxy)).ln();
            gs_sup = gs_sup.max(g / sharp);
            gs_inf = gs_inf.min(g / sharp);
        }
        let s = sample_sphere(&mut rng, n);
        let p = ball_poisson_closed_form(&x, &s, n)? * dist(&x, &s).powi(n as i32) / rx;
        p_sup = p_sup.max(p);
        p_inf = p_inf.min(p);
        if n >= 3 {
            let gxz = ball_green_closed_form(&x, &z, n)?;
            let gyz = ball_green_closed_form(&y, &z, n)?;
            let e = 2 - n as i32;
            let ratio = gxz * gyz / (g * (dist(&x, &z).powi(e) + dist(&y, &z).powi(e)));
            if ratio.is_finite() {
                tg = tg.max(ratio);
            }
        }
    }
    let equivalence = match &study.perturbation {
        Some(field) => Some(grid_equivalence(n, study.coarse_h, field)?),
        None => None,
    };
    Ok(KernelReport {
        n,
        samples: study.samples,
        green_upper_sup: (n >= 3).then_some(upper),
        green_sharp_sup: gs_sup,
        green_sharp_inf: gs_inf,
        poisson_sup: p_sup,
        poisson_inf: p_inf,
        three_g_sup: if n >= 3 { tg } else { 0.0 },
        equivalence,
    })
}

fn grid_equivalence(n: usize, h: f64, field: &ScalarField) -> Result<(f64, f64)> {
    let shape = if n == 2 { Shape::Disk } else { Shape::Ball };
    let grid = Arc::new(build_masked_grid(n, shape, h)?);
    let lower = field.lower_bound().unwrap_or(0.0);
    let lap = assemble(&grid, &CoefficientSet::laplacian())?;
    let pert = assemble(&grid, &CoefficientSet::isotropic(field.clone(), lower))?;
    let vol = grid.cell_volume();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut e = vec![0.0; grid.len()];
    for j in 0..grid.len() {
        e[j] = 1.0 / vol;
        let (g0, _) = lap.solve_rhs(&e, None)?;
        let (g1, _) = pert.solve_rhs(&e, None)?;
        e[j] = 0.0;
        for (a, b) in g1.iter().zip(&g0) {
            let r = a / b;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn images_formula_values() {
        let g = ball_green_closed_form(&[0.5, 0.0, 0.0], &[0.0, 0.0, 0.0], 3).unwrap();
        assert!((g - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(ball_green_closed_form(&[0.1, 0.0], &[0.1, 0.0], 2).is_err());
        assert!(ball_green_closed_form(&[1.5, 0.0], &[0.1, 0.0], 2).is_err());
        let edge = ball_green_closed_form(&[1.0 - 1e-9, 0.0, 0.0], &[0.2, 0.1, 0.0], 3).unwrap();
        assert!(edge < 1e-7);
    }

    #[test]
    fn images_formula_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3] {
            for _ in 0..100 {
                let x = sample_ball(&mut rng, n);
                let y = sample_ball(&mut rng, n);
                let a = ball_green_closed_form(&x, &y, n).unwrap();
                let b = ball_green_closed_form(&y, &x, n).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }

    #[test]
    fn poisson_kernel_has_unit_mass() {
        let x = [0.3, -0.2];
        let m = 4000;
        let s: f64 = (0..m)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                ball_poisson_closed_form(&x, &[t.cos(), t.sin()], 2).unwrap()
            })
            .sum::<f64>()
            * 2.0
            * PI
            / m as f64;
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampled_estimates_are_bounded() {
        let rep = kernel_estimate_report(&KernelStudy {
            n: 3,
            samples: 2000,
            seed: 1,
            coarse_h: 0.25,
            perturbation: Some(ScalarField::Sine { base: 1.0, amp: 0.3, axis: 0, freq: 1.0 }),
        })
        .unwrap();
        assert!(rep.is_bounded());
        assert!(rep.three_g_sup < 10.0);
        assert!(rep.equivalence_constant().unwrap() < 5.0);
        let two = kernel_estimate_report(&KernelStudy { n: 2, samples: 500, seed: 2, coarse_h: 0.25, perturbation: None })
            .unwrap();
        assert!(two.is_bounded());
    }
}
