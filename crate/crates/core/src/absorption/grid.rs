use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{SolveReport, Verdict};
use crate::elliptic::{box_flux, green_potential, poisson_potential, DiscreteOperator};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::measure::MeasureData;
use crate::nonlinearity::Nonlinearity;

const DERIVATIVE_CAP: f64 = 1e12;
const MAX_REFINEMENTS: usize = 40;
const REFINABLE_ITER: usize = 40;

/// Iteration controls for the grid absorption solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionOptions {
    /// Truncation levels tried in order; the last accepted level is reported.
    pub truncation: Vec<f64>,
    /// Relative sup-norm tolerance on the Newton correction.
    pub tol: f64,
    pub max_iter: usize,
    pub min_damping: f64,
    /// Divergence threshold on `sup |u|`.
    pub blow_up: f64,
    pub patience: usize,
    /// Also solve from the lower and upper monotone starts and report their gap.
    pub bracket: bool,
    /// Box half-widths at which to report recovered masses about `probe_centre`.
    pub probe_radii: Vec<f64>,
    pub probe_centre: Vec<f64>,
}

impl Default for AbsorptionOptions {
    fn default() -> Self {
        AbsorptionOptions {
            truncation: vec![1e1, 1e2, 1e4, 1e8, 1e16],
            tol: 1e-9,
            max_iter: 200,
            min_damping: 1.0 / 16.0,
            blow_up: 1e8,
            patience: 20,
            bracket: false,
            probe_radii: Vec::new(),
            probe_centre: vec![0.0; 3],
        }
    }
}

/// Solve `L u + g(u) = λ` in Ω, `u = μ` on ∂Ω.
pub fn solve_absorption(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    lambda: &MeasureData,
    mu: &MeasureData,
    opts: &AbsorptionOptions,
) -> Result<(GridFunction, SolveReport)> {
    let grid = op.grid();
    let n = grid.len();
    let shift = if mu.has_boundary() {
        poisson_potential(op, mu)?
    } else {
        GridFunction::zeros(Arc::clone(grid)).with_ghost_values(vec![0.0; grid.ghosts().len()])?
    };
    let f = if lambda.has_interior() { lambda.discretize(grid)?.into_values() } else { vec![0.0; n] };
    if f.iter().all(|&v| v == 0.0) && shift.values().iter().all(|&v| v == 0.0) {
        let u = shift.clone();
        let report = SolveReport::converged_trivially(opts.truncation.first().copied().unwrap_or(f64::INFINITY));
        return Ok((u, report));
    }
    let m = shift.values().to_vec();

    let start = op.solve_rhs(&f, None)?.0;
    let msup = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let nonnegative = f.iter().all(|&v| v >= 0.0) && m.iter().all(|&v| v >= -1e-12 * msup);
    let (v, mut report) = if nonnegative && nl.is_convex_on_half_line() {
        monotone_newton(op, nl, &f, &m, start, opts)?
    } else {
        newton_schedule(op, nl, &f, &m, start, opts)?
    };

    if opts.bracket && nl.is_monotone() && report.verdict == Verdict::Converged {
        let r0 = nl.sign_radius();
        let pos: Vec<f64> = f.iter().map(|v| v.max(0.0)).collect();
        let neg: Vec<f64> = f.iter().map(|v| (-v).max(0.0)).collect();
        let gp = op.solve_rhs(&pos, None)?.0;
        let gn = op.solve_rhs(&neg, None)?.0;
        let msup = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let upper: Vec<f64> = gp.iter().map(|v| v + r0 + msup).collect();
        let lower: Vec<f64> = gn.iter().map(|v| -v - r0 - msup).collect();
        let (vu, ru) = newton_schedule(op, nl, &f, &m, upper, opts)?;
        let (vl, rl) = newton_schedule(op, nl, &f, &m, lower, opts)?;
        if ru.verdict == Verdict::Converged && rl.verdict == Verdict::Converged {
            let gap = vu.iter().zip(&vl).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            report.bracket_gap = Some(gap);
        }
    }

    let u_vals: Vec<f64> = v.iter().zip(&m).map(|(a, b)| a + b).collect();
    let ghosts = shift.ghost_values().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; grid.ghosts().len()]);
    let u = GridFunction::new(Arc::clone(grid), u_vals)?.with_ghost_values(ghosts)?;
    for &r in &opts.probe_radii {
        report.recovered_masses.push((r, recovered_mass(&u, nl, op, &opts.probe_centre, r)));
    }
    Ok((u, report))
}

fn newton_schedule(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    f: &[f64],
    m: &[f64],
    mut v: Vec<f64>,
    opts: &AbsorptionOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let mut report = SolveReport::default();
    let mut pending: Vec<f64> =
        if opts.truncation.is_empty() { vec![f64::INFINITY] } else { opts.truncation.iter().rev().copied().collect() };
    let last = pending[0];
    let mut accepted: Option<(f64, Vec<f64>)> = None;
    let mut refinements = 0;
    while let Some(k) = pending.pop() {
        report.truncation_levels.push(k);
        let refinable = accepted.is_some() && refinements < MAX_REFINEMENTS;
        let verdict = if refinable {
            let short = AbsorptionOptions { max_iter: opts.max_iter.min(REFINABLE_ITER), ..opts.clone() };
            newton(op, nl, f, m, &mut v, k, &short, &mut report)?
        } else {
            newton(op, nl, f, m, &mut v, k, opts, &mut report)?
        };
        if verdict != Verdict::Converged {
            // back off to a level between the last accepted one and `k`
            if let Some((prev, saved)) = &accepted {
                if refinements < MAX_REFINEMENTS && k.is_finite() && k / prev > 1.5 {
                    refinements += 1;
                    pending.push(k);
                    pending.push((prev * k).sqrt());
                    v.clone_from(saved);
                    continue;
                }
            }
            report.verdict = verdict;
            return Ok((v, report));
        }
        let gmax = v.iter().zip(m).fold(0.0f64, |a, (x, y)| a.max(nl.eval(x + y).abs()));
        if gmax < k || (pending.is_empty() && k == last) {
            report.verdict = if gmax < k { Verdict::Converged } else { Verdict::Stalled };
            return Ok((v, report));
        }
        accepted = Some((k, v.clone()));
    }
    Ok((v, report))
}

/// Undamped Newton from the supersolution `𝔾(f) + ℙ(μ)`; with nonnegative
/// data and `g` convex on the half-line the iterates decrease monotonically.
fn monotone_newton(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    f: &[f64],
    m: &[f64],
    mut v: Vec<f64>,
    opts: &AbsorptionOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let mut report = SolveReport { truncation_levels: vec![f64::INFINITY], ..Default::default() };
    for _ in 0..opts.max_iter {
        report.iterations += 1;
        let res = residual(op, nl, f, m, &v, f64::INFINITY);
        let jac: Vec<f64> = v.iter().zip(m).map(|(vi, mi)| nl.derivative(vi + mi)).collect();
        if jac.iter().any(|j| !j.is_finite()) {
            report.verdict = Verdict::Diverged;
            return Ok((v, report));
        }
        let neg: Vec<f64> = res.iter().map(|r| -r).collect();
        let (delta, _) = op.solve_shifted(&jac, &neg, None)?;
        v.iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
        let step = sup(&delta);
        let usup = v.iter().zip(m).fold(0.0f64, |a, (x, y)| a.max((x + y).abs()));
        report.residual = step;
        report.residual_history.push(step);
        if step <= opts.tol * (1.0 + usup) {
            report.verdict = Verdict::Converged;
            return Ok((v, report));
        }
    }
    report.verdict = Verdict::Stalled;
    Ok((v, report))
}

fn residual(op: &DiscreteOperator, nl: &Nonlinearity, f: &[f64], m: &[f64], v: &[f64], k: f64) -> Vec<f64> {
    let av = op.matrix().mul_vec(v);
    av.iter()
        .zip(v)
        .zip(m)
        .zip(f)
        .map(|(((a, vi), mi), fi)| a + nl.truncated(vi + mi, k) - fi)
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

#[allow(clippy::too_many_arguments)]
fn newton(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    f: &[f64],
    m: &[f64],
    v: &mut Vec<f64>,
    k: f64,
    opts: &AbsorptionOptions,
    report: &mut SolveReport,
) -> Result<Verdict> {
    let mut res = residual(op, nl, f, m, v, k);
    let mut rnorm = sup(&res);
    let mut growth = 0;
    for _ in 0..opts.max_iter {
        report.iterations += 1;
        let jac: Vec<f64> = v
            .iter()
            .zip(m)
            .map(|(vi, mi)| nl.truncated_derivative(vi + mi, k).min(DERIVATIVE_CAP))
            .collect();
        let neg: Vec<f64> = res.iter().map(|r| -r).collect();
        let (delta, _) = op.solve_shifted(&jac, &neg, None)?;
        let mut omega = 1.0;
        let (trial, tres, tnorm) = loop {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, d)| a + omega * d).collect();
            let tres = residual(op, nl, f, m, &trial, k);
            let tnorm = sup(&tres);
            if tnorm <= rnorm || omega <= opts.min_damping {
                break (trial, tres, tnorm);
            }
            omega *= 0.5;
        };
        growth = if tnorm > rnorm { growth + 1 } else { 0 };
        *v = trial;
        res = tres;
        rnorm = tnorm;
        let step = omega * sup(&delta);
        let usup = v.iter().zip(m).fold(0.0f64, |a, (x, y)| a.max((x + y).abs()));
        report.residual = step;
        report.residual_history.push(step);
        if !usup.is_finite() || usup > opts.blow_up || growth >= opts.patience {
            return Ok(Verdict::Diverged);
        }
        if step <= opts.tol * (1.0 + usup) {
            return Ok(Verdict::Converged);
        }
    }
    Ok(Verdict::Stalled)
}

/// Mass `c` with `Lu + g(u) = c δ` recovered on the box of half-width `r`:
/// outward flux plus `∫ g(u)` over the enclosed nodes.
pub fn recovered_mass(u: &GridFunction, nl: &Nonlinearity, op: &DiscreteOperator, centre: &[f64], r: f64) -> f64 {
    let grid = op.grid();
    let dim = grid.dim();
    let c = crate::grid::pad(centre);
    let inside: f64 = (0..grid.len())
        .filter(|&i| {
            let x = grid.node_position(i);
            (0..dim).all(|k| (x[k] - c[k]).abs() <= r + 1e-12)
        })
        .map(|i| nl.eval(u.values()[i]))
        .sum::<f64>()
        * grid.cell_volume();
    box_flux(op, u, centre, r) + inside
}

/// Admissibility integral `∫ g̃(𝔾(|λ|) + k) ρ dx`.
pub fn admissibility_integral(op: &DiscreteOperator, nl: &Nonlinearity, lambda: &MeasureData, k: f64) -> Result<f64> {
    let g = green_potential(op, &lambda.dominating_interior())?;
    let grid = op.grid();
    let s: f64 = g
        .values()
        .iter()
        .zip(grid.rho())
        .map(|(v, r)| nl.envelope(v.abs() + k) * r)
        .sum();
    let total = s * grid.cell_volume();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Diverged { iterations: 0, reason: "admissibility integral overflows".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{assemble, CoefficientSet};
    use crate::grid::{build_masked_grid, CartesianGrid, Shape};
    use crate::measure::{BoundaryDensity, Density};
    use std::f64::consts::PI;

    fn disk(h: f64) -> Arc<CartesianGrid> {
        Arc::new(build_masked_grid(2, Shape::Disk, h).unwrap())
    }

    #[test]
    fn zero_data_zero_solution() {
        let g = disk(1.0 / 16.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        for nl in [Nonlinearity::Power { q: 2.0 }, Nonlinearity::Exp { a: 1.0 }] {
            let (u, rep) =
                solve_absorption(&op, &nl, &MeasureData::zero(), &MeasureData::zero(), &AbsorptionOptions::default())
                    .unwrap();
            assert_eq!(rep.verdict, Verdict::Converged);
            assert_eq!(u.sup_abs(), 0.0);
        }
    }

    #[test]
    fn subcritical_exponential_dirac_keeps_its_mass() {
        let g = disk(1.0 / 64.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let lambda = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 2.0 * PI).unwrap();
        let opts = AbsorptionOptions { probe_radii: vec![0.1, 0.3], ..Default::default() };
        let (_, rep) = solve_absorption(&op, &Nonlinearity::Exp { a: 1.0 }, &lambda, &MeasureData::zero(), &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::Converged);
        for (_, m) in rep.recovered_masses {
            assert!((m - 2.0 * PI).abs() / (2.0 * PI) < 0.05);
        }
    }

    #[test]
    fn boundary_data_and_bracket() {
        let g = disk(1.0 / 32.0);
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let lambda = MeasureData::density(Density::Constant { value: 5.0 });
        let mu = MeasureData::boundary_density(BoundaryDensity::Cosine { mean: 1.0, amplitude: 2.0, mode: 1.0 });
        let opts = AbsorptionOptions { bracket: true, ..Default::default() };
        let (u, rep) = solve_absorption(&op, &Nonlinearity::Power { q: 3.0 }, &lambda, &mu, &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::Converged);
        assert!(rep.bracket_gap.unwrap() < 1e-7);
        let res: Vec<f64> = {
            let au = op.apply(u.values(), u.ghost_values());
            let f = lambda.discretize(&g).unwrap();
            au.iter().zip(u.values()).zip(f.values()).map(|((a, v), fi)| a + v.powi(3) - fi).collect()
        };
        let scale = 1.0 / (g.h() * g.h());
        assert!(res.iter().all(|r| r.abs() < 1e-6 * scale));
    }
}
