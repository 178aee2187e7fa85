use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{solve_absorption, AbsorptionOptions};
use super::radial::{radial_bump, solve_radial, RadialGeometry, RadialOptions, RadialProblem};
use super::Verdict;
use crate::elliptic::{box_flux, DiscreteOperator};
use crate::error::{Error, Result};
use crate::grid::{build_radial_grid, pad, SpacingLaw};
use crate::measure::{BoundaryDensity, MeasureData};
use crate::nonlinearity::Nonlinearity;

/// Approximation parameters of a relaxation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Schedule {
    /// Increasing clip levels of `g`.
    Truncation(Vec<f64>),
    /// Decreasing mollification radii of the atom.
    Mollification(Vec<f64>),
}

impl Schedule {
    pub fn values(&self) -> &[f64] {
        match self {
            Schedule::Truncation(v) | Schedule::Mollification(v) => v,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = self.values();
        if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::config("schedule", "needs at least one positive value"));
        }
        let ordered = match self {
            Schedule::Truncation(v) => v.windows(2).all(|w| w[1] > w[0]),
            Schedule::Mollification(v) => v.windows(2).all(|w| w[1] < w[0]),
        };
        if !ordered {
            return Err(Error::config("schedule", "truncation must increase and mollification must decrease"));
        }
        Ok(())
    }
}

/// Diagnostics of one approximation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationStage {
    pub parameter: f64,
    /// Mass seen outside the clip set or the mollifier support.
    pub mass: f64,
    pub l1_norm: f64,
    pub iterations: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub stages: Vec<RelaxationStage>,
    /// Mass of the last converged stage.
    pub limit: Option<f64>,
}

impl RelaxationReport {
    fn new(stages: Vec<RelaxationStage>) -> Self {
        let limit = stages.iter().rev().find(|s| s.verdict == Verdict::Converged).map(|s| s.mass);
        RelaxationReport { stages, limit }
    }

    /// Whether the stage `L¹` norms decrease strictly.
    pub fn l1_strictly_decreasing(&self) -> bool {
        self.stages.windows(2).all(|w| w[1].l1_norm < w[0].l1_norm)
    }
}

/// Relaxation of the atom `c δ_centre` on a grid operator. Masses are measured
/// on the box of half-width `probe` with the clip set or the mollifier support
/// excluded from the absorption integral.
pub fn relaxation_sweep(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    c: f64,
    centre: &[f64],
    probe: f64,
    schedule: &Schedule,
) -> Result<RelaxationReport> {
    schedule.validate()?;
    let grid = op.grid();
    let atom = MeasureData::dirac(grid.shape(), centre, c)?;
    let stages = schedule
        .values()
        .par_iter()
        .map(|&p| {
            let (lambda, opts) = match schedule {
                Schedule::Truncation(_) => (atom.clone(), AbsorptionOptions { truncation: vec![p], ..Default::default() }),
                Schedule::Mollification(_) => (atom.mollify(p), AbsorptionOptions::default()),
            };
            let (u, rep) = solve_absorption(op, nl, &lambda, &MeasureData::zero(), &opts)?;
            let ctr = pad(centre);
            let core = |x: &[f64; 3], g: f64| match schedule {
                Schedule::Truncation(_) => g.abs() >= p,
                Schedule::Mollification(_) => (0..grid.dim()).all(|k| (x[k] - ctr[k]).abs() <= p),
            };
            let vol = grid.cell_volume();
            let mut absorbed = 0.0;
            for (i, &ui) in u.values().iter().enumerate() {
                let x = grid.node_position(i);
                let g = nl.eval(ui);
                let inside = (0..grid.dim()).all(|k| (x[k] - ctr[k]).abs() <= probe + 1e-12);
                if inside && !core(&x, g) {
                    absorbed += g * vol;
                }
            }
            let l1 = u.values().iter().map(|v| v.abs()).sum::<f64>() * vol;
            Ok(RelaxationStage {
                parameter: p,
                mass: box_flux(op, &u, centre, probe) + absorbed,
                l1_norm: l1,
                iterations: rep.iterations,
                verdict: rep.verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RelaxationReport::new(stages))
}

/// Radial relaxation of `c δ₀` in the unit ball of `R^n` with zero boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialRelaxation {
    pub n: usize,
    pub nl: Nonlinearity,
    pub mass: f64,
    pub schedule: Schedule,
    pub cells: usize,
    pub r_min: f64,
    /// Radius at which the flux is read.
    pub probe: f64,
    /// Radius of the clip core for truncation stages.
    pub core: f64,
}

/// Run a radial relaxation sweep. Truncation stages are solved in sequence,
/// each warm-started from the previous one; mollification stages are independent.
pub fn radial_relaxation_sweep(cfg: &RadialRelaxation) -> Result<RelaxationReport> {
    cfg.schedule.validate()?;
    cfg.nl.validate()?;
    let grid = build_radial_grid(cfg.n, cfg.r_min, 1.0, cfg.cells, SpacingLaw::Logarithmic)?;
    let geometry = Arc::new(RadialGeometry::new(Arc::new(grid)));
    let opts = RadialOptions::default();
    let stage = |p: f64, sol: &super::RadialSolution| RelaxationStage {
        parameter: p,
        mass: 0.0,
        l1_norm: sol.l1_norm(),
        iterations: sol.report.iterations,
        verdict: sol.report.verdict,
    };
    let stages = match &cfg.schedule {
        Schedule::Truncation(levels) => {
            let mut prev: Option<Vec<f64>> = None;
            let mut out = Vec::with_capacity(levels.len());
            for &k in levels {
                let problem = RadialProblem {
                    geometry: Arc::clone(&geometry),
                    nl: cfg.nl.clone(),
                    truncation: k,
                    density: vec![0.0; geometry.grid().len()],
                    inner_mass: cfg.mass,
                    boundary_value: 0.0,
                };
                let sol = solve_radial(&problem, prev.as_deref(), &opts)?;
                let mut s = stage(k, &sol);
                s.mass = sol.recovered_mass(&cfg.nl, cfg.probe, cfg.core);
                prev = Some(sol.u);
                out.push(s);
            }
            out
        }
        Schedule::Mollification(widths) => widths
            .par_iter()
            .map(|&eps| {
                let problem = RadialProblem {
                    geometry: Arc::clone(&geometry),
                    nl: cfg.nl.clone(),
                    truncation: f64::INFINITY,
                    density: radial_bump(&geometry, cfg.mass, eps),
                    inner_mass: 0.0,
                    boundary_value: 0.0,
                };
                let sol = solve_radial(&problem, None, &opts)?;
                let mut s = stage(eps, &sol);
                s.mass = sol.recovered_mass(&cfg.nl, cfg.probe.max(eps), eps);
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(RelaxationReport::new(stages))
}

/// `sup u·ρ^(2/(q−1))` over nodes with `ρ ≥ 5h` for the power absorption
/// problem with constant boundary data, one entry per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KellerOsserman {
    pub q: f64,
    pub levels: Vec<f64>,
    pub scaled_sup: Vec<f64>,
}

impl KellerOsserman {
    /// Spread `max/min` of the scaled suprema across levels.
    pub fn spread(&self) -> f64 {
        let hi = self.scaled_sup.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.scaled_sup.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

pub fn keller_osserman_check(op: &DiscreteOperator, q: f64, levels: &[f64]) -> Result<KellerOsserman> {
    if !(q > 1.0) {
        return Err(Error::domain(format!("Keller–Osserman bound needs q > 1, got {q}")));
    }
    let nl = Nonlinearity::Power { q };
    let grid = op.grid();
    let floor = 5.0 * grid.h();
    let alpha = 2.0 / (q - 1.0);
    let mut scaled_sup = Vec::with_capacity(levels.len());
    for &m in levels {
        let mu = MeasureData::boundary_density(BoundaryDensity::Constant { value: m });
        let opts = AbsorptionOptions { truncation: vec![f64::INFINITY], ..Default::default() };
        let (u, rep) = solve_absorption(op, &nl, &MeasureData::zero(), &mu, &opts)?;
        if rep.verdict != Verdict::Converged {
            return Err(Error::NoConvergence { iterations: rep.iterations, reason: format!("boundary level {m}") });
        }
        let s = u
            .values()
            .iter()
            .zip(grid.rho())
            .filter(|(_, &r)| r >= floor)
            .fold(0.0f64, |a, (v, r)| a.max(v * r.powf(alpha)));
        scaled_sup.push(s);
    }
    Ok(KellerOsserman { q, levels: levels.to_vec(), scaled_sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{assemble, CoefficientSet};
    use crate::grid::{build_masked_grid, Shape};
    use std::f64::consts::PI;

    #[test]
    fn schedules_must_be_ordered() {
        assert!(Schedule::Truncation(vec![10.0, 5.0]).validate().is_err());
        assert!(Schedule::Mollification(vec![0.1, 0.2]).validate().is_err());
        assert!(Schedule::Mollification(vec![]).validate().is_err());
        assert!(Schedule::Mollification(vec![0.2, 0.1]).validate().is_ok());
    }

    #[test]
    fn subcritical_exponential_atom_keeps_its_mass() {
        let cfg = RadialRelaxation {
            n: 2,
            nl: Nonlinearity::Exp { a: 1.0 },
            mass: 2.0 * PI,
            schedule: Schedule::Truncation([10.0f64, 20.0, 40.0].iter().map(|k| k.exp_m1()).collect()),
            cells: 3000,
            r_min: 1e-40,
            probe: 1e-10,
            core: 1e-20,
        };
        let rep = radial_relaxation_sweep(&cfg).unwrap();
        let m = rep.limit.unwrap();
        assert!((m / (2.0 * PI) - 1.0).abs() < 0.05, "{rep:?}");
    }

    #[test]
    fn mollified_power_sweep_is_independent_of_order() {
        let cfg = RadialRelaxation {
            n: 3,
            nl: Nonlinearity::Power { q: 2.0 },
            mass: 10.0,
            schedule: Schedule::Mollification(vec![0.2, 0.1]),
            cells: 800,
            r_min: 1e-5,
            probe: 0.5,
            core: 0.0,
        };
        let a = radial_relaxation_sweep(&cfg).unwrap();
        let b = radial_relaxation_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.stages.iter().all(|s| s.verdict == Verdict::Converged));
    }

    #[test]
    fn keller_osserman_scaling_is_uniform_in_the_boundary_level() {
        let g = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 32.0).unwrap());
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let ko = keller_osserman_check(&op, 3.0, &[1e2, 1e3, 1e4]).unwrap();
        assert!(ko.spread() < 1.5, "{ko:?}");
        assert!(ko.scaled_sup.iter().all(|s| *s < 4.0), "{ko:?}");
    }
}
