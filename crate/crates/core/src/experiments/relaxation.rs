use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{require, strictly_decreasing, Check, Context, Experiment, Outcome, Table};
use crate::absorption::{radial_relaxation_sweep, RadialRelaxation, RelaxationReport, Schedule, Verdict};
use crate::error::Result;
use crate::nonlinearity::Nonlinearity;

fn stage_table(name: &str, rows: &[(f64, &RelaxationReport)]) -> Table {
    let mut t = Table::new(name, &["mass", "stage", "parameter", "recovered_mass", "l1_norm", "iterations", "verdict"]);
    for (c, rep) in rows {
        for (i, s) in rep.stages.iter().enumerate() {
            t.push(vec![
                (*c).into(),
                i.into(),
                s.parameter.into(),
                s.mass.into(),
                s.l1_norm.into(),
                s.iterations.into(),
                s.verdict.to_string().into(),
            ]);
        }
    }
    t
}

pub(super) struct Relaxation2d;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct Relaxation2dParams {
    /// Rate of `g(u) = e^(a u) − 1`.
    a: f64,
    masses: Vec<f64>,
    /// Truncation levels are `e^s − 1` for each `s`.
    truncation_exponents: Vec<f64>,
    cells: usize,
    r_min: f64,
    probe: f64,
    core: f64,
    tol: f64,
}

impl Default for Relaxation2dParams {
    fn default() -> Self {
        Relaxation2dParams {
            a: 1.0,
            masses: vec![2.0 * PI, 8.0 * PI],
            truncation_exponents: vec![10.0, 20.0, 40.0, 80.0, 160.0, 320.0],
            cells: 3000,
            r_min: 1e-40,
            probe: 1e-10,
            core: 1e-20,
            tol: 0.05,
        }
    }
}

impl Experiment for Relaxation2d {
    type Params = Relaxation2dParams;

    fn check(p: &Relaxation2dParams) -> Result<()> {
        require(p.a > 0.0, "a", "must be positive")?;
        require(!p.masses.is_empty() && p.masses.iter().all(|c| *c > 0.0), "masses", "must be positive")?;
        require(
            p.truncation_exponents.windows(2).all(|w| w[1] > w[0]) && p.truncation_exponents.first().is_some_and(|s| *s > 0.0),
            "truncation_exponents",
            "must be positive and increasing",
        )?;
        require(p.r_min > 0.0 && p.core >= p.r_min && p.probe > p.core && p.probe < 1.0, "probe", "needs r_min <= core < probe < 1")?;
        require(p.cells >= 10, "cells", "must be at least 10")
    }

    fn run(_ctx: &Context, p: &Relaxation2dParams) -> Result<Outcome> {
        let levels: Vec<f64> = p.truncation_exponents.iter().map(|s| s.exp_m1()).collect();
        let critical = 4.0 * PI / p.a;
        let mut out = Outcome::default();
        let mut reports = Vec::with_capacity(p.masses.len());
        for &c in &p.masses {
            let rep = radial_relaxation_sweep(&RadialRelaxation {
                n: 2,
                nl: Nonlinearity::Exp { a: p.a },
                mass: c,
                schedule: Schedule::Truncation(levels.clone()),
                cells: p.cells,
                r_min: p.r_min,
                probe: p.probe,
                core: p.core,
            })?;
            let limit = rep.limit.unwrap_or(f64::NAN);
            out.checks.push(Check::relative(format!("c={c:.6} limit mass vs min(c, 4pi/a)"), limit, c.min(critical), p.tol));
            reports.push((c, rep));
        }
        let rows: Vec<(f64, &RelaxationReport)> = reports.iter().map(|(c, r)| (*c, r)).collect();
        out.tables.push(stage_table("stages", &rows));
        Ok(out)
    }
}

pub(super) struct InteriorCollapse;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct CollapseParams {
    n: usize,
    q: f64,
    mass: f64,
    widths: Vec<f64>,
    cells: usize,
    r_min: f64,
    probe: f64,
    core: f64,
    /// Bound on the last L¹ norm over the first.
    max_ratio: f64,
}

impl Default for CollapseParams {
    fn default() -> Self {
        CollapseParams {
            n: 3,
            q: 3.0,
            mass: 1000.0,
            widths: vec![0.2, 0.1, 0.05, 0.025],
            cells: 4000,
            r_min: 1e-9,
            probe: 0.5,
            core: 0.0,
            max_ratio: 0.5,
        }
    }
}

impl Experiment for InteriorCollapse {
    type Params = CollapseParams;

    fn check(p: &CollapseParams) -> Result<()> {
        require(p.n >= 2 && p.q > 1.0 && p.mass > 0.0, "q", "needs n >= 2, q > 1 and a positive mass")?;
        require(p.widths.len() >= 2 && strictly_decreasing(&p.widths), "widths", "needs at least two decreasing widths")?;
        require(p.r_min > 0.0 && p.probe > 0.0 && p.probe < 1.0 && p.core >= 0.0, "probe", "needs 0 < probe < 1")?;
        require(p.cells >= 10, "cells", "must be at least 10")
    }

    fn run(_ctx: &Context, p: &CollapseParams) -> Result<Outcome> {
        let rep = radial_relaxation_sweep(&RadialRelaxation {
            n: p.n,
            nl: Nonlinearity::Power { q: p.q },
            mass: p.mass,
            schedule: Schedule::Mollification(p.widths.clone()),
            cells: p.cells,
            r_min: p.r_min,
            probe: p.probe,
            core: p.core,
        })?;
        let l1: Vec<f64> = rep.stages.iter().map(|s| s.l1_norm).collect();
        let checks = vec![
            Check::holds("every stage converged", rep.stages.iter().all(|s| s.verdict == Verdict::Converged)),
            Check::holds("L1 norm strictly decreasing", rep.l1_strictly_decreasing()),
            Check::at_most("last over first L1 norm", l1[l1.len() - 1] / l1[0], p.max_ratio),
        ];
        Ok(Outcome { checks, tables: vec![stage_table("stages", &[(p.mass, &rep)])] })
    }
}
