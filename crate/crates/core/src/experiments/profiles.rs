use serde::{Deserialize, Serialize};

use super::{require, Check, Context, Experiment, Outcome, Table};
use crate::error::Result;
use crate::radial_ode::{
    boundary_separable_residual, cap_eigenproblem, dichotomy_sweep, ell_qn, explicit_residual, gamma_qn, log_radii,
    DichotomyClass, OdeKind,
};

pub(super) struct ExplicitProfiles;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct ProfileParams {
    /// `(q, n)` pairs for `−Δu + u^q = 0`.
    absorption: Vec<(f64, usize)>,
    /// `(q, n)` pairs for `−Δu = u^q`.
    source: Vec<(f64, usize)>,
    r_min: f64,
    r_max: f64,
    per_decade: usize,
    tol: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            absorption: vec![(2.0, 3), (3.0, 2), (1.5, 4)],
            source: vec![(5.0, 3), (3.0, 5)],
            r_min: 1e-3,
            r_max: 1.0,
            per_decade: 20,
            tol: 1e-10,
        }
    }
}

impl Experiment for ExplicitProfiles {
    type Params = ProfileParams;

    fn check(p: &ProfileParams) -> Result<()> {
        require(p.r_min > 0.0 && p.r_max > p.r_min, "r_min", "needs 0 < r_min < r_max")?;
        require(p.per_decade > 0, "per_decade", "must be positive")?;
        require(!p.absorption.is_empty() || !p.source.is_empty(), "absorption", "no profiles requested")
    }

    fn run(_ctx: &Context, p: &ProfileParams) -> Result<Outcome> {
        let radii = log_radii(p.r_min, p.r_max, p.per_decade);
        let mut out = Outcome::default();
        let mut table = Table::new("residuals", &["kind", "q", "n", "coefficient", "residual"]);
        let cases = p
            .absorption
            .iter()
            .map(|&(q, n)| (OdeKind::Absorption, q, n))
            .chain(p.source.iter().map(|&(q, n)| (OdeKind::Source, q, n)));
        for (kind, q, n) in cases {
            let (name, coef) = match kind {
                OdeKind::Absorption => ("absorption", ell_qn(q, n)?),
                OdeKind::Source => ("source", gamma_qn(q, n)?),
            };
            let res = explicit_residual(kind, q, n, coef, &radii);
            table.push(vec![name.into(), q.into(), n.into(), coef.into(), res.into()]);
            out.checks.push(Check::at_most(format!("{name} q={q} n={n} residual"), res, p.tol));
        }
        out.tables.push(table);
        Ok(out)
    }
}

pub(super) struct Dichotomy;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct DichotomyParams {
    q: f64,
    n: usize,
    points: usize,
    r_end: f64,
    /// Relative tolerance of the strong limit against the explicit coefficient.
    ell_tol: f64,
    /// Relative tolerance of the weak mass against flux quadrature.
    mass_tol: f64,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        DichotomyParams { q: 2.0, n: 3, points: 50, r_end: 1e-5, ell_tol: 0.02, mass_tol: 0.02 }
    }
}

impl Experiment for Dichotomy {
    type Params = DichotomyParams;

    fn check(p: &DichotomyParams) -> Result<()> {
        require(p.points >= 3, "points", "a sweep needs at least 3 shots")?;
        require(p.r_end > 0.0 && p.r_end < 0.1, "r_end", "must lie in (0, 0.1)")?;
        require(p.q > 1.0 && p.n >= 2, "q", "needs q > 1 and n >= 2")
    }

    fn run(_ctx: &Context, p: &DichotomyParams) -> Result<Outcome> {
        let sweep = dichotomy_sweep(p.q, p.n, p.points, p.r_end)?;
        let ell = ell_qn(p.q, p.n)?;
        let mut table = Table::new(
            "shots",
            &["slope_start", "class", "limit", "fit_slope", "strong_error", "weak_error", "window_nodes", "mass", "flux_mass"],
        );
        let (mut ell_err, mut mass_err) = (0.0f64, 0.0f64);
        for e in &sweep.entries {
            let (class, limit) = match e.classification.map(|c| c.class) {
                Some(DichotomyClass::Strong { ell: l }) => {
                    ell_err = ell_err.max((l / ell - 1.0).abs());
                    ("strong", l)
                }
                Some(DichotomyClass::Weak { c }) => ("weak", c),
                Some(DichotomyClass::Regular) => ("regular", f64::NAN),
                None => ("unclassified", f64::NAN),
            };
            if let Some((m, f)) = e.weak_mass {
                mass_err = mass_err.max((m / f - 1.0).abs());
            }
            let c = e.classification;
            let (m, f) = e.weak_mass.unwrap_or((f64::NAN, f64::NAN));
            table.push(vec![
                e.slope_start.into(),
                class.into(),
                limit.into(),
                c.map_or(f64::NAN, |c| c.slope).into(),
                c.map_or(f64::NAN, |c| c.strong_error).into(),
                c.map_or(f64::NAN, |c| c.weak_error).into(),
                c.map_or(0, |c| c.window_nodes).into(),
                m.into(),
                f.into(),
            ]);
        }
        let strong = sweep.count(|c| matches!(c, DichotomyClass::Strong { .. }));
        let weak = sweep.count(|c| matches!(c, DichotomyClass::Weak { .. }));
        let checks = vec![
            Check::at_most("unclassified shots", sweep.unclassified() as f64, 0.0),
            Check::at_least("strong shots", strong as f64, 1.0),
            Check::at_least("weak shots", weak as f64, 1.0),
            Check::at_most("strong limit relative error", ell_err, p.ell_tol),
            Check::at_most("weak mass relative error", mass_err, p.mass_tol),
        ];
        Ok(Outcome { checks, tables: vec![table] })
    }
}

pub(super) struct CapEigen;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct CapParams {
    cases: Vec<(f64, usize)>,
    /// Shooting tolerance of the eigenproblem.
    solver_tol: f64,
    residual_tol: f64,
    /// Lattice spacing and annulus `[r_min, r_max]` of the separable residual (plane only).
    separable_h: f64,
    separable_annulus: (f64, f64),
    separable_tol: f64,
}

impl Default for CapParams {
    fn default() -> Self {
        CapParams {
            cases: vec![(1.5, 2), (2.0, 2), (2.5, 2), (2.9, 2), (3.1, 2), (4.0, 2), (1.5, 3), (1.9, 3), (2.1, 3)],
            solver_tol: 1e-13,
            residual_tol: 1e-8,
            separable_h: 1.0 / 1024.0,
            separable_annulus: (0.2, 0.5),
            separable_tol: 1e-3,
        }
    }
}

impl Experiment for CapEigen {
    type Params = CapParams;

    fn check(p: &CapParams) -> Result<()> {
        require(!p.cases.is_empty(), "cases", "must be nonempty")?;
        require(p.cases.iter().all(|&(q, n)| q > 1.0 && n >= 2), "cases", "needs q > 1 and n >= 2")?;
        let (a, b) = p.separable_annulus;
        require(p.separable_h > 0.0 && a > 2.0 * p.separable_h && b > a, "separable_annulus", "needs 2h < r_min < r_max")
    }

    fn run(_ctx: &Context, p: &CapParams) -> Result<Outcome> {
        let mut out = Outcome::default();
        let mut table = Table::new(
            "cases",
            &["q", "n", "critical", "predicted", "found", "eigenvalue", "pole_value", "residual", "separable_residual"],
        );
        for &(q, n) in &p.cases {
            let critical = (n as f64 + 1.0) / (n as f64 - 1.0);
            let predicted = q < critical;
            let profile = cap_eigenproblem(q, n, p.solver_tol)?;
            out.checks.push(Check::holds(format!("q={q} n={n} existence matches q < {critical}"), profile.is_some() == predicted));
            let mut sep = f64::NAN;
            if let Some(pr) = &profile {
                out.checks.push(Check::at_most(format!("q={q} n={n} profile residual"), pr.residual, p.residual_tol));
                if n == 2 {
                    let (a, b) = p.separable_annulus;
                    sep = boundary_separable_residual(pr, 1.0, p.separable_h, a, b)?.residual;
                    out.checks.push(Check::at_most(format!("q={q} n={n} separable residual"), sep, p.separable_tol));
                }
            }
            table.push(vec![
                q.into(),
                n.into(),
                critical.into(),
                usize::from(predicted).into(),
                usize::from(profile.is_some()).into(),
                profile.as_ref().map_or(f64::NAN, |p| p.lambda).into(),
                profile.as_ref().map_or(f64::NAN, |p| p.pole_value).into(),
                profile.as_ref().map_or(f64::NAN, |p| p.residual).into(),
                sep.into(),
            ]);
        }
        out.tables.push(table);
        Ok(out)
    }
}
