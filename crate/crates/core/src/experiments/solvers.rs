use serde::{Deserialize, Serialize};

use super::{require, strictly_decreasing, Check, Context, Experiment, Outcome, Table};
use crate::absorption::{comparison_suite, solve_absorption, AbsorptionOptions, ComparisonReport, Verdict};
use crate::elliptic::green_potential;
use crate::error::Result;
use crate::grid::Shape;
use crate::measure::MeasureData;
use crate::nonlinearity::Nonlinearity;
use crate::radial_ode::energy_drift;
use crate::source::{
    estimate_c0, necessary_check, sigma_threshold, solve_source, supersolution_factor, theta_scan, SourceConfig,
    SourceOptions,
};
use crate::trace::{mollified_boundary_trace, separable_slope, strong_singularity_minorant, trace_measure};

pub(super) struct SigmaThreshold;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct ThresholdParams {
    h: f64,
    q: f64,
    /// Multiples of the threshold expected to converge and to diverge.
    below: f64,
    above: f64,
    scan_tol: f64,
    /// Relative slack of the node-wise sandwich `𝔾(σλ) ≤ u ≤ θ𝔾(σλ)`.
    bound_tol: f64,
    margin_tol: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams { h: 1.0 / 16.0, q: 2.0, below: 0.5, above: 20.0, scan_tol: 1e-10, bound_tol: 1e-9, margin_tol: 1e-8 }
    }
}

impl Experiment for SigmaThreshold {
    type Params = ThresholdParams;

    fn check(p: &ThresholdParams) -> Result<()> {
        require(p.h > 0.0 && p.h <= 0.25, "h", "must lie in (0, 1/4]")?;
        require(p.q > 1.0, "q", "must exceed 1")?;
        require(p.below > 0.0 && p.below < 1.0, "below", "must lie in (0, 1)")?;
        require(p.above > 1.0, "above", "must exceed 1")
    }

    fn run(ctx: &Context, p: &ThresholdParams) -> Result<Outcome> {
        let op = ctx.laplacian(3, Shape::Ball, p.h)?;
        let delta = MeasureData::dirac(&Shape::Ball, &[0.0; 3], 1.0)?;
        let q = p.q;
        let c0 = estimate_c0(&op, &delta, q)?;
        let s0 = sigma_threshold(q, c0)?;
        let (theta_opt, scan) = theta_scan(q, c0);
        let mut out = Outcome::default();
        out.checks.push(Check::at_most("threshold vs theta scan relative gap", (s0 - scan).abs() / s0, p.scan_tol));
        let mut summary = Table::new("threshold", &["c0", "sigma0", "theta_opt", "scan_max"]);
        summary.push(vec![c0.into(), s0.into(), theta_opt.into(), scan.into()]);
        let mut runs = Table::new(
            "runs",
            &["factor", "sigma", "verdict", "iterations", "min_excess_over_green", "max_ratio_to_supersolution", "theta", "necessary_margin"],
        );
        for (factor, expect) in [(p.below, Verdict::Converged), (p.above, Verdict::Diverged)] {
            let sigma = factor * s0;
            let cfg = SourceConfig { q, sigma, lambda: delta.clone(), options: SourceOptions::default() };
            let (u, rep) = solve_source(&op, &cfg)?;
            out.checks.push(Check::holds(format!("{factor} x threshold is {expect}"), rep.verdict == expect));
            let (mut lower, mut upper, mut theta, mut margin) = (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
            if rep.verdict == Verdict::Converged {
                let scaled = delta.scale(sigma);
                let w = green_potential(&op, &scaled)?;
                let t = supersolution_factor(q, c0, sigma).unwrap_or(f64::NAN);
                lower = u.values().iter().zip(w.values()).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
                upper = u
                    .values()
                    .iter()
                    .zip(w.values())
                    .filter(|(_, b)| **b > 0.0)
                    .map(|(a, b)| a / (t * b))
                    .fold(0.0, f64::max);
                theta = t;
                margin = necessary_check(&op, &scaled, q)?;
                let scale = 1.0 + u.sup_abs();
                out.checks.push(Check::at_least(format!("{factor} x threshold u - G(sigma lambda)"), lower, -p.bound_tol * scale));
                out.checks.push(Check::at_most(format!("{factor} x threshold u / (theta G(sigma lambda))"), upper, 1.0 + p.bound_tol));
                out.checks.push(Check::at_least(format!("{factor} x threshold necessary margin"), margin, -p.margin_tol));
            }
            runs.push(vec![
                factor.into(),
                sigma.into(),
                rep.verdict.to_string().into(),
                rep.iterations.into(),
                lower.into(),
                upper.into(),
                theta.into(),
                margin.into(),
            ]);
        }
        out.tables.push(summary);
        out.tables.push(runs);
        Ok(out)
    }
}

pub(super) struct BoundaryExponent;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct BoundaryParams {
    /// Subcritical exponent, spacing and boundary atom weight.
    sub_q: f64,
    sub_h: f64,
    atom_weight: f64,
    atom_tol: f64,
    /// Weights of the increasing boundary atoms whose solutions approach the strong singularity.
    k_list: Vec<f64>,
    probe: f64,
    /// Distances along the inward normal used for the slope fit.
    ray: (f64, f64),
    slope_tol: f64,
    /// Supercritical exponent, spacing, weight and mollifier widths.
    super_q: f64,
    super_h: f64,
    weight: f64,
    widths: Vec<f64>,
    max_decay: f64,
    /// Slice distances of the trace reconstruction.
    t_list: Vec<f64>,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        BoundaryParams {
            sub_q: 2.0,
            sub_h: 1.0 / 256.0,
            atom_weight: 1.0,
            atom_tol: 0.05,
            k_list: (0..8).map(|i| 4f64.powi(i)).collect(),
            probe: 0.5,
            ray: (0.05, 0.2),
            slope_tol: 0.05,
            super_q: 3.5,
            super_h: 1.0 / 128.0,
            weight: 100.0,
            widths: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            max_decay: 0.2,
            t_list: vec![0.05, 0.025],
        }
    }
}

impl Experiment for BoundaryExponent {
    type Params = BoundaryParams;

    fn check(p: &BoundaryParams) -> Result<()> {
        require(p.sub_q > 1.0 && p.sub_q < 3.0, "sub_q", "must lie in (1, 3)")?;
        require(p.super_q >= 3.0, "super_q", "must be at least 3")?;
        require(p.sub_h > 0.0 && p.sub_h <= 1.0 / 16.0, "sub_h", "must lie in (0, 1/16]")?;
        require(p.super_h > 0.0 && p.super_h <= 1.0 / 16.0, "super_h", "must lie in (0, 1/16]")?;
        require(
            p.k_list.windows(2).all(|w| w[1] > w[0]) && p.k_list.first().is_some_and(|k| *k > 0.0),
            "k_list",
            "must be positive and increasing",
        )?;
        require(0.0 < p.ray.0 && p.ray.0 < p.ray.1 && p.ray.1 < 1.0, "ray", "needs 0 < a < b < 1")?;
        require(p.widths.len() >= 2 && strictly_decreasing(&p.widths), "widths", "needs at least two decreasing widths")?;
        require(p.t_list.len() == 2 && strictly_decreasing(&p.t_list), "t_list", "needs two decreasing slice distances")?;
        require(p.atom_weight > 0.0 && p.weight > 0.0, "weight", "must be positive")
    }

    fn run(ctx: &Context, p: &BoundaryParams) -> Result<Outcome> {
        let a = [1.0, 0.0];
        let mut out = Outcome::default();
        let op = ctx.laplacian(2, Shape::Disk, p.sub_h)?;
        let mu = MeasureData::boundary_dirac(&Shape::Disk, &a, p.atom_weight)?;
        let nl = Nonlinearity::Power { q: p.sub_q };
        let (u, rep) = solve_absorption(&op, &nl, &MeasureData::zero(), &mu, &AbsorptionOptions::default())?;
        let tm = trace_measure(&u, &p.t_list, None)?;
        out.checks.push(Check::holds("boundary Dirac solve converged", rep.converged()));
        out.checks.push(Check::within("trace atoms", tm.atoms.len() as f64, 1.0, 1.0));
        let atom = tm.atoms.first().map_or(f64::NAN, |t| t.mass / p.atom_weight);
        out.checks.push(Check::relative("trace atom mass over weight", atom, 1.0, p.atom_tol));
        let mut atoms = Table::new("atoms", &["angle", "mass", "window"]);
        for t in &tm.atoms {
            atoms.push(vec![t.angle.into(), t.mass.into(), t.window.into()]);
        }

        let study = strong_singularity_minorant(&op, p.sub_q, &a, &p.k_list, p.probe, p.ray)?;
        let expected = separable_slope(p.sub_q);
        out.checks.push(Check::holds("minorant stages converged", study.stages.iter().all(|s| s.verdict == Verdict::Converged)));
        out.checks.push(Check::at_most("minorant order violations", study.order_violations as f64, 0.0));
        out.checks.push(Check::relative("normal-ray slope", study.ray_slope, expected, p.slope_tol));
        let mut stages = Table::new("minorant", &["k", "probe_value", "sup_value", "iterations", "verdict"]);
        for s in &study.stages {
            stages.push(vec![s.k.into(), s.probe_value.into(), s.sup_value.into(), s.iterations.into(), s.verdict.to_string().into()]);
        }
        let mut ray = Table::new("ray", &["distance", "value"]);
        for &(d, v) in &study.ray {
            ray.push(vec![d.into(), v.into()]);
        }

        let op = ctx.laplacian(2, Shape::Disk, p.super_h)?;
        let mt = mollified_boundary_trace(&op, p.super_q, &a, p.weight, &p.widths, &p.t_list)?;
        out.checks.push(Check::holds("supercritical trace mass strictly decreasing", mt.masses.windows(2).all(|w| w[1] < w[0])));
        out.checks.push(Check::at_most("supercritical trace mass last over first", mt.decay(), p.max_decay));
        let mut collapse = Table::new("collapse", &["width", "trace_mass", "normalized"]);
        for (w, m) in mt.widths.iter().zip(&mt.masses) {
            collapse.push(vec![(*w).into(), (*m).into(), (m / p.weight).into()]);
        }
        out.tables = vec![atoms, stages, ray, collapse];
        Ok(out)
    }
}

pub(super) struct OrderStability;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct OrderParams {
    h: f64,
    pairs: usize,
    /// `(u(1), u'(1))` starts of the conformal trajectories.
    energy_starts: Vec<(f64, f64)>,
    energy_n: usize,
    energy_t_max: f64,
    drift_tol: f64,
}

impl Default for OrderParams {
    fn default() -> Self {
        OrderParams {
            h: 1.0 / 16.0,
            pairs: 200,
            energy_starts: vec![(0.5, 0.0), (1.0, -0.3), (0.2, 0.4), (2.0, -1.0)],
            energy_n: 3,
            energy_t_max: 10.0,
            drift_tol: 1e-6,
        }
    }
}

fn pair_table(rep: &ComparisonReport) -> Table {
    let mut t = Table::new("pairs", &["pair", "nonlinearity", "violation", "violating_nodes", "bound_excess", "converged"]);
    for (i, c) in rep.pairs.iter().enumerate() {
        t.push(vec![
            i.into(),
            c.nonlinearity.to_string().into(),
            c.violation.into(),
            c.violating_nodes.into(),
            c.bound_excess.into(),
            usize::from(c.converged).into(),
        ]);
    }
    t
}

impl Experiment for OrderStability {
    type Params = OrderParams;

    fn check(p: &OrderParams) -> Result<()> {
        require(p.h > 0.0 && p.h <= 0.25, "h", "must lie in (0, 1/4]")?;
        require(p.pairs > 0, "pairs", "must be positive")?;
        require(p.energy_n >= 3 && p.energy_t_max > 0.0, "energy_n", "needs n >= 3 and a positive horizon")
    }

    fn run(ctx: &Context, p: &OrderParams) -> Result<Outcome> {
        let op = ctx.laplacian(2, Shape::Disk, p.h)?;
        let first = comparison_suite(&op, p.pairs, ctx.seed)?;
        let again = comparison_suite(&op, p.pairs, ctx.seed)?;
        let table = pair_table(&first);
        let identical = table.to_csv()? == pair_table(&again).to_csv()?;
        let mut checks = vec![
            Check::at_most("unconverged solves", first.unconverged() as f64, 0.0),
            Check::at_most("order-violating nodes", first.violating_nodes() as f64, 0.0),
            Check::at_most("a-priori bound excess", first.max_bound_excess(), 0.0),
            Check::holds("rerun is byte-identical", identical),
        ];
        let mut energy = Table::new("energy", &["u1", "du1", "drift"]);
        let mut worst = 0.0f64;
        for &(u1, du1) in &p.energy_starts {
            let d = energy_drift(p.energy_n, u1, du1, p.energy_t_max)?;
            worst = worst.max(d);
            energy.push(vec![u1.into(), du1.into(), d.into()]);
        }
        checks.push(Check::at_most("conformal energy drift", worst, p.drift_tol));
        Ok(Outcome { checks, tables: vec![table, energy] })
    }
}
