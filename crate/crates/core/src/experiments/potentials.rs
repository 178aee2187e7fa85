use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{require, strictly_decreasing, Check, Context, Experiment, Outcome, Table};
use crate::capacity::{capacity_scaling_study, removability_lattice_check, ScalingStudy};
use crate::elliptic::{
    ball_green_closed_form, green_potential, kernel_estimate_report, poisson_potential, KernelStudy, ScalarField,
};
use crate::error::Result;
use crate::grid::{CartesianGrid, GridFunction, Shape};
use crate::measure::{check_embedding, marcinkiewicz_norm, MeasureData};

pub(super) struct GreenOracle;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct GreenParams {
    /// Spacings, each half the previous one.
    h_list: Vec<f64>,
    /// Radii `[a, b]` where the relative error is measured.
    band: (f64, f64),
    tol: f64,
    /// Expected error ratio per halving and its relative tolerance.
    halving: f64,
    halving_tol: f64,
}

impl Default for GreenParams {
    fn default() -> Self {
        GreenParams { h_list: vec![1.0 / 32.0, 1.0 / 64.0], band: (0.2, 0.8), tol: 0.05, halving: 0.5, halving_tol: 0.3 }
    }
}

impl Experiment for GreenOracle {
    type Params = GreenParams;

    fn check(p: &GreenParams) -> Result<()> {
        require(strictly_decreasing(&p.h_list) && p.h_list[0] <= 0.25, "h_list", "must decrease from at most 1/4")?;
        require(0.0 < p.band.0 && p.band.0 < p.band.1 && p.band.1 < 1.0, "band", "needs 0 < a < b < 1")
    }

    fn run(ctx: &Context, p: &GreenParams) -> Result<Outcome> {
        let mut out = Outcome::default();
        let mut table = Table::new("axes", &["h", "axis", "coordinate", "r", "u_grid", "u_oracle", "rel_err"]);
        let delta = MeasureData::dirac(&Shape::Ball, &[0.0; 3], 1.0)?;
        let mut errors = Vec::with_capacity(p.h_list.len());
        for &h in &p.h_list {
            let op = ctx.laplacian(3, Shape::Ball, h)?;
            let u = green_potential(&op, &delta)?;
            let grid = op.grid();
            let mut max_err = 0.0f64;
            for (i, c) in grid.coords().iter().enumerate() {
                let x = grid.node_position(i);
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if r == 0.0 {
                    continue;
                }
                let on_axis = c.iter().filter(|v| **v == 0).count() == 2;
                let in_band = r >= p.band.0 && r <= p.band.1;
                if !on_axis && !in_band {
                    continue;
                }
                let oracle = ball_green_closed_form(&x, &[0.0; 3], 3)?;
                let err = (u.values()[i] - oracle).abs() / oracle;
                if in_band {
                    max_err = max_err.max(err);
                }
                if on_axis {
                    let axis = c.iter().position(|v| *v != 0).expect("off-origin axis node");
                    table.push(vec![h.into(), axis.into(), x[axis].into(), r.into(), u.values()[i].into(), oracle.into(), err.into()]);
                }
            }
            out.checks.push(Check::at_most(format!("h={h} max relative error"), max_err, p.tol));
            errors.push(max_err);
        }
        for w in errors.windows(2) {
            out.checks.push(Check::relative("error ratio per halving", w[1] / w[0], p.halving, p.halving_tol));
        }
        out.tables.push(table);
        Ok(out)
    }
}

pub(super) struct Marcinkiewicz;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct WeakParams {
    /// Random `(f, E)` pairs on the unit disk.
    samples: usize,
    sample_h: f64,
    /// Spacings for the weak norms of the Green and Poisson potentials in the unit ball.
    h_list: Vec<f64>,
    /// Relative spread allowed between consecutive refinements.
    stability_tol: f64,
    /// Boundary point carrying the unit atom.
    boundary_point: Vec<f64>,
}

impl Default for WeakParams {
    fn default() -> Self {
        WeakParams {
            samples: 100,
            sample_h: 1.0 / 16.0,
            h_list: vec![1.0 / 16.0, 1.0 / 32.0],
            stability_tol: 0.15,
            boundary_point: vec![1.0, 0.0, 0.0],
        }
    }
}

/// Random signed sum of point singularities `|x − c|^(−s)` plus noise.
fn random_function(grid: &Arc<CartesianGrid>, rng: &mut ChaCha8Rng) -> GridFunction {
    let h = grid.h();
    let terms: Vec<([f64; 2], f64, f64)> = (0..3)
        .map(|_| {
            let c = [rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)];
            (c, rng.gen_range(-2.0..2.0), rng.gen_range(0.0..1.5))
        })
        .collect();
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let mut f = GridFunction::from_fn(Arc::clone(grid), |x| {
        terms
            .iter()
            .map(|(c, a, s)| a * (x[0] - c[0]).hypot(x[1] - c[1]).max(0.5 * h).powf(-s))
            .sum()
    });
    f.values_mut().iter_mut().zip(noise).for_each(|(v, n)| *v += n);
    f
}

impl Experiment for Marcinkiewicz {
    type Params = WeakParams;

    fn check(p: &WeakParams) -> Result<()> {
        require(p.samples > 0, "samples", "must be positive")?;
        require(p.sample_h > 0.0 && p.sample_h <= 0.25, "sample_h", "must lie in (0, 1/4]")?;
        require(strictly_decreasing(&p.h_list) && p.h_list[0] <= 0.25, "h_list", "must decrease from at most 1/4")?;
        require(p.boundary_point.len() == 3, "boundary_point", "must have three coordinates")
    }

    fn run(ctx: &Context, p: &WeakParams) -> Result<Outcome> {
        let mut out = Outcome::default();
        let disk = ctx.laplacian(2, Shape::Disk, p.sample_h)?;
        let grid = disk.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut samples = Table::new("embedding", &["sample", "p", "q", "alpha", "set_nodes", "margin"]);
        let mut worst = f64::INFINITY;
        for k in 0..p.samples {
            let f = random_function(grid, &mut rng);
            let pw = rng.gen_range(1.2..5.0);
            let qw = 1.0 + (pw - 1.0) * rng.gen_range(0.0..0.95);
            let alpha = if rng.gen_bool(0.5) { 0.0 } else { 1.0 };
            let (cx, cy, radius) = (rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8), rng.gen_range(0.05..1.0));
            let keep = rng.gen_range(0.3..1.0);
            let mut set: Vec<usize> = (0..grid.len())
                .filter(|&i| {
                    let x = grid.node_position(i);
                    let inside = (x[0] - cx).hypot(x[1] - cy) <= radius;
                    rng.gen_bool(keep) && inside
                })
                .collect();
            if set.is_empty() {
                set.push(rng.gen_range(0..grid.len()));
            }
            let margin = check_embedding(&f, pw, qw, &set, alpha);
            worst = worst.min(margin);
            samples.push(vec![k.into(), pw.into(), qw.into(), alpha.into(), set.len().into(), margin.into()]);
        }
        out.checks.push(Check::at_least("smallest embedding margin", worst, 0.0));
        out.tables.push(samples);

        let mut norms = Table::new("potentials", &["potential", "h", "p", "alpha", "weak_norm"]);
        let delta = MeasureData::dirac(&Shape::Ball, &[0.0; 3], 1.0)?;
        let atom = MeasureData::boundary_dirac(&Shape::Ball, &p.boundary_point, 1.0)?;
        let (mut green, mut poisson) = (Vec::new(), Vec::new());
        for &h in &p.h_list {
            let op = ctx.laplacian(3, Shape::Ball, h)?;
            let g = marcinkiewicz_norm(&green_potential(&op, &delta)?, 3.0, 0.0).value;
            let pp = marcinkiewicz_norm(&poisson_potential(&op, &atom)?, 2.0, 1.0).value;
            norms.push(vec!["green".into(), h.into(), 3.0.into(), 0.0.into(), g.into()]);
            norms.push(vec!["poisson".into(), h.into(), 2.0.into(), 1.0.into(), pp.into()]);
            out.checks.push(Check::finite(format!("h={h} Green weak norm"), g));
            out.checks.push(Check::finite(format!("h={h} Poisson weighted weak norm"), pp));
            green.push(g);
            poisson.push(pp);
        }
        for (name, v) in [("Green", &green), ("Poisson", &poisson)] {
            for w in v.windows(2) {
                out.checks.push(Check::relative(format!("{name} weak norm refinement ratio"), w[1] / w[0], 1.0, p.stability_tol));
            }
        }
        out.tables.push(norms);
        Ok(out)
    }
}

pub(super) struct KernelEstimates;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct KernelParams {
    n: usize,
    samples: usize,
    coarse_h: f64,
    /// Diffusion `1 + amplitude·sin(frequency·x₁)`.
    amplitude: f64,
    frequency: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams { n: 3, samples: 10_000, coarse_h: 0.25, amplitude: 0.3, frequency: 1.0 }
    }
}

impl Experiment for KernelEstimates {
    type Params = KernelParams;

    fn check(p: &KernelParams) -> Result<()> {
        require(p.n == 2 || p.n == 3, "n", "must be 2 or 3")?;
        require(p.samples > 0, "samples", "must be positive")?;
        require(p.amplitude.abs() < 1.0, "amplitude", "must keep the diffusion positive")?;
        require(p.coarse_h > 0.0 && p.coarse_h <= 0.5, "coarse_h", "must lie in (0, 1/2]")
    }

    fn run(ctx: &Context, p: &KernelParams) -> Result<Outcome> {
        let rep = kernel_estimate_report(&KernelStudy {
            n: p.n,
            samples: p.samples,
            seed: ctx.seed,
            coarse_h: p.coarse_h,
            perturbation: Some(ScalarField::Sine { base: 1.0, amp: p.amplitude, axis: 0, freq: p.frequency }),
        })?;
        let (eq_lo, eq_hi) = rep.equivalence.unwrap_or((f64::NAN, f64::NAN));
        let constants = [
            ("green_upper_sup", rep.green_upper_sup.unwrap_or(f64::NAN)),
            ("green_sharp_sup", rep.green_sharp_sup),
            ("green_sharp_inf", rep.green_sharp_inf),
            ("poisson_sup", rep.poisson_sup),
            ("poisson_inf", rep.poisson_inf),
            ("three_g_sup", rep.three_g_sup),
            ("equivalence_min", eq_lo),
            ("equivalence_max", eq_hi),
            ("equivalence_constant", rep.equivalence_constant().unwrap_or(f64::NAN)),
        ];
        let mut table = Table::new("constants", &["name", "value"]);
        for (name, v) in constants {
            table.push(vec![name.into(), v.into()]);
        }
        let mut checks = vec![
            Check::finite("Green sharp upper constant", rep.green_sharp_sup),
            Check::at_least("Green sharp lower constant", rep.green_sharp_inf, f64::MIN_POSITIVE),
            Check::finite("Poisson upper constant", rep.poisson_sup),
            Check::at_least("Poisson lower constant", rep.poisson_inf, f64::MIN_POSITIVE),
            Check::finite("3-G constant", rep.three_g_sup),
            Check::finite("kernel equivalence constant", rep.equivalence_constant().unwrap_or(f64::NAN)),
            Check::holds("all sampled suprema finite and infima positive", rep.is_bounded()),
        ];
        if p.n >= 3 {
            checks.insert(0, Check::finite("Green upper constant", rep.green_upper_sup.unwrap_or(f64::NAN)));
        }
        Ok(Outcome { checks, tables: vec![table] })
    }
}

pub(super) struct CapacityScaling;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(super) struct CapacityParams {
    /// Dimension and spacings where the point capacity is positive.
    stable_n: usize,
    stable_h: Vec<f64>,
    stable_tol: f64,
    /// Dimension and spacings where it vanishes linearly in `h`.
    decay_n: usize,
    decay_h: Vec<f64>,
    decay_ratio: f64,
    decay_tol: f64,
    /// `(q, n)` cases of the removability comparison.
    lattice: Vec<(f64, usize)>,
    mass: f64,
}

impl Default for CapacityParams {
    fn default() -> Self {
        CapacityParams {
            stable_n: 3,
            stable_h: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0],
            stable_tol: 0.15,
            decay_n: 5,
            decay_h: vec![1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0],
            decay_ratio: 0.5,
            decay_tol: 0.3,
            lattice: vec![(2.0, 3), (3.0, 3), (4.0, 3), (1.5, 4), (2.0, 4), (3.0, 4)],
            mass: 10.0,
        }
    }
}

fn scaling_rows(table: &mut Table, s: &ScalingStudy) {
    for r in &s.rows {
        table.push(vec![
            s.n.into(),
            r.h.into(),
            r.estimate.into(),
            r.ratio.unwrap_or(f64::NAN).into(),
            r.log_ratio.unwrap_or(f64::NAN).into(),
        ]);
    }
}

impl Experiment for CapacityScaling {
    type Params = CapacityParams;

    fn check(p: &CapacityParams) -> Result<()> {
        require(strictly_decreasing(&p.stable_h) && p.stable_h.len() >= 2, "stable_h", "needs two decreasing spacings")?;
        require(strictly_decreasing(&p.decay_h) && p.decay_h.len() >= 2, "decay_h", "needs two decreasing spacings")?;
        require(p.stable_n >= 1 && p.decay_n >= 1, "stable_n", "dimensions must be positive")?;
        require(p.lattice.iter().all(|&(q, n)| q > 1.0 && n >= 3), "lattice", "needs q > 1 and n >= 3")?;
        require(p.mass > 0.0, "mass", "must be positive")
    }

    fn run(_ctx: &Context, p: &CapacityParams) -> Result<Outcome> {
        let mut out = Outcome::default();
        let mut scaling = Table::new("scaling", &["n", "h", "capacity", "ratio", "log_ratio"]);
        let stable = capacity_scaling_study(p.stable_n, 2, 2.0, &p.stable_h)?;
        for r in &stable.rows[1..] {
            let ratio = r.ratio.unwrap_or(f64::NAN);
            out.checks.push(Check::relative(format!("n={} h={} capacity ratio", p.stable_n, r.h), ratio, 1.0, p.stable_tol));
        }
        let decay = capacity_scaling_study(p.decay_n, 2, 2.0, &p.decay_h)?;
        for r in &decay.rows[1..] {
            let ratio = r.ratio.unwrap_or(f64::NAN);
            out.checks.push(Check::within(
                format!("n={} h={} capacity ratio", p.decay_n, r.h),
                ratio,
                p.decay_ratio - p.decay_tol,
                p.decay_ratio + p.decay_tol,
            ));
        }
        scaling_rows(&mut scaling, &stable);
        scaling_rows(&mut scaling, &decay);
        let mut lattice = Table::new("removability", &["q", "n", "predicted_removable", "collapsed", "final_ratio"]);
        for obs in removability_lattice_check(&p.lattice, p.mass)? {
            out.checks.push(Check::holds(format!("q={} n={} predicate matches observation", obs.q, obs.n), obs.agrees()));
            lattice.push(vec![
                obs.q.into(),
                obs.n.into(),
                usize::from(obs.predicted_removable).into(),
                usize::from(obs.collapsed).into(),
                obs.final_ratio.into(),
            ]);
        }
        out.tables.push(scaling);
        out.tables.push(lattice);
        Ok(out)
    }
}
