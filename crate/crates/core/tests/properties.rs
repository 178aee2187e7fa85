use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use melab::absorption::{solve_absorption, AbsorptionOptions, Nonlinearity};
use melab::capacity::{sobolev_capacity, CapacityProblem, CompactSet};
use melab::elliptic::{assemble, green_potential, CoefficientSet, DiscreteOperator};
use melab::experiments::{run, ExperimentConfig, Report};
use melab::grid::{build_masked_grid, integrate, GridFunction, Shape};
use melab::measure::{Atom, MeasureData};
use melab::radial_ode::{ell_qn, explicit_residual, gamma_qn, log_radii, OdeKind};
use melab::source::{estimate_c0, sigma_threshold, solve_source, SourceConfig, SourceOptions};
use melab::trace::slice_integrals;

fn disk_operator(h: f64) -> DiscreteOperator {
    let grid = Arc::new(build_masked_grid(2, Shape::Disk, h).unwrap());
    assemble(&grid, &CoefficientSet::laplacian()).unwrap()
}

fn coarse_disk() -> &'static DiscreteOperator {
    static OP: OnceLock<DiscreteOperator> = OnceLock::new();
    OP.get_or_init(|| disk_operator(1.0 / 8.0))
}

/// Atoms strictly inside the unit disk.
fn atoms(weights: std::ops::Range<f64>, max: usize) -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec((0.0f64..0.85, 0.0f64..std::f64::consts::TAU, weights), 1..max)
        .prop_map(|v| v.into_iter().map(|(r, t, w)| Atom { x: vec![r * t.cos(), r * t.sin()], w }).collect())
}

fn measure(atoms: Vec<Atom>) -> MeasureData {
    MeasureData { atoms, ..Default::default() }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discretized_atoms_keep_their_mass(a in atoms(-5.0..5.0, 6)) {
        let grid = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 16.0).unwrap());
        let total: f64 = a.iter().map(|x| x.w).sum();
        let scale: f64 = a.iter().map(|x| x.w.abs()).sum();
        let f = measure(a).discretize(&grid).unwrap();
        prop_assert!((integrate(&grid, f.values()) - total).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn green_potential_is_positive_and_additive(a in atoms(0.0..3.0, 4), b in atoms(0.0..3.0, 4)) {
        let op = coarse_disk();
        let (ua, ub) = (green_potential(op, &measure(a.clone())).unwrap(), green_potential(op, &measure(b.clone())).unwrap());
        let mut both = a;
        both.extend(b);
        let uab = green_potential(op, &measure(both)).unwrap();
        prop_assert!(uab.values().iter().all(|&v| v >= -1e-10));
        let tol = 1e-8 * (1.0 + sup(uab.values()));
        for i in 0..uab.len() {
            prop_assert!((uab.values()[i] - ua.values()[i] - ub.values()[i]).abs() <= tol);
        }
    }

    #[test]
    fn slices_of_nonnegative_functions_are_nonnegative(
        vals in prop::collection::vec(0.0f64..10.0, 8..40),
        weight in 0.0f64..2.0,
        t in prop::collection::vec(0.01f64..0.3, 1..4),
    ) {
        let grid = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 16.0).unwrap());
        let u = GridFunction::from_fn(Arc::clone(&grid), |x| vals[((x[0] + 1.0) * 7.0 + (x[1] + 1.0) * 19.0) as usize % vals.len()]);
        let theta = move |p: &[f64; 3]| weight * (1.0 + p[0].abs());
        for s in slice_integrals(&u, &theta, &t).unwrap() {
            prop_assert!(s >= 0.0);
        }
    }

    #[test]
    fn explicit_profiles_solve_their_equations(n in 2usize..=5, q in 1.05f64..8.0) {
        let radii = log_radii(1e-3, 1.0, 10);
        if let Ok(l) = ell_qn(q, n) {
            prop_assert!(explicit_residual(OdeKind::Absorption, q, n, l, &radii) <= 1e-10);
        }
        if let Ok(g) = gamma_qn(q, n) {
            prop_assert!(explicit_residual(OdeKind::Source, q, n, g, &radii) <= 1e-10);
        }
    }

    #[test]
    fn experiment_artifacts_are_reproducible(per_decade in 1usize..30, seed in any::<u64>()) {
        let cfg = ExperimentConfig::new("explicit-profiles")
            .with_params(serde_json::json!({ "per_decade": per_decade }))
            .with_seed(seed);
        let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
        prop_assert_eq!(a.tables[0].to_csv().unwrap(), b.tables[0].to_csv().unwrap());
        let json = a.report.to_json().unwrap();
        prop_assert_eq!(&json, &b.report.to_json().unwrap());
        let back: Report = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, a.report);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn absorption_is_monotone_in_the_data(a in atoms(0.0..4.0, 4), extra in atoms(0.0..4.0, 3), q in 1.5f64..4.0) {
        let op = coarse_disk();
        let nl = Nonlinearity::Power { q };
        let opts = AbsorptionOptions::default();
        let zero = MeasureData::zero();
        let lower = measure(a.clone());
        let mut more = a;
        more.extend(extra);
        let (u1, r1) = solve_absorption(op, &nl, &lower, &zero, &opts).unwrap();
        let (u2, r2) = solve_absorption(op, &nl, &measure(more), &zero, &opts).unwrap();
        prop_assume!(r1.converged() && r2.converged());
        let tol = 1e-10 * (1.0 + sup(u2.values()));
        for i in 0..u1.len() {
            prop_assert!(u1.values()[i] <= u2.values()[i] + tol);
        }
    }

    #[test]
    fn source_verdict_is_monotone_in_the_scale(f1 in 0.05f64..3.0, f2 in 0.05f64..3.0) {
        let op = coarse_disk();
        let lambda = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 1.0).unwrap();
        let s0 = sigma_threshold(2.0, estimate_c0(op, &lambda, 2.0).unwrap()).unwrap();
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let solve = |f: f64| {
            let cfg = SourceConfig { q: 2.0, sigma: f * s0, lambda: lambda.clone(), options: SourceOptions::default() };
            solve_source(op, &cfg).unwrap()
        };
        let (u_hi, r_hi) = solve(hi);
        if r_hi.converged() {
            let (u_lo, r_lo) = solve(lo);
            prop_assert!(r_lo.converged());
            let tol = 1e-10 * (1.0 + sup(u_hi.values()));
            for i in 0..u_lo.len() {
                prop_assert!(u_lo.values()[i] <= u_hi.values()[i] + tol);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capacity_is_monotone_and_subadditive(
        a in prop::collection::vec((-3i32..=3, -3i32..=3), 1..4),
        b in prop::collection::vec((-3i32..=3, -3i32..=3), 1..4),
        p in prop::sample::select(vec![1.5, 2.0, 3.0]),
    ) {
        let h = 0.25;
        let pts = |v: &[(i32, i32)]| v.iter().map(|&(i, j)| vec![i as f64 * h, j as f64 * h]).collect::<Vec<_>>();
        let cap = |points: Vec<Vec<f64>>| {
            let mut prob = CapacityProblem::new(2, 1, p, CompactSet::Nodes { points }, h);
            prob.half_width = Some(1.0);
            sobolev_capacity(&prob).unwrap().value
        };
        let (pa, pb) = (pts(&a), pts(&b));
        let union: Vec<Vec<f64>> = pa.iter().chain(&pb).cloned().collect();
        let (ca, cb, cab) = (cap(pa), cap(pb), cap(union));
        let tol = if p == 2.0 { 1e-10 } else { 1e-6 } * (1.0 + cab);
        prop_assert!(ca <= cab + tol, "{} > {}", ca, cab);
        prop_assert!(cb <= cab + tol, "{} > {}", cb, cab);
        prop_assert!(cab <= ca + cb + tol, "{} > {} + {}", cab, ca, cb);
    }
}
