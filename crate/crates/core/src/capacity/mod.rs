//! Sobolev capacities `C_{m,p}` of lattice sets, their dual lower bounds,
//! refinement studies and the analytic removability predicates.
//!
//! The primal estimator minimizes `Σ_{|γ|≤m} ∫|D^γφ|^p` over lattice functions
//! equal to one on the target set and zero on the boundary of a cube. In the
//! quadratic case the energy is diagonal in the sine basis, so the value is
//! the exact Schur complement; otherwise it is minimized iteratively.

mod lattice;
mod spectral;
mod variational;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::absorption::{radial_relaxation_sweep, Nonlinearity, RadialRelaxation, Schedule};
use crate::elliptic::DiscreteOperator;
use crate::error::{Error, Result};
use crate::measure::MeasureData;
use crate::nonlinearity::{boundary_critical_exponent, Location};
use crate::source::random_test_density;

pub use lattice::{default_half_width, BoxLattice, CompactSet};

/// Capacity of a lattice set inside a cube with zero boundary values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityProblem {
    pub n: usize,
    /// Derivative order, 1 or 2.
    pub order: usize,
    pub p: f64,
    pub set: CompactSet,
    pub h: f64,
    /// Cube half-width; defaults to `max(4·diam K + reach, 1)`.
    #[serde(default)]
    pub half_width: Option<f64>,
}

impl CapacityProblem {
    pub fn new(n: usize, order: usize, p: f64, set: CompactSet, h: f64) -> Self {
        CapacityProblem { n, order, p, set, h, half_width: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.order) {
            return Err(Error::config("order", format!("must be 1 or 2, got {}", self.order)));
        }
        if !(self.p > 1.0) {
            return Err(Error::config("p", format!("must exceed 1, got {}", self.p)));
        }
        if !(self.h > 0.0) {
            return Err(Error::config("h", format!("must be positive, got {}", self.h)));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<BoxLattice> {
        BoxLattice::new(self.n, self.half_width.unwrap_or_else(|| default_half_width(&self.set)), self.h)
    }
}

/// How a capacity value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    /// Exact mode sum of the quadratic energy.
    Spectral,
    /// Iteratively reweighted quadratic majorants (`p ≤ 2`).
    Reweighted,
    /// Accelerated projected gradient (`p > 2`).
    Accelerated,
    /// Every interior node is constrained.
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub h: f64,
    pub half_width: f64,
    /// Relative objective decrease at termination.
    pub residual: f64,
    pub iterations: usize,
    pub method: CapacityMethod,
}

const SPECTRAL_MAX_NODES: usize = 64;

/// Primal capacity estimate.
pub fn sobolev_capacity(prob: &CapacityProblem) -> Result<CapacityEstimate> {
    prob.validate()?;
    let lat = prob.lattice()?;
    let nodes = lat.nodes_of(&prob.set)?;
    if nodes.is_empty() {
        return Err(Error::domain("capacity target set has no lattice nodes"));
    }
    let est = |value, residual, iterations, method| CapacityEstimate {
        value,
        h: lat.h,
        half_width: lat.half_width,
        residual,
        iterations,
        method,
    };
    let energy = || variational::Energy::new(&lat, prob.order, prob.p);
    if nodes.len() == lat.len() {
        return Ok(est(energy().saturated_value(), 0.0, 0, CapacityMethod::Saturated));
    }
    if prob.p == 2.0 && nodes.len() <= SPECTRAL_MAX_NODES {
        let value = spectral::quadratic_capacity(&lat, prob.order, &nodes)?;
        return Ok(est(value, 0.0, 1, CapacityMethod::Spectral));
    }
    let energy = energy();
    if prob.p <= 2.0 {
        let m = energy.minimize_reweighted(&nodes)?;
        Ok(est(m.value, m.residual, m.iterations, CapacityMethod::Reweighted))
    } else {
        let m = energy.minimize_accelerated(&nodes)?;
        Ok(est(m.value, m.residual, m.iterations, CapacityMethod::Accelerated))
    }
}

/// Estimates in the default cube and in the cube of twice its half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCheck {
    pub base: CapacityEstimate,
    pub doubled: CapacityEstimate,
    /// `|base − doubled| / doubled`.
    pub relative_change: f64,
}

pub fn box_independence(prob: &CapacityProblem) -> Result<BoxCheck> {
    let base = sobolev_capacity(prob)?;
    let mut wide = prob.clone();
    wide.half_width = Some(2.0 * base.half_width);
    let doubled = sobolev_capacity(&wide)?;
    let relative_change = (base.value - doubled.value).abs() / doubled.value.abs().max(f64::MIN_POSITIVE);
    Ok(BoxCheck { base, doubled, relative_change })
}

/// `sup (μ(K))² / ‖(I − Δ_h)^(−m/2) μ‖²` over nonnegative `μ` on the nodes of `set`.
pub fn dual_capacity_lower(set: &CompactSet, lattice: &BoxLattice, order: usize) -> Result<f64> {
    if !(1..=2).contains(&order) {
        return Err(Error::config("order", format!("must be 1 or 2, got {order}")));
    }
    let nodes = lattice.nodes_of(set)?;
    if nodes.is_empty() {
        return Ok(0.0);
    }
    let gram = spectral::bessel_gram(lattice, order, &nodes);
    let energy = equilibrium_energy(&gram)?;
    Ok(1.0 / energy)
}

/// `min μᵀGμ` over the probability simplex, by an active-set method.
fn equilibrium_energy(g: &DMatrix<f64>) -> Result<f64> {
    let k = g.nrows();
    let mut active: Vec<bool> = vec![true; k];
    for _ in 0..4 * k + 10 {
        let idx: Vec<usize> = (0..k).filter(|&i| active[i]).collect();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| g[(idx[a], idx[b])]);
        let x = sub
            .cholesky()
            .ok_or(Error::Solver { iterations: 0, residual: f64::NAN })?
            .solve(&DVector::from_element(idx.len(), 1.0));
        let total: f64 = x.sum();
        let (worst, &min) =
            x.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("active set is never empty");
        if min < 0.0 && idx.len() > 1 {
            active[idx[worst]] = false;
            continue;
        }
        let mut mu = DVector::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            mu[i] = x[a] / total;
        }
        let gmu = g * &mu;
        let level = mu.dot(&gmu);
        match (0..k).filter(|&i| !active[i]).min_by(|&a, &b| gmu[a].total_cmp(&gmu[b])) {
            Some(j) if gmu[j] < level * (1.0 - 1e-12) => active[j] = true,
            _ => return Ok(level),
        }
    }
    Err(Error::NoConvergence { iterations: 4 * k + 10, reason: "equilibrium measure active set".into() })
}

/// Whether a point singularity of `−Δu + u^q = 0` is removable: interior
/// points for `q ≥ n/(n−2)`, boundary points for `q ≥ (n+1)/(n−1)`.
pub fn removability_predicate(q: f64, n: usize, location: Location) -> bool {
    match location {
        Location::Interior => n >= 3 && q >= n as f64 / (n as f64 - 2.0),
        Location::Boundary => n >= 2 && q >= boundary_critical_exponent(n),
    }
}

/// Sampled margins of the two Adams–Pierre functional inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamsPierre {
    /// `min [k₂∫|Δξ|^p − ∫ξ^p dλ]`.
    pub margin_ii: f64,
    /// `min [k₃∫|Δξ|^p ξ^(1−p) − ∫ξ dλ]`.
    pub margin_iii: f64,
    pub k2: f64,
    pub k3: f64,
    /// Both margins have the same sign.
    pub consistent: bool,
}

const CALIBRATION_SAFETY: f64 = 2.0;
const CALIBRATION_STREAM: u64 = 0x5eed_ca11;

struct Sample {
    energy_ii: f64,
    energy_iii: f64,
    xi: Vec<f64>,
}

fn adams_pierre_samples(op: &DiscreteOperator, p: f64, count: usize, seed: u64) -> Result<Vec<Sample>> {
    let grid = op.grid();
    let vol = grid.cell_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let h = random_test_density(grid, &mut rng);
        if h.iter().all(|&v| v == 0.0) {
            continue;
        }
        let xi = op.solve_rhs(&h, None)?.0;
        let energy_ii = h.iter().map(|v| v.powf(p)).sum::<f64>() * vol;
        let energy_iii = h
            .iter()
            .zip(&xi)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, x)| a.powf(p) * x.max(1e-14).powf(1.0 - p))
            .sum::<f64>()
            * vol;
        out.push(Sample { energy_ii, energy_iii, xi });
    }
    Ok(out)
}

fn pairings(s: &Sample, lam: &[f64], p: f64, vol: f64) -> (f64, f64) {
    let ii = s.xi.iter().zip(lam).map(|(x, l)| x.max(0.0).powf(p) * l).sum::<f64>() * vol;
    let iii = s.xi.iter().zip(lam).map(|(x, l)| x * l).sum::<f64>() * vol;
    (ii, iii)
}

/// Adams–Pierre margins for `λ` with test functions `ξ = 𝔾(h)`, `h` random
/// nonnegative bumps. The constants are twice the largest ratios observed for
/// Lebesgue measure on an independent calibration sample.
pub fn adams_pierre_margin(
    op: &DiscreteOperator,
    lambda: &MeasureData,
    p: f64,
    sample_count: usize,
    seed: u64,
) -> Result<AdamsPierre> {
    if !(p > 1.0) {
        return Err(Error::domain(format!("Adams–Pierre check needs p > 1, got {p}")));
    }
    if !lambda.is_nonnegative() {
        return Err(Error::domain("Adams–Pierre check needs a nonnegative measure"));
    }
    let grid = op.grid();
    let vol = grid.cell_volume();
    let lebesgue = vec![1.0; grid.len()];
    let calibration = adams_pierre_samples(op, p, sample_count, seed ^ CALIBRATION_STREAM)?;
    let (mut k2, mut k3) = (0.0f64, 0.0f64);
    for s in &calibration {
        let (ii, iii) = pairings(s, &lebesgue, p, vol);
        k2 = k2.max(ii / s.energy_ii);
        k3 = k3.max(iii / s.energy_iii);
    }
    k2 *= CALIBRATION_SAFETY;
    k3 *= CALIBRATION_SAFETY;
    let lam = lambda.discretize(grid)?;
    let (mut margin_ii, mut margin_iii) = (f64::INFINITY, f64::INFINITY);
    for s in &adams_pierre_samples(op, p, sample_count, seed)? {
        let (ii, iii) = pairings(s, lam.values(), p, vol);
        margin_ii = margin_ii.min(k2 * s.energy_ii - ii);
        margin_iii = margin_iii.min(k3 * s.energy_iii - iii);
    }
    Ok(AdamsPierre { margin_ii, margin_iii, k2, k3, consistent: (margin_ii >= 0.0) == (margin_iii >= 0.0) })
}

/// One refinement level of a scaling study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub h: f64,
    pub estimate: f64,
    /// `estimate / previous estimate`.
    pub ratio: Option<f64>,
    /// `ln(estimate / previous) / ln(h / previous h)`.
    pub log_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub n: usize,
    pub order: usize,
    pub p: f64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln estimate` against `ln h`.
    pub slope: f64,
}

impl ScalingStudy {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.16e}"));
        let mut s = String::from("h,estimate,ratio,log_ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{:.16e},{:.16e},{},{}\n", r.h, r.estimate, opt(r.ratio), opt(r.log_ratio)));
        }
        s
    }
}

/// Capacity of the single node at the origin for each spacing in `h_list`
/// (strictly decreasing), in the unit cube `[−1, 1]^n`.
pub fn capacity_scaling_study(n: usize, order: usize, p: f64, h_list: &[f64]) -> Result<ScalingStudy> {
    if h_list.is_empty() || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("h_list", "must be nonempty and strictly decreasing"));
    }
    let estimates = h_list
        .par_iter()
        .map(|&h| sobolev_capacity(&CapacityProblem::new(n, order, p, CompactSet::point(n), h)).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ScalingRow> = (0..h_list.len())
        .map(|i| {
            let (ratio, log_ratio) = if i == 0 {
                (None, None)
            } else {
                let r = estimates[i] / estimates[i - 1];
                (Some(r), Some(r.ln() / (h_list[i] / h_list[i - 1]).ln()))
            };
            ScalingRow { h: h_list[i], estimate: estimates[i], ratio, log_ratio }
        })
        .collect();
    let xs: Vec<f64> = h_list.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.ln()).collect();
    let slope = fit_slope(&xs, &ys);
    Ok(ScalingStudy { n, order, p, rows, slope })
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Observed fate of mollified point data `c·δ_0` for `−Δu + u^q = 0` in the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseObservation {
    pub q: f64,
    pub n: usize,
    pub widths: Vec<f64>,
    pub l1_norms: Vec<f64>,
    /// `‖u_ε‖₁` at the narrowest width over the one before.
    pub final_ratio: f64,
    /// The L¹ norm keeps decreasing as the mollification shrinks.
    pub collapsed: bool,
    pub predicted_removable: bool,
}

impl CollapseObservation {
    pub fn agrees(&self) -> bool {
        self.collapsed == self.predicted_removable
    }
}

const COLLAPSE_WIDTHS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const COLLAPSE_RATIO: f64 = 0.99;

/// Radial mollification sweeps (widths 10⁻¹ … 10⁻⁶) compared with the
/// interior removability predicate for each `(q, n)`. Persistence means the
/// L¹ norm settles (last ratio above 0.99); collapse means it keeps falling.
pub fn removability_lattice_check(lattice: &[(f64, usize)], mass: f64) -> Result<Vec<CollapseObservation>> {
    lattice
        .par_iter()
        .map(|&(q, n)| {
            let cfg = RadialRelaxation {
                n,
                nl: Nonlinearity::Power { q },
                mass,
                schedule: Schedule::Mollification(COLLAPSE_WIDTHS.to_vec()),
                cells: 4000,
                r_min: 1e-9,
                probe: 0.5,
                core: 1e-9,
            };
            let report = radial_relaxation_sweep(&cfg)?;
            let l1_norms: Vec<f64> = report.stages.iter().map(|s| s.l1_norm).collect();
            let k = l1_norms.len();
            let final_ratio = l1_norms[k - 1] / l1_norms[k - 2];
            let falling = l1_norms[1..].windows(2).all(|w| w[1] < w[0]);
            Ok(CollapseObservation {
                q,
                n,
                widths: COLLAPSE_WIDTHS.to_vec(),
                l1_norms,
                final_ratio,
                collapsed: falling && final_ratio <= COLLAPSE_RATIO,
                predicted_removable: removability_predicate(q, n, Location::Interior),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::elliptic::{assemble, CoefficientSet};
    use crate::grid::{build_masked_grid, Shape};
    use crate::measure::Density;

    fn point(n: usize, h: f64) -> CapacityProblem {
        CapacityProblem::new(n, 2, 2.0, CompactSet::point(n), h)
    }

    #[test]
    fn point_capacity_refinement() {
        let s = capacity_scaling_study(3, 2, 2.0, &[1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]).unwrap();
        for r in &s.rows[1..] {
            assert!((r.ratio.unwrap() - 1.0).abs() <= 0.15, "{r:?}");
        }
        let s = capacity_scaling_study(5, 2, 2.0, &[1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0]).unwrap();
        for r in &s.rows[1..] {
            assert!((r.ratio.unwrap() - 0.5).abs() <= 0.3, "{r:?}");
        }
        assert!(s.to_csv().starts_with("h,estimate,ratio,log_ratio\n"));
    }

    #[test]
    fn planar_point_capacity_decays_logarithmically() {
        // 1/C grows by ln 2 / 2π per halving of h, the logarithmic capacity of a disk of radius h.
        let s = capacity_scaling_study(2, 1, 2.0, &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]).unwrap();
        for w in s.rows.windows(2) {
            let step = 1.0 / w[1].estimate - 1.0 / w[0].estimate;
            assert!((step / (2f64.ln() / (2.0 * PI)) - 1.0).abs() < 0.05, "{step}");
        }
    }

    #[test]
    fn critical_capacity_decays_slower_than_a_power() {
        let s = capacity_scaling_study(3, 2, 1.5, &[1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0]).unwrap();
        let ratios: Vec<f64> = s.rows[1..].iter().map(|r| r.ratio.unwrap()).collect();
        assert!(ratios.iter().all(|&r| r > 0.8 && r < 1.0), "{ratios:?}");
        assert!(ratios[1] > ratios[0]);
    }

    #[test]
    fn iterative_minimizers_match_the_exact_value() {
        let lat = BoxLattice::new(3, 1.0, 0.125).unwrap();
        let nodes = lat.nodes_of(&CompactSet::point(3)).unwrap();
        let exact = spectral::quadratic_capacity(&lat, 2, &nodes).unwrap();
        let e = variational::Energy::new(&lat, 2, 2.0);
        let rw = e.minimize_reweighted(&nodes).unwrap();
        assert!((rw.value / exact - 1.0).abs() < 1e-9);
        let apg = e.minimize_accelerated(&nodes).unwrap();
        assert!((apg.value / exact - 1.0).abs() < 1e-6);
        assert!(apg.residual <= 1e-8);
        let e = variational::Energy::new(&lat, 2, 1.5);
        let a = e.minimize_reweighted(&nodes).unwrap().value;
        let b = e.minimize_accelerated(&nodes).unwrap().value;
        assert!((a / b - 1.0).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn monotone_and_subadditive() {
        let h = 0.125;
        let a = CompactSet::Nodes { points: vec![vec![0.0, 0.0]] };
        let ab = CompactSet::Nodes { points: vec![vec![0.0, 0.0], vec![0.25, 0.0]] };
        let b = CompactSet::Nodes { points: vec![vec![0.25, 0.0]] };
        let ball = CompactSet::Ball { center: vec![0.0, 0.0], radius: 0.3 };
        for p in [2.0, 3.0, 1.5] {
            let cap = |set: &CompactSet| {
                let mut prob = CapacityProblem::new(2, 1, p, set.clone(), h);
                prob.half_width = Some(1.0);
                sobolev_capacity(&prob).unwrap().value
            };
            let (ca, cb, cab, cball) = (cap(&a), cap(&b), cap(&ab), cap(&ball));
            assert!(ca <= cab + 1e-10 && cab <= cball + 1e-10, "p={p}: {ca} {cab} {cball}");
            assert!(cab <= ca + cb + 1e-8, "p={p}: {cab} > {ca} + {cb}");
        }
    }

    #[test]
    fn larger_box_lowers_the_value() {
        let unit = box_independence(&point(3, 0.125)).unwrap();
        assert!(unit.doubled.value < unit.base.value);
        let mut prob = point(3, 0.125);
        prob.half_width = Some(2.0);
        let check = box_independence(&prob).unwrap();
        assert_eq!(check.base.value, unit.doubled.value);
        assert!(check.doubled.value <= check.base.value);
        assert!(check.relative_change < 0.1, "{check:?}");
    }

    #[test]
    fn saturated_box() {
        let prob = CapacityProblem {
            n: 2,
            order: 1,
            p: 2.0,
            set: CompactSet::Ball { center: vec![0.0, 0.0], radius: 2.0 },
            h: 0.25,
            half_width: Some(1.0),
        };
        let est = sobolev_capacity(&prob).unwrap();
        assert_eq!(est.method, CapacityMethod::Saturated);
        // M² h² from the values plus 2·2·M edge jumps of size 1/h.
        let m = 7.0;
        let expected = m * m * 0.0625 + 4.0 * m * 16.0 * 0.0625;
        assert!((est.value - expected).abs() < 1e-12, "{}", est.value);
        assert!(sobolev_capacity(&CapacityProblem::new(2, 1, 2.0, CompactSet::Empty, 0.25)).is_err());
    }

    #[test]
    fn dual_bound() {
        let lat = BoxLattice::new(3, 1.0, 0.125).unwrap();
        assert_eq!(dual_capacity_lower(&CompactSet::Empty, &lat, 2).unwrap(), 0.0);
        let sets = [
            CompactSet::point(3),
            CompactSet::Nodes { points: vec![vec![0.0; 3], vec![0.25, 0.0, 0.0]] },
            CompactSet::Ball { center: vec![0.0; 3], radius: 0.3 },
        ];
        let mut prev = 0.0;
        for set in &sets {
            let dual = dual_capacity_lower(set, &lat, 2).unwrap();
            let mut prob = CapacityProblem::new(3, 2, 2.0, set.clone(), 0.125);
            prob.half_width = Some(1.0);
            let primal = sobolev_capacity(&prob).unwrap().value;
            assert!(dual > 0.0 && dual >= prev);
            assert!(dual <= 2.0 * primal, "{dual} vs {primal}");
            prev = dual;
        }
    }

    #[test]
    fn predicates() {
        assert!(removability_predicate(3.0, 3, Location::Interior));
        assert!(!removability_predicate(2.0, 3, Location::Interior));
        assert!(removability_predicate(3.0, 2, Location::Boundary));
        assert!(!removability_predicate(2.5, 2, Location::Boundary));
        assert!(!removability_predicate(100.0, 2, Location::Interior));
    }

    #[test]
    fn predicate_matches_mollified_sweeps() {
        let lattice = [(2.0, 3), (3.0, 3), (4.0, 3), (1.5, 4), (2.0, 4), (3.0, 4)];
        for obs in removability_lattice_check(&lattice, 10.0).unwrap() {
            assert!(obs.agrees(), "{obs:?}");
        }
    }

    #[test]
    fn adams_pierre() {
        let g = Arc::new(build_masked_grid(3, Shape::Ball, 0.125).unwrap());
        let op = assemble(&g, &CoefficientSet::laplacian()).unwrap();
        let p = 1.5;
        let zero = adams_pierre_margin(&op, &MeasureData::zero(), p, 20, 1).unwrap();
        assert!(zero.margin_ii >= 0.0 && zero.margin_iii >= 0.0 && zero.consistent);
        let uniform = MeasureData::density(Density::Constant { value: 1.0 });
        for seed in [7, 8] {
            let m = adams_pierre_margin(&op, &uniform, p, 20, seed).unwrap();
            assert!(m.margin_ii >= 0.0 && m.margin_iii >= 0.0, "{m:?}");
        }
        let heavy = MeasureData::dirac(&Shape::Ball, &[0.0, 0.0, 0.0], 1e3).unwrap();
        let m = adams_pierre_margin(&op, &heavy, p, 20, 7).unwrap();
        assert!(m.margin_iii < 0.0, "{m:?}");
    }
}
