//! Boundary traces of grid solutions in the unit disk.
//!
//! Slice integrals run along the distance foliation `Σ_t = {ρ = t}`. Boundary
//! points are classified by the growth of `∫ g(u)ρ` near them, and the regular
//! part of the trace is reconstructed by extrapolating slice densities to `t = 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::absorption::{solve_absorption, AbsorptionOptions, Verdict};
use crate::elliptic::DiscreteOperator;
use crate::error::{Error, Result};
use crate::grid::{foliation_slice, CartesianGrid, GridFunction, Shape};
use crate::measure::MeasureData;
use crate::nonlinearity::Nonlinearity;
use crate::radial_ode::{cap_eigenproblem, singular_exponent};

fn require_disk(grid: &CartesianGrid) -> Result<()> {
    if grid.dim() == 2 && matches!(grid.shape(), Shape::Disk) {
        Ok(())
    } else {
        Err(Error::domain("boundary traces are implemented on the unit disk"))
    }
}

/// `∫_{Σ_t} u · θ(σ(x)) dS` for each `t`, with `σ` the nearest-point projection.
pub fn slice_integrals(u: &GridFunction, theta: &dyn Fn(&[f64; 3]) -> f64, t_list: &[f64]) -> Result<Vec<f64>> {
    let grid = u.grid();
    let weights: Vec<f64> =
        (0..grid.len()).map(|i| u.values()[i] * theta(&grid.project_to_boundary(&grid.node_position(i)))).collect();
    t_list.iter().map(|&t| Ok(foliation_slice(grid, t)?.apply(&weights))).collect()
}

/// Bilinear interpolation of lattice values, using ghost values outside the
/// interior when present and zero otherwise.
pub fn sample(u: &GridFunction, x: &[f64; 3]) -> f64 {
    let grid = u.grid();
    let h = grid.h();
    let base = grid.position([0, 0, 0]);
    let fx = (x[0] - base[0]) / h;
    let fy = (x[1] - base[1]) / h;
    let (i0, j0) = (fx.floor() as i64, fy.floor() as i64);
    let (sx, sy) = (fx - i0 as f64, fy - j0 as f64);
    let value = |i: i64, j: i64| {
        let c = [i, j, 0];
        if let Some(n) = grid.node_at(c) {
            u.values()[n]
        } else if let (Some(g), Some(gv)) = (grid.ghost_at(c), u.ghost_values()) {
            gv[g]
        } else {
            0.0
        }
    };
    (1.0 - sx) * (1.0 - sy) * value(i0, j0)
        + sx * (1.0 - sy) * value(i0 + 1, j0)
        + (1.0 - sx) * sy * value(i0, j0 + 1)
        + sx * sy * value(i0 + 1, j0 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceVerdict {
    Regular,
    Singular,
}

/// Verdict at one boundary node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryNode {
    pub angle: f64,
    pub verdict: TraceVerdict,
    /// The two growth ratios disagree.
    pub low_confidence: bool,
    /// `I(2h)/I(4h)` and `I(h)/I(2h)` for `I(c) = ∫_{B_r(a), ρ ≥ c} g(u)ρ`.
    pub growth: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryClassification {
    pub r_probe: f64,
    /// Sorted by angle.
    pub nodes: Vec<BoundaryNode>,
}

impl BoundaryClassification {
    /// Maximal runs of consecutive singular nodes as `(first angle, last angle)`.
    pub fn singular_arcs(&self) -> Vec<(f64, f64)> {
        let k = self.nodes.len();
        let singular = |i: usize| self.nodes[i % k].verdict == TraceVerdict::Singular;
        if k == 0 || !(0..k).any(singular) {
            return Vec::new();
        }
        if (0..k).all(singular) {
            return vec![(self.nodes[0].angle, self.nodes[k - 1].angle)];
        }
        let start = (0..k).find(|&i| !singular(i)).unwrap_or(0);
        let mut arcs = Vec::new();
        let mut i = start;
        while i < start + k {
            if singular(i) {
                let first = i;
                while i + 1 < start + k && singular(i + 1) {
                    i += 1;
                }
                arcs.push((self.nodes[first % k].angle, self.nodes[i % k].angle));
            }
            i += 1;
        }
        arcs
    }

    /// Verdict of the node nearest in angle.
    pub fn verdict_at(&self, angle: f64) -> TraceVerdict {
        self.nodes
            .iter()
            .min_by(|a, b| angular_gap(a.angle, angle).total_cmp(&angular_gap(b.angle, angle)))
            .map_or(TraceVerdict::Regular, |n| n.verdict)
    }

    pub fn count(&self, verdict: TraceVerdict) -> usize {
        self.nodes.iter().filter(|n| n.verdict == verdict).count()
    }
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

const GROWTH_THRESHOLD: f64 = 1.5;

/// Classify every boundary node `a` by whether `∫_{B_r(a)∩Ω, ρ ≥ c} g(u)ρ`
/// grows by at least 50% each time the inner cutoff `c` halves (`4h → 2h → h`).
pub fn classify_boundary(u: &GridFunction, nl: &Nonlinearity, r_probe: f64) -> Result<BoundaryClassification> {
    let grid = u.grid();
    require_disk(grid)?;
    let h = grid.h();
    if !(r_probe > 8.0 * h) {
        return Err(Error::domain(format!("probe radius {r_probe} must exceed 8h = {}", 8.0 * h)));
    }
    let reach = (r_probe / h).ceil() as i64 + 1;
    let cutoffs = [4.0 * h, 2.0 * h, h];
    let mut nodes: Vec<BoundaryNode> = grid
        .ghosts()
        .par_iter()
        .map(|ghost| {
            let a = ghost.point;
            let mut integrals = [0.0f64; 3];
            for di in -reach..=reach {
                for dj in -reach..=reach {
                    let c = [ghost.coord[0] + di, ghost.coord[1] + dj, 0];
                    let Some(i) = grid.node_at(c) else { continue };
                    let x = grid.node_position(i);
                    if (x[0] - a[0]).hypot(x[1] - a[1]) >= r_probe {
                        continue;
                    }
                    let rho = grid.rho()[i];
                    let w = nl.eval(u.values()[i]).max(0.0) * rho;
                    for (k, &cut) in cutoffs.iter().enumerate() {
                        if rho >= cut {
                            integrals[k] += w;
                        }
                    }
                }
            }
            let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else if num > 0.0 { f64::INFINITY } else { 1.0 };
            let growth = [ratio(integrals[1], integrals[0]), ratio(integrals[2], integrals[1])];
            let fires = growth.map(|g| g >= GROWTH_THRESHOLD);
            BoundaryNode {
                angle: a[1].atan2(a[0]).rem_euclid(2.0 * PI),
                verdict: if fires[1] { TraceVerdict::Singular } else { TraceVerdict::Regular },
                low_confidence: fires[0] != fires[1],
                growth,
            }
        })
        .collect();
    nodes.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    Ok(BoundaryClassification { r_probe, nodes })
}

/// Atom of a reconstructed trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceAtom {
    pub angle: f64,
    pub mass: f64,
    /// Half-width of the angular window assigned to the atom.
    pub window: f64,
}

/// Reconstructed boundary trace: a density in the polar angle plus atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeasure {
    pub t: [f64; 2],
    pub angles: Vec<f64>,
    /// Extrapolated density of the regular part; zero on singular bins.
    pub density: Vec<f64>,
    pub singular: Vec<bool>,
    pub atoms: Vec<TraceAtom>,
}

impl TraceMeasure {
    fn bin(&self) -> f64 {
        2.0 * PI / self.angles.len() as f64
    }

    /// Mass of the absolutely continuous part.
    pub fn regular_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.regular_mass() + self.atom_mass()
    }

    /// `∫ |density − f| dφ` against a reference density in the angle.
    pub fn l1_distance(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.angles.iter().zip(&self.density).map(|(&a, &d)| (d - f(a)).abs()).sum::<f64>() * self.bin()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("angle,density,singular\n");
        for i in 0..self.angles.len() {
            s.push_str(&format!("{:.16e},{:.16e},{}\n", self.angles[i], self.density[i], self.singular[i] as u8));
        }
        for a in &self.atoms {
            s.push_str(&format!("# atom {:.16e},{:.16e},{:.16e}\n", a.angle, a.mass, a.window));
        }
        s
    }
}

const ATOM_PEAK_RATIO: f64 = 10.0;
const ATOM_STABILITY: f64 = 0.1;
const ATOM_WINDOW: f64 = 5.0;

/// Slice density `(1 − t) u((1 − t)e^{iφ})` on the bin centres.
fn slice_density(u: &GridFunction, t: f64, angles: &[f64]) -> Vec<f64> {
    angles.iter().map(|&a| (1.0 - t) * sample(u, &[(1.0 - t) * a.cos(), (1.0 - t) * a.sin(), 0.0])).collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

/// Reconstruct the trace from slice densities at the two smallest levels of
/// `t_list`, extrapolated linearly to `t = 0`. Atoms are peaks of the finest
/// slice density above ten times its median that grow as `t` halves while
/// their window integral (half-width five times the coarser level) changes by
/// less than 10%.
pub fn trace_measure(u: &GridFunction, t_list: &[f64], classification: Option<&BoundaryClassification>) -> Result<TraceMeasure> {
    let grid = u.grid();
    require_disk(grid)?;
    let mut ts: Vec<f64> = t_list.to_vec();
    ts.sort_by(f64::total_cmp);
    if ts.len() < 2 || !(ts[0] > 0.0) || ts[1] >= 1.0 || ts[0] == ts[1] {
        return Err(Error::domain("trace reconstruction needs two distinct levels in (0, 1)"));
    }
    let (fine, coarse) = (ts[0], ts[1]);
    let bins = ((2.0 * PI / grid.h()).round() as usize).max(16);
    let dphi = 2.0 * PI / bins as f64;
    let angles: Vec<f64> = (0..bins).map(|j| (j as f64 + 0.5) * dphi).collect();
    let f_fine = slice_density(u, fine, &angles);
    let f_coarse = slice_density(u, coarse, &angles);
    let extrapolate = |a: f64, b: f64| (coarse * a - fine * b) / (coarse - fine);
    let mut density: Vec<f64> = f_fine.iter().zip(&f_coarse).map(|(&a, &b)| extrapolate(a, b)).collect();

    let half = ((ATOM_WINDOW * coarse / dphi).ceil() as usize).min(bins / 4);
    let window_sum = |f: &[f64], c: usize| (0..=2 * half).map(|o| f[(c + bins + o - half) % bins]).sum::<f64>() * dphi;
    let level = ATOM_PEAK_RATIO * median(&f_fine);
    let mut order: Vec<usize> = (0..bins).collect();
    order.sort_by(|&a, &b| f_fine[b].total_cmp(&f_fine[a]));
    let mut covered = vec![false; bins];
    let mut atoms = Vec::new();
    for &c in &order {
        if f_fine[c] <= level {
            break;
        }
        let local_max = f_fine[c] >= f_fine[(c + 1) % bins] && f_fine[c] >= f_fine[(c + bins - 1) % bins];
        if covered[c] || !local_max || f_fine[c] <= f_coarse[c] {
            continue;
        }
        let (wf, wc) = (window_sum(&f_fine, c), window_sum(&f_coarse, c));
        if (wf - wc).abs() >= ATOM_STABILITY * wf.abs() {
            continue;
        }
        let lo = (c + bins - half - 1) % bins;
        let hi = (c + half + 1) % bins;
        let (dl, dh) = (density[lo], density[hi]);
        let mut regular = 0.0;
        for o in 0..=2 * half {
            let j = (c + bins + o - half) % bins;
            let s = (o + 1) as f64 / (2 * half + 2) as f64;
            density[j] = dl + s * (dh - dl);
            regular += density[j] * dphi;
            covered[j] = true;
        }
        atoms.push(TraceAtom { angle: angles[c], mass: extrapolate(wf, wc) - regular, window: (half as f64 + 0.5) * dphi });
    }
    let singular: Vec<bool> = angles
        .iter()
        .map(|&a| classification.is_some_and(|cl| cl.verdict_at(a) == TraceVerdict::Singular))
        .collect();
    for (d, &s) in density.iter_mut().zip(&singular) {
        if s {
            *d = 0.0;
        }
    }
    atoms.retain(|a| !classification.is_some_and(|cl| cl.verdict_at(a.angle) == TraceVerdict::Singular));
    Ok(TraceMeasure { t: [fine, coarse], angles, density, singular, atoms })
}

/// One stage `k` of the minorant sequence `u_{kδ_a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinorantStage {
    pub k: f64,
    /// Value at the interior probe on the inward normal.
    pub probe_value: f64,
    pub sup_value: f64,
    pub iterations: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantStudy {
    pub q: f64,
    pub probe_distance: f64,
    pub stages: Vec<MinorantStage>,
    /// Node-wise decreases from one stage to the next, summed over stages.
    pub order_violations: usize,
    /// `(distance, value)` on the inward normal from `a` for the last stage.
    pub ray: Vec<(f64, f64)>,
    /// Log-log slope of `ray`.
    pub ray_slope: f64,
    /// `exp` of the log-log intercept: the fitted `C` in `u ≈ C d^slope`.
    pub ray_prefactor: f64,
    /// Pole value of the spherical-cap profile, when it exists.
    pub cap_pole_value: Option<f64>,
}

impl MinorantStudy {
    /// Successive increments of the probe value.
    pub fn probe_increments(&self) -> Vec<f64> {
        self.stages.windows(2).map(|w| w[1].probe_value - w[0].probe_value).collect()
    }

    /// Successive relative increments of the supremum.
    pub fn sup_increments(&self) -> Vec<f64> {
        self.stages.windows(2).map(|w| (w[1].sup_value - w[0].sup_value) / w[1].sup_value).collect()
    }
}

/// Solve `−Δu + u^q = 0`, `u = kδ_a` on the boundary, for increasing `k`, and
/// compare the profile along the inward normal at distances in `ray_range`
/// with the separable form `C d^(−2/(q−1))`.
pub fn strong_singularity_minorant(
    op: &DiscreteOperator,
    q: f64,
    a: &[f64],
    k_list: &[f64],
    probe_distance: f64,
    ray_range: (f64, f64),
) -> Result<MinorantStudy> {
    let grid = op.grid();
    require_disk(grid)?;
    if k_list.is_empty() || k_list.windows(2).any(|w| w[1] <= w[0]) || k_list[0] <= 0.0 {
        return Err(Error::config("k_list", "must be positive and strictly increasing"));
    }
    let nl = Nonlinearity::Power { q };
    let norm = a[0].hypot(a[1]);
    let normal = [a[0] / norm, a[1] / norm];
    let inward = |d: f64| [normal[0] * (1.0 - d), normal[1] * (1.0 - d), 0.0];
    let opts = AbsorptionOptions::default();
    let mut stages = Vec::with_capacity(k_list.len());
    let mut previous: Option<GridFunction> = None;
    let mut order_violations = 0;
    for &k in k_list {
        let mu = MeasureData::boundary_dirac(grid.shape(), &normal, k)?;
        let (u, report) = solve_absorption(op, &nl, &MeasureData::zero(), &mu, &opts)?;
        if let Some(prev) = &previous {
            order_violations += u.values().iter().zip(prev.values()).filter(|(x, y)| x < y).count();
        }
        stages.push(MinorantStage {
            k,
            probe_value: sample(&u, &inward(probe_distance)),
            sup_value: u.sup_abs(),
            iterations: report.iterations,
            verdict: report.verdict,
        });
        previous = Some(u);
    }
    let last = previous.expect("k_list is nonempty");
    let count = 16;
    let ray: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let d = ray_range.0 * (ray_range.1 / ray_range.0).powf(i as f64 / (count - 1) as f64);
            (d, sample(&last, &inward(d)))
        })
        .collect();
    let xs: Vec<f64> = ray.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = ray.iter().map(|p| p.1.max(f64::MIN_POSITIVE).ln()).collect();
    let (ray_slope, intercept) = linear_fit(&xs, &ys);
    let cap_pole_value = cap_eigenproblem(q, 2, 1e-12)?.map(|p| p.pole_value);
    Ok(MinorantStudy {
        q,
        probe_distance,
        stages,
        order_violations,
        ray,
        ray_slope,
        ray_prefactor: intercept.exp(),
        cap_pole_value,
    })
}

/// Least-squares `(slope, intercept)`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Expected normal-ray slope `−2/(q−1)`.
pub fn separable_slope(q: f64) -> f64 {
    -singular_exponent(q)
}

/// Slice masses of the solutions with mollified boundary data `c·δ_a` (bump
/// half-width `ε`), one row per width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifiedTrace {
    pub q: f64,
    pub weight: f64,
    pub widths: Vec<f64>,
    /// Reconstructed trace mass per width.
    pub masses: Vec<f64>,
}

impl MollifiedTrace {
    /// Last mass over the first.
    pub fn decay(&self) -> f64 {
        self.masses[self.masses.len() - 1] / self.masses[0]
    }
}

/// Trace masses recovered from `t_list` for `−Δu + u^q = 0` with boundary data
/// `weight` times a unit bump of half-width `ε` at `a`, for each `ε` in `widths`.
pub fn mollified_boundary_trace(
    op: &DiscreteOperator,
    q: f64,
    a: &[f64],
    weight: f64,
    widths: &[f64],
    t_list: &[f64],
) -> Result<MollifiedTrace> {
    let grid: &Arc<CartesianGrid> = op.grid();
    require_disk(grid)?;
    let nl = Nonlinearity::Power { q };
    let opts = AbsorptionOptions::default();
    let masses = widths
        .iter()
        .map(|&eps| {
            let mu = MeasureData::boundary_dirac(grid.shape(), a, weight)?.mollify(eps);
            let (u, report) = solve_absorption(op, &nl, &MeasureData::zero(), &mu, &opts)?;
            if !report.converged() {
                return Err(Error::Solver { iterations: report.iterations, residual: report.residual });
            }
            Ok(trace_measure(&u, t_list, None)?.total_mass())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MollifiedTrace { q, weight, widths: widths.to_vec(), masses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{assemble, poisson_potential, CoefficientSet};
    use crate::grid::build_masked_grid;
    use crate::measure::BoundaryDensity;

    fn disk(h: f64) -> DiscreteOperator {
        let g = Arc::new(build_masked_grid(2, Shape::Disk, h).unwrap());
        assemble(&g, &CoefficientSet::laplacian()).unwrap()
    }

    fn constant(op: &DiscreteOperator, c: f64) -> GridFunction {
        let g = op.grid();
        GridFunction::new(Arc::clone(g), vec![c; g.len()]).unwrap().with_ghost_values(vec![c; g.ghosts().len()]).unwrap()
    }

    fn poisson_of_dirac(op: &DiscreteOperator, w: f64) -> GridFunction {
        poisson_potential(op, &MeasureData::boundary_dirac(&Shape::Disk, &[1.0, 0.0], w).unwrap()).unwrap()
    }

    #[test]
    fn slices_of_a_constant_measure_the_leaf_length() {
        let op = disk(1.0 / 64.0);
        let u = constant(&op, 1.0);
        let t = [0.1, 0.2, 0.4];
        for (s, t) in slice_integrals(&u, &|_| 1.0, &t).unwrap().iter().zip(t) {
            let exact = 2.0 * PI * (1.0 - t);
            assert!((s / exact - 1.0).abs() < 0.05, "t={t}: {s} vs {exact}");
        }
    }

    #[test]
    fn constant_has_constant_density() {
        let op = disk(1.0 / 64.0);
        let tm = trace_measure(&constant(&op, 3.0), &[0.1, 0.05], None).unwrap();
        assert!(tm.atoms.is_empty());
        assert!(tm.density.iter().all(|d| (d / 3.0 - 1.0).abs() < 0.02));
        let zero = trace_measure(&constant(&op, 0.0), &[0.1, 0.05], None).unwrap();
        assert_eq!(zero.total_mass(), 0.0);
    }

    #[test]
    fn harmonic_extension_returns_its_boundary_density() {
        let op = disk(1.0 / 64.0);
        let mu = MeasureData::boundary_density(BoundaryDensity::Cosine { mean: 1.0, amplitude: 0.5, mode: 2.0 });
        let u = poisson_potential(&op, &mu).unwrap();
        let tm = trace_measure(&u, &[0.1, 0.05], None).unwrap();
        assert!(tm.atoms.is_empty());
        let err = tm.l1_distance(|phi| 1.0 + 0.5 * (2.0 * phi).cos());
        assert!(err < 0.05 * 2.0 * PI, "{err}");
    }

    #[test]
    fn poisson_kernel_concentrates_into_an_atom() {
        let op = disk(1.0 / 128.0);
        let u = poisson_of_dirac(&op, 1.0);
        let s = slice_integrals(&u, &|_| 1.0, &[0.05]).unwrap()[0];
        assert!((s - 1.0).abs() < 0.05, "{s}");
        let tm = trace_measure(&u, &[0.05, 0.025], None).unwrap();
        assert_eq!(tm.atoms.len(), 1);
        let atom = tm.atoms[0];
        assert!(angular_gap(atom.angle, 0.0) < 0.05);
        assert!((atom.mass - 1.0).abs() < 0.05, "{}", atom.mass);
        assert!(tm.regular_mass().abs() < 0.05);
    }

    #[test]
    fn trace_is_linear() {
        let op = disk(1.0 / 64.0);
        let mu = MeasureData::boundary_density(BoundaryDensity::Cosine { mean: 0.0, amplitude: 1.0, mode: 3.0 });
        let a = poisson_potential(&op, &mu).unwrap();
        let b = constant(&op, 1.0);
        let combo = GridFunction::new(
            Arc::clone(op.grid()),
            a.values().iter().zip(b.values()).map(|(x, y)| x - 2.0 * y).collect(),
        )
        .unwrap()
        .with_ghost_values(a.ghost_values().unwrap().iter().zip(b.ghost_values().unwrap()).map(|(x, y)| x - 2.0 * y).collect())
        .unwrap();
        let t = [0.1, 0.05];
        let (ta, tb, tc) =
            (trace_measure(&a, &t, None).unwrap(), trace_measure(&b, &t, None).unwrap(), trace_measure(&combo, &t, None).unwrap());
        for ((x, y), z) in ta.density.iter().zip(&tb.density).zip(&tc.density) {
            assert!((x - 2.0 * y - z).abs() < 1e-10);
        }
    }

    #[test]
    fn finite_boundary_mass_is_a_regular_trace_point() {
        let op = disk(1.0 / 64.0);
        let nl = Nonlinearity::Power { q: 2.0 };
        let mu = MeasureData::boundary_dirac(&Shape::Disk, &[1.0, 0.0], 1.0).unwrap();
        let (u, rep) = solve_absorption(&op, &nl, &MeasureData::zero(), &mu, &AbsorptionOptions::default()).unwrap();
        assert!(rep.converged());
        let cls = classify_boundary(&u, &nl, 0.25).unwrap();
        assert_eq!(cls.count(TraceVerdict::Singular), 0);
        assert_eq!(cls.verdict_at(0.0), TraceVerdict::Regular);
        let zero = classify_boundary(&constant(&op, 0.0), &nl, 0.25).unwrap();
        assert_eq!(zero.count(TraceVerdict::Singular), 0);
        assert!(classify_boundary(&u, &nl, 0.1).is_err());
    }

    #[test]
    fn saturated_minorant_is_a_singular_trace_point() {
        let op = disk(1.0 / 64.0);
        let nl = Nonlinearity::Power { q: 2.0 };
        let mu = MeasureData::boundary_dirac(&Shape::Disk, &[1.0, 0.0], 4096.0).unwrap();
        let (u, _) = solve_absorption(&op, &nl, &MeasureData::zero(), &mu, &AbsorptionOptions::default()).unwrap();
        let cls = classify_boundary(&u, &nl, 0.25).unwrap();
        assert_eq!(cls.verdict_at(0.0), TraceVerdict::Singular);
        let far = cls.nodes.iter().filter(|n| angular_gap(n.angle, 0.0) > 0.5);
        assert!(far.clone().all(|n| n.verdict == TraceVerdict::Regular));
        let arcs = cls.singular_arcs();
        assert!(!arcs.is_empty() && arcs.iter().all(|(lo, hi)| angular_gap(*lo, 0.0) < 0.5 && angular_gap(*hi, 0.0) < 0.5));
    }

    #[test]
    fn minorant_increases_to_the_separable_profile() {
        let op = disk(1.0 / 64.0);
        let st = strong_singularity_minorant(&op, 2.0, &[1.0, 0.0], &[1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0], 0.5, (0.05, 0.2))
                .unwrap();
        assert_eq!(st.order_violations, 0);
        assert!(st.stages.iter().all(|s| s.verdict == Verdict::Converged));
        let inc = st.probe_increments();
        assert!(inc.iter().all(|&d| d > 0.0));
        assert!(inc[2..].windows(2).all(|w| w[1] < w[0]), "{inc:?}");
        assert_eq!(separable_slope(2.0), -2.0);
        assert!((st.ray_slope / separable_slope(2.0) - 1.0).abs() < 0.15, "{}", st.ray_slope);
        assert!(st.cap_pole_value.is_some());
        assert!(strong_singularity_minorant(&op, 2.0, &[1.0, 0.0], &[4.0, 1.0], 0.1, (0.05, 0.2)).is_err());
    }

    #[test]
    fn supercritical_mollified_trace_collapses() {
        let op = disk(1.0 / 64.0);
        let widths = [0.4, 0.1, 0.025];
        let sup = mollified_boundary_trace(&op, 3.5, &[1.0, 0.0], 100.0, &widths, &[0.05, 0.025]).unwrap();
        assert!(sup.masses.windows(2).all(|w| w[1] < w[0]), "{:?}", sup.masses);
        assert!(sup.decay() < 0.35, "{}", sup.decay());
        let sub = mollified_boundary_trace(&op, 3.5, &[1.0, 0.0], 1.0, &widths, &[0.05, 0.025]).unwrap();
        assert!(sub.masses.iter().all(|m| (m - 1.0).abs() < 0.1), "{:?}", sub.masses);
    }
}
