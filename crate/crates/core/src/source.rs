//! Source problems `Lu = u₊^q + σλ` in Ω, `u = 0` on ∂Ω, with `λ ≥ 0`.
//!
//! Solutions are built by the monotone iteration `u_{m+1} = 𝔾(u_m^q) + 𝔾(σλ)`
//! from `u_0 = 0`. The sufficiency constant `C₀` bounds `𝔾((𝔾λ)^q) ≤ C₀ 𝔾λ`
//! and yields the threshold `σ₀`; below it `θ*𝔾(σλ)` is a supersolution.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::absorption::{SolveReport, Verdict};
use crate::elliptic::DiscreteOperator;
use crate::error::{Error, Result};
use crate::grid::{CartesianGrid, GridFunction};
use crate::measure::MeasureData;

const POSITIVE_FLOOR: f64 = 1e-14;

/// Iteration controls for the source iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceOptions {
    pub max_iter: usize,
    /// Blow-up cap as a multiple of `1 + sup 𝔾(σλ)`.
    pub blow_up_factor: f64,
    /// Relative sup-norm tolerance on the increment.
    pub tol: f64,
}

impl Default for SourceOptions {
    fn default() -> Self {
        SourceOptions { max_iter: 500, blow_up_factor: 1e6, tol: 1e-10 }
    }
}

/// A source problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub q: f64,
    pub sigma: f64,
    pub lambda: MeasureData,
    pub options: SourceOptions,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0) {
            return Err(Error::config("q", format!("must exceed 1, got {}", self.q)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::config("sigma", format!("must be nonnegative, got {}", self.sigma)));
        }
        if !self.lambda.is_nonnegative() {
            return Err(Error::config("lambda", "source data must be a nonnegative measure"));
        }
        Ok(())
    }
}

fn green_nodal(op: &DiscreteOperator, f: &[f64]) -> Result<Vec<f64>> {
    if f.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; f.len()]);
    }
    Ok(op.solve_rhs(f, None)?.0)
}

fn green_of(op: &DiscreteOperator, lambda: &MeasureData) -> Result<Vec<f64>> {
    green_nodal(op, lambda.discretize(op.grid())?.values())
}

fn pow_pos(v: &[f64], q: f64) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0).powf(q)).collect()
}

/// `max 𝔾((𝔾λ)^q)/𝔾λ` over nodes where `𝔾λ` is not negligible.
pub fn estimate_c0(op: &DiscreteOperator, lambda: &MeasureData, q: f64) -> Result<f64> {
    if !lambda.is_nonnegative() {
        return Err(Error::domain("C₀ needs nonnegative data"));
    }
    let w = green_of(op, lambda)?;
    let ww = green_nodal(op, &pow_pos(&w, q))?;
    let c0 = w
        .iter()
        .zip(&ww)
        .filter(|(a, _)| **a >= POSITIVE_FLOOR)
        .fold(0.0f64, |m, (a, b)| m.max(b / a));
    if c0 == 0.0 {
        return Err(Error::domain("Green potential of the data vanishes"));
    }
    Ok(c0)
}

/// `σ₀ = (q−1)/(q (C₀ q)^(1/(q−1)))`, the largest scale for which some `θ > 1`
/// makes `θ𝔾(σλ)` a supersolution.
pub fn sigma_threshold(q: f64, c0: f64) -> Result<f64> {
    if !(q > 1.0) || !(c0 > 0.0) {
        return Err(Error::domain(format!("threshold needs q > 1 and C₀ > 0, got q={q}, C₀={c0}")));
    }
    Ok((q - 1.0) / (q * (c0 * q).powf(1.0 / (q - 1.0))))
}

/// Largest admissible scale `((θ−1)/(C₀ θ^q))^(1/(q−1))` for a given `θ > 1`.
pub fn admissible_scale(q: f64, c0: f64, theta: f64) -> f64 {
    ((theta - 1.0) / (c0 * theta.powf(q))).max(0.0).powf(1.0 / (q - 1.0))
}

/// Maximize `admissible_scale` over `θ > 1` by a coarse scan refined with
/// golden-section search; returns `(θ_opt, σ_max)`.
pub fn theta_scan(q: f64, c0: f64) -> (f64, f64) {
    let f = |t: f64| admissible_scale(q, c0, t);
    let grid: Vec<f64> = (1..=4000).map(|i| 1.0 + i as f64 * 1e-3 * (1.0 + 10.0 / (q - 1.0))).collect();
    let best = grid.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &t)| if f(t) > b.1 { (i, f(t)) } else { b });
    let mut lo = if best.0 == 0 { 1.0 } else { grid[best.0 - 1] };
    let mut hi = grid[(best.0 + 1).min(grid.len() - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-14 * hi {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = f(a);
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

/// Smallest `θ > 1` with `θ^q σ^(q−1) C₀ = θ − 1`, the supersolution factor.
/// `None` when `σ` exceeds the threshold.
pub fn supersolution_factor(q: f64, c0: f64, sigma: f64) -> Option<f64> {
    if sigma == 0.0 {
        return Some(1.0);
    }
    let k = sigma.powf(q - 1.0) * c0;
    let phi = |t: f64| t - 1.0 - k * t.powf(q);
    let (mut lo, mut hi) = (1.0, q / (q - 1.0));
    if phi(hi) < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Monotone iteration for `Lu = u₊^q + σλ`. Increments are computed as
/// `𝔾(u_m^q − u_{m−1}^q)` and projected onto the nonnegative cone.
pub fn solve_source(op: &DiscreteOperator, cfg: &SourceConfig) -> Result<(GridFunction, SolveReport)> {
    cfg.validate()?;
    let grid = op.grid();
    let n = grid.len();
    let opts = cfg.options;
    let base = green_of(op, &cfg.lambda.scale(cfg.sigma))?;
    let cap = opts.blow_up_factor * (1.0 + base.iter().cloned().fold(0.0, f64::max));
    let mut report = SolveReport::default();
    let mut u = base.clone();
    let mut prev_pow = vec![0.0; n];
    let mut verdict = Verdict::Stalled;
    if base.iter().all(|&v| v == 0.0) {
        verdict = Verdict::Converged;
    } else {
        for _ in 0..opts.max_iter {
            report.iterations += 1;
            let pow = pow_pos(&u, cfg.q);
            let diff: Vec<f64> = pow.iter().zip(&prev_pow).map(|(a, b)| (a - b).max(0.0)).collect();
            let inc = green_nodal(op, &diff)?;
            let mut step = 0.0f64;
            for (ui, di) in u.iter_mut().zip(&inc) {
                let d = di.max(0.0);
                *ui += d;
                step = step.max(d);
            }
            prev_pow = pow;
            let usup = u.iter().cloned().fold(0.0, f64::max);
            report.residual = step;
            report.residual_history.push(step);
            if !usup.is_finite() || usup > cap {
                verdict = Verdict::Diverged;
                break;
            }
            if step <= opts.tol * (1.0 + usup) {
                verdict = Verdict::Converged;
                break;
            }
        }
    }
    report.verdict = verdict;
    Ok((GridFunction::new(Arc::clone(grid), u)?, report))
}

/// `min_x [ 𝔾(σλ)/(q−1) − 𝔾((𝔾(σλ))^q) ]`.
pub fn necessary_check(op: &DiscreteOperator, sigma_lambda: &MeasureData, q: f64) -> Result<f64> {
    let w = green_of(op, sigma_lambda)?;
    let ww = green_nodal(op, &pow_pos(&w, q))?;
    let c1 = 1.0 / (q - 1.0);
    Ok(w.iter().zip(&ww).fold(f64::INFINITY, |m, (a, b)| m.min(c1 * a - b)))
}

/// Random nonnegative test density: three quartic bumps with positive weights.
pub(crate) fn random_test_density(grid: &CartesianGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = grid.dim();
    let h = grid.h();
    let mut out = vec![0.0; grid.len()];
    for _ in 0..3 {
        let eps = rng.gen_range((4.0 * h).min(0.4)..=0.5);
        let candidates: Vec<usize> = (0..grid.len()).filter(|&i| grid.rho()[i] >= 0.5 * eps).collect();
        if candidates.is_empty() {
            continue;
        }
        let centre = grid.node_position(candidates[rng.gen_range(0..candidates.len())]);
        let weight = rng.gen_range(0.1..1.0);
        for (i, v) in out.iter_mut().enumerate() {
            let x = grid.node_position(i);
            let d2: f64 = (0..dim).map(|k| (x[k] - centre[k]).powi(2)).sum::<f64>() / (eps * eps);
            if d2 < 1.0 {
                *v += weight * (1.0 - d2).powi(2);
            }
        }
    }
    out
}

/// Smallest sampled value of
/// `((q−1)/q^{q'}) ∫ (L*ξ)^{q'}/ξ^{q'−1} − σ ∫ ξ dλ` over `ξ = 𝔾_{L*}(h)`.
pub fn dual_condition_margin(
    op: &DiscreteOperator,
    lambda: &MeasureData,
    q: f64,
    sigma: f64,
    sample_count: usize,
    seed: u64,
) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::domain(format!("dual condition needs q > 1, got {q}")));
    }
    let grid = op.grid();
    let vol = grid.cell_volume();
    let qp = q / (q - 1.0);
    let coef = (q - 1.0) / q.powf(qp);
    let lam = lambda.discretize(grid)?;
    let adj = op.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    for _ in 0..sample_count {
        let h = random_test_density(grid, &mut rng);
        if h.iter().all(|&v| v == 0.0) {
            continue;
        }
        let xi = adj.solve_rhs(&h, None)?.0;
        let energy: f64 = h
            .iter()
            .zip(&xi)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, x)| a.powf(qp) / x.max(POSITIVE_FLOOR).powf(qp - 1.0))
            .sum::<f64>()
            * vol;
        let pairing: f64 = xi.iter().zip(lam.values()).map(|(x, l)| x * l).sum::<f64>() * vol;
        margin = margin.min(coef * energy - sigma * pairing);
    }
    Ok(margin)
}

/// One row of the ball-scaling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallScaling {
    pub radius: f64,
    pub mass: f64,
    pub ratio: f64,
}

/// `λ(B_r(x₀)) / r^(n − 2q')`, or `λ(B_r) / log(2/r)^(1−q')` when `n = 2q'`.
/// Atoms are counted exactly and densities by nodal quadrature.
pub fn ball_measure_scaling_check(
    grid: &Arc<CartesianGrid>,
    lambda: &MeasureData,
    q: f64,
    centre: &[f64],
    radii: &[f64],
) -> Result<Vec<BallScaling>> {
    let n = grid.dim();
    if n < 3 || q < n as f64 / (n as f64 - 2.0) - 1e-12 {
        return Err(Error::domain(format!("ball scaling needs n ≥ 3 and q ≥ n/(n−2), got n={n}, q={q}")));
    }
    let qp = q / (q - 1.0);
    let expo = n as f64 - 2.0 * qp;
    let atomless = MeasureData { atoms: Vec::new(), ..lambda.interior() };
    let dens_only = atomless.discretize(grid)?;
    let dist = |x: &[f64]| x.iter().zip(centre).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    radii
        .iter()
        .map(|&r| {
            let atoms: f64 = lambda.atoms.iter().filter(|a| dist(&a.x) < r).map(|a| a.w).sum();
            let density: f64 = (0..grid.len())
                .filter(|&i| dist(&grid.node_position(i)[..n]) < r)
                .map(|i| dens_only.values()[i])
                .sum::<f64>()
                * grid.cell_volume();
            let mass = atoms + density;
            let scale = if expo.abs() < 1e-12 { (2.0 / r).ln().powf(1.0 - qp) } else { r.powf(expo) };
            Ok(BallScaling { radius: r, mass, ratio: mass / scale })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{assemble, CoefficientSet};
    use crate::grid::{build_masked_grid, Shape};
    use crate::measure::Density;

    fn ball(h: f64) -> DiscreteOperator {
        let g = Arc::new(build_masked_grid(3, Shape::Ball, h).unwrap());
        assemble(&g, &CoefficientSet::laplacian()).unwrap()
    }

    fn disk(h: f64) -> DiscreteOperator {
        let g = Arc::new(build_masked_grid(2, Shape::Disk, h).unwrap());
        assemble(&g, &CoefficientSet::laplacian()).unwrap()
    }

    #[test]
    fn threshold_closed_form_matches_scan() {
        for (q, c0) in [(2.0, 1.0), (2.0, 2.0), (3.0, 0.7), (1.5, 4.0)] {
            let s = sigma_threshold(q, c0).unwrap();
            let (t, m) = theta_scan(q, c0);
            assert!((s - m).abs() < 1e-10 * s, "{q} {c0}: {s} vs {m}");
            assert!((t - q / (q - 1.0)).abs() < 1e-5);
        }
        assert_eq!(sigma_threshold(2.0, 1.0).unwrap(), 0.25);
        assert_eq!(sigma_threshold(2.0, 2.0).unwrap(), 0.125);
        let s: Vec<f64> = [1.0, 10.0, 100.0, 1e6].iter().map(|c| sigma_threshold(2.5, *c).unwrap()).collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn supersolution_factor_solves_the_balance() {
        let (q, c0) = (2.0, 1.5);
        let s0 = sigma_threshold(q, c0).unwrap();
        let t = supersolution_factor(q, c0, 0.5 * s0).unwrap();
        assert!((t.powf(q) * (0.5 * s0).powf(q - 1.0) * c0 - (t - 1.0)).abs() < 1e-12);
        assert!(supersolution_factor(q, c0, 1.01 * s0).is_none());
    }

    #[test]
    fn c0_is_homogeneous_and_refinement_stable() {
        let q = 2.0;
        let lam = MeasureData::density(Density::Constant { value: 1.0 });
        let op = disk(1.0 / 32.0);
        let c = estimate_c0(&op, &lam, q).unwrap();
        let c2 = estimate_c0(&op, &lam.scale(2.0), q).unwrap();
        assert!((c2 / c - 2f64.powf(q - 1.0)).abs() < 1e-8);
        let fine = estimate_c0(&disk(1.0 / 64.0), &lam, q).unwrap();
        assert!((fine / c - 1.0).abs() < 0.1, "{c} {fine}");
    }

    #[test]
    fn zero_scale_gives_zero_solution() {
        let op = disk(1.0 / 16.0);
        let cfg = SourceConfig {
            q: 2.0,
            sigma: 0.0,
            lambda: MeasureData::density(Density::Constant { value: 1.0 }),
            options: SourceOptions::default(),
        };
        let (u, rep) = solve_source(&op, &cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Converged);
        assert_eq!(u.sup_abs(), 0.0);
    }

    #[test]
    fn dirac_threshold_brackets_solvability() {
        let op = ball(1.0 / 16.0);
        let q = 2.0;
        let delta = MeasureData::dirac(&Shape::Ball, &[0.0, 0.0, 0.0], 1.0).unwrap();
        let c0 = estimate_c0(&op, &delta, q).unwrap();
        let s0 = sigma_threshold(q, c0).unwrap();
        let run = |s: f64| {
            solve_source(&op, &SourceConfig { q, sigma: s, lambda: delta.clone(), options: SourceOptions::default() })
                .unwrap()
        };
        let (u, rep) = run(0.5 * s0);
        assert_eq!(rep.verdict, Verdict::Converged);
        let w = green_of(&op, &delta.scale(0.5 * s0)).unwrap();
        let theta = supersolution_factor(q, c0, 0.5 * s0).unwrap();
        for (a, b) in u.values().iter().zip(&w) {
            assert!(*a >= *b && *a <= theta * b * (1.0 + 1e-9));
        }
        assert!(rep.residual_history.iter().all(|&s| s >= 0.0));
        assert!(necessary_check(&op, &delta.scale(0.5 * s0), q).unwrap() >= -1e-8);
        let (_, rep) = run(20.0 * s0);
        assert_eq!(rep.verdict, Verdict::Diverged);
        assert!(dual_condition_margin(&op, &delta, q, 0.5 * s0, 50, 1).unwrap() >= 0.0);
        assert!(dual_condition_margin(&op, &delta, q, 0.0, 10, 1).unwrap() >= 0.0);
        assert!(dual_condition_margin(&op, &delta, q, 100.0 * s0, 50, 1).unwrap() < 0.0);
    }

    #[test]
    fn ball_scaling_flags_atoms_at_the_critical_exponent() {
        let g = Arc::new(build_masked_grid(3, Shape::Ball, 1.0 / 16.0).unwrap());
        let radii = [0.5, 0.1, 1e-3, 1e-6];
        let delta = MeasureData::dirac(&Shape::Ball, &[0.0, 0.0, 0.0], 1.0).unwrap();
        let t = ball_measure_scaling_check(&g, &delta, 3.0, &[0.0; 3], &radii).unwrap();
        assert!(t.windows(2).all(|w| w[1].ratio > w[0].ratio));
        let uniform = MeasureData::density(Density::Constant { value: 1.0 });
        let t = ball_measure_scaling_check(&g, &uniform, 3.0, &[0.0; 3], &radii).unwrap();
        assert!(t.iter().all(|r| r.ratio < 10.0));
    }
}
