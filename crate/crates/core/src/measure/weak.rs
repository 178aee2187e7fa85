use serde::{Deserialize, Serialize};

use crate::grid::{CartesianGrid, GridFunction};

/// Weak-Lᵖ (Marcinkiewicz) norm with respect to `ρ^α dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakNorm {
    pub p: f64,
    pub alpha: f64,
    pub value: f64,
}

fn node_weights(grid: &CartesianGrid, alpha: f64) -> Vec<f64> {
    let vol = grid.cell_volume();
    grid.rho()
        .iter()
        .map(|&r| if alpha == 0.0 { vol } else { vol * r.powf(alpha) })
        .collect()
}

/// `sup_s [s^p λ_α({|f| > s})]^(1/p)`, evaluated at the nodal levels.
pub fn marcinkiewicz_norm(f: &GridFunction, p: f64, alpha: f64) -> WeakNorm {
    assert!(p > 1.0, "weak norm needs p > 1");
    let w = node_weights(f.grid(), alpha);
    WeakNorm { p, alpha, value: level_set_sup(f.values(), &w, p) }
}

pub(crate) fn level_set_sup(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = values.iter().map(|v| v.abs()).zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut measure = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let level = pairs[i].0;
        if level == 0.0 {
            break;
        }
        while i < pairs.len() && pairs[i].0 == level {
            measure += pairs[i].1;
            i += 1;
        }
        best = best.max(level * measure.powf(1.0 / p));
    }
    best
}

/// Weighted strong norm `(∫ |f|^p ρ^α dx)^(1/p)`.
pub fn strong_norm(f: &GridFunction, p: f64, alpha: f64) -> f64 {
    let w = node_weights(f.grid(), alpha);
    f.values().iter().zip(&w).map(|(v, wi)| v.abs().powf(p) * wi).sum::<f64>().powf(1.0 / p)
}

/// Margin of `∫_E |f|^q dλ_α ≤ (p/(p−q))·‖f‖^q·λ_α(E)^(1−q/p)` over the node set `E`.
pub fn check_embedding(f: &GridFunction, p: f64, q: f64, set: &[usize], alpha: f64) -> f64 {
    assert!(q >= 1.0 && q < p, "embedding needs 1 <= q < p");
    let w = node_weights(f.grid(), alpha);
    let norm = level_set_sup(f.values(), &w, p);
    let measure: f64 = set.iter().map(|&i| w[i]).sum();
    let lhs: f64 = set.iter().map(|&i| f.values()[i].abs().powf(q) * w[i]).sum();
    p / (p - q) * norm.powf(q) * measure.powf(1.0 - q / p) - lhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_masked_grid, Shape};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn ball(h: f64) -> Arc<CartesianGrid> {
        Arc::new(build_masked_grid(3, Shape::Ball, h).unwrap())
    }

    #[test]
    fn constant_on_region() {
        let g = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 32.0).unwrap());
        let one = GridFunction::from_fn(Arc::clone(&g), |_| 1.0);
        let m = g.len() as f64 * g.cell_volume();
        let n = marcinkiewicz_norm(&one, 2.0, 0.0).value;
        assert!((n - m.sqrt()).abs() < 1e-12);
        assert_eq!(marcinkiewicz_norm(&GridFunction::zeros(g), 2.0, 0.0).value, 0.0);
    }

    #[test]
    fn inverse_square_is_refinement_stable() {
        let norm_at = |h: f64| {
            let g = ball(h);
            let f = GridFunction::from_fn(Arc::clone(&g), |x| {
                let r2 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).max(h * h / 4.0);
                1.0 / r2
            });
            marcinkiewicz_norm(&f, 1.5, 0.0).value
        };
        let (a, b) = (norm_at(1.0 / 16.0), norm_at(1.0 / 32.0));
        assert!(a.is_finite() && (a - b).abs() / b < 0.15, "{a} {b}");
    }

    #[test]
    fn constant_embedding_holds() {
        let g = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 16.0).unwrap());
        let one = GridFunction::from_fn(Arc::clone(&g), |_| 1.0);
        let set: Vec<usize> = (0..g.len()).step_by(3).collect();
        assert!(check_embedding(&one, 2.0, 1.0, &set, 1.0) >= 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn homogeneous_dominated_and_embedded(
            vals in prop::collection::vec(-50.0f64..50.0, 1..64),
            c in -10.0f64..10.0,
            p in 1.1f64..4.0,
            alpha in 0.0f64..1.0,
            mask in prop::collection::vec(any::<bool>(), 64),
        ) {
            let g = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 8.0).unwrap());
            let f = GridFunction::from_fn(Arc::clone(&g), |x| {
                let k = ((x[0] + 1.0) * 4.0 + (x[1] + 1.0) * 32.0) as usize % vals.len();
                vals[k]
            });
            let n = marcinkiewicz_norm(&f, p, alpha).value;
            let cf = f.map(|v| c * v);
            let nc = marcinkiewicz_norm(&cf, p, alpha).value;
            prop_assert!((nc - c.abs() * n).abs() <= 1e-12 * (1.0 + nc));
            prop_assert!(n <= strong_norm(&f, p, alpha) * (1.0 + 1e-12));
            let set: Vec<usize> = (0..g.len()).filter(|&i| mask[i % 64]).collect();
            let q = 1.0 + (p - 1.0) * 0.5;
            prop_assert!(check_embedding(&f, p, q, &set, alpha) >= -1e-9);
        }
    }
}
