use std::f64::consts::PI;

use super::cartesian::{CartesianGrid, Shape};
use super::function::GridFunction;
use crate::error::{Error, Result};

/// Quadrature on the level set `{ρ = t}` built from a band of lattice nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceQuadrature {
    pub t: f64,
    pub entries: Vec<(usize, f64)>,
}

impl SliceQuadrature {
    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// `Σ w·f(node)` for a nodal vector.
    pub fn apply(&self, f: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * f[i]).sum()
    }

    pub fn integrate(&self, f: &GridFunction) -> f64 {
        self.apply(f.values())
    }
}

/// Largest admissible level `t` (the inradius).
pub fn max_level(grid: &CartesianGrid) -> f64 {
    match grid.shape() {
        Shape::Disk | Shape::Ball => 1.0,
        Shape::Rectangle { lo, hi } => lo
            .iter()
            .zip(hi)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Exact measure of `Σ_t`.
pub fn exact_slice_measure(grid: &CartesianGrid, t: f64) -> f64 {
    match grid.shape() {
        Shape::Disk => 2.0 * PI * (1.0 - t),
        Shape::Ball => 4.0 * PI * (1.0 - t).powi(2),
        Shape::Rectangle { lo, hi } => {
            let sides: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a - 2.0 * t).collect();
            if sides.len() == 2 {
                2.0 * (sides[0] + sides[1])
            } else {
                2.0 * (sides[0] * sides[1] + sides[1] * sides[2] + sides[2] * sides[0])
            }
        }
    }
}

/// Band quadrature for `Σ_t`: hat weights in `(ρ - t)/h` times `h^(dim-1)`,
/// rescaled so the total equals the exact slice measure.
pub fn foliation_slice(grid: &CartesianGrid, t: f64) -> Result<SliceQuadrature> {
    let top = max_level(grid);
    if !(t > 0.0 && t < top) {
        return Err(Error::domain(format!("slice level {t} outside (0, {top})")));
    }
    let h = grid.h();
    let base = grid.boundary_cell_measure();
    let mut entries: Vec<(usize, f64)> = grid
        .rho()
        .iter()
        .enumerate()
        .filter_map(|(i, &r)| {
            let w = 1.0 - (r - t).abs() / h;
            (w > 0.0).then_some((i, w * base))
        })
        .collect();
    let total: f64 = entries.iter().map(|e| e.1).sum();
    if entries.is_empty() || total <= 0.0 {
        return Err(Error::domain(format!("no lattice nodes near level {t}")));
    }
    let scale = exact_slice_measure(grid, t) / total;
    for e in &mut entries {
        e.1 *= scale;
    }
    Ok(SliceQuadrature { t, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_masked_grid;
    use std::sync::Arc;

    #[test]
    fn disk_slice_has_circumference() {
        let g = build_masked_grid(2, Shape::Disk, 1.0 / 128.0).unwrap();
        let s = foliation_slice(&g, 0.1).unwrap();
        let c = 2.0 * PI * 0.9;
        assert!(s.total_weight() > 0.9 * c && s.total_weight() < 1.1 * c);
        for &(i, w) in &s.entries {
            assert!((g.rho()[i] - 0.1).abs() <= g.h());
            assert!(w > 0.0);
        }
        let one = GridFunction::from_fn(Arc::new(g.clone()), |_| 1.0);
        let half = foliation_slice(&g, 0.5).unwrap().integrate(&one);
        assert!((half - PI).abs() / PI < 0.1);
    }

    #[test]
    fn out_of_range_levels() {
        let g = build_masked_grid(2, Shape::Disk, 1.0 / 32.0).unwrap();
        assert!(foliation_slice(&g, 2.0).is_err());
        assert!(foliation_slice(&g, 0.0).is_err());
    }

    #[test]
    fn unnormalized_band_is_close_to_exact() {
        // before rescaling, hat weights already approximate the slice measure
        let g = build_masked_grid(2, Shape::Disk, 1.0 / 128.0).unwrap();
        let raw: f64 = g
            .rho()
            .iter()
            .map(|r| (1.0 - (r - 0.3).abs() / g.h()).max(0.0) * g.h())
            .sum();
        let exact = 2.0 * PI * 0.7;
        assert!((raw - exact).abs() / exact < 0.02);
    }
}
