//! Geometric substrate: masked Cartesian lattices over a disk, ball or box,
//! radial grids, exact boundary distance, foliation slices and quadrature.

mod cartesian;
mod function;
mod radial;
mod slice;

use std::sync::Arc;

pub use cartesian::{build_masked_grid, CartesianGrid, Coord, Ghost, GridSpec, Neighbor, Shape};
pub use function::{integrate, integrate_weighted, GridFunction};
pub use radial::{build_radial_grid, sphere_area, RadialGrid, RadialSpec, SpacingLaw};
pub use slice::{exact_slice_measure, foliation_slice, max_level, SliceQuadrature};

pub(crate) use cartesian::{norm, pad};

/// Distance to the boundary as a grid function.
pub fn boundary_distance(grid: &Arc<CartesianGrid>) -> GridFunction {
    GridFunction::new(Arc::clone(grid), grid.rho().to_vec()).expect("rho has one value per node")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 8.0).unwrap());
        let f = GridFunction::from_fn(Arc::clone(&g), |x| (3.0 * x[0]).sin() / 7.0 + x[1])
            .with_ghost_values((0..g.ghosts().len()).map(|k| k as f64 / 3.0).collect())
            .unwrap();
        let back = GridFunction::from_csv(Arc::clone(&g), &f.to_csv()).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.ghost_values(), f.ghost_values());
        let bare = GridFunction::from_fn(Arc::clone(&g), |x| x[0]);
        assert!(GridFunction::from_csv(Arc::clone(&g), &bare.to_csv()).unwrap().ghost_values().is_none());
        let other = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 16.0).unwrap());
        assert!(GridFunction::from_csv(other, &f.to_csv()).is_err());
    }

    #[test]
    fn cell_sums_on_disk() {
        let g = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 64.0).unwrap());
        let one = GridFunction::from_fn(Arc::clone(&g), |_| 1.0);
        let area = integrate_weighted(&one, &one).unwrap();
        assert!((area - PI).abs() / PI < 0.02);
        let rho = boundary_distance(&g);
        let m = integrate_weighted(&rho, &one).unwrap();
        assert!((m - PI / 3.0).abs() / (PI / 3.0) < 0.03);
        let zero = GridFunction::zeros(Arc::clone(&g));
        assert_eq!(integrate_weighted(&zero, &one).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 16.0).unwrap());
        let b = Arc::new(build_masked_grid(2, Shape::Disk, 1.0 / 32.0).unwrap());
        let fa = GridFunction::zeros(a);
        let fb = GridFunction::zeros(b);
        assert!(integrate_weighted(&fa, &fb).is_err());
    }

    #[test]
    fn rho_is_lipschitz_on_the_lattice() {
        let g = build_masked_grid(3, Shape::Ball, 1.0 / 8.0).unwrap();
        for i in 0..g.len() {
            for nb in g.neighbors(i) {
                if let Neighbor::Interior(j) = *nb {
                    assert!((g.rho()[i] - g.rho()[j]).abs() <= g.h() + 1e-14);
                }
            }
        }
    }

    #[test]
    fn smooth_integrals_refine() {
        let f = |x: &[f64; 3]| (x[0] * x[0] + x[1] * x[1]).cos();
        let exact = PI * 1f64.sin(); // ∫ cos(r²) 2πr dr over [0,1]
        let err = |h: f64| {
            let g = Arc::new(build_masked_grid(2, Shape::Disk, h).unwrap());
            let v = GridFunction::from_fn(Arc::clone(&g), f);
            (integrate(&g, v.values()) - exact).abs()
        };
        let (e1, e2) = (err(1.0 / 32.0), err(1.0 / 64.0));
        assert!(e2 < e1);
    }

    #[test]
    fn collar_foliation_consistency() {
        let g = build_masked_grid(2, Shape::Disk, 1.0 / 128.0).unwrap();
        let dt = 0.01;
        let s: f64 = (1..20)
            .map(|k| foliation_slice(&g, k as f64 * dt).unwrap().total_weight() * dt)
            .sum();
        // collar {0.005 < ρ < 0.195}
        let exact = PI * ((1.0f64 - 0.005).powi(2) - (1.0f64 - 0.195).powi(2));
        assert!((s - exact).abs() / exact < 0.1);
    }
}
