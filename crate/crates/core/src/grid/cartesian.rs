use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice coordinates of a node.
pub type Coord = [i64; 3];

/// Domain shapes with exact boundary distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    /// Unit disk centred at the origin (2-D).
    Disk,
    /// Unit ball centred at the origin (3-D).
    Ball,
    /// Axis-aligned box `[lo, hi]`; its dimension must match the grid.
    Rectangle { lo: Vec<f64>, hi: Vec<f64> },
}

/// JSON descriptor `{dim, shape, h}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub shape: Shape,
    pub h: f64,
}

impl Shape {
    /// Exact signed distance to the boundary (positive inside).
    pub fn signed_distance(&self, x: &[f64; 3], dim: usize) -> f64 {
        match self {
            Shape::Disk | Shape::Ball => 1.0 - norm(x, dim),
            Shape::Rectangle { lo, hi } => {
                let mut d = f64::INFINITY;
                let mut outside = 0.0f64;
                for k in 0..dim {
                    let a = x[k] - lo[k];
                    let b = hi[k] - x[k];
                    d = d.min(a).min(b);
                    let o = (-a).max(-b).max(0.0);
                    outside += o * o;
                }
                if outside > 0.0 {
                    -outside.sqrt()
                } else {
                    d
                }
            }
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<CartesianGrid> {
        build_masked_grid(self.dim, self.shape.clone(), self.h)
    }
}

/// A stencil neighbour: either an interior unknown or a Dirichlet ghost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Interior(usize),
    Ghost(usize),
}

/// Ghost node outside (or on) the boundary, carrying its nearest boundary point.
#[derive(Debug, Clone, PartialEq)]
pub struct Ghost {
    pub coord: Coord,
    pub point: [f64; 3],
}

/// Masked Cartesian lattice over a disk, ball or box.
#[derive(Debug, Clone)]
pub struct CartesianGrid {
    dim: usize,
    h: f64,
    shape: Shape,
    origin: [f64; 3],
    lo: Coord,
    extent: [usize; 3],
    index: Vec<i64>,
    coords: Vec<Coord>,
    rho: Vec<f64>,
    ghosts: Vec<Ghost>,
    neighbors: Vec<[Neighbor; 6]>,
}

const OUTSIDE: i64 = i64::MIN;
const INTERIOR_TOL: f64 = 1e-12;

/// Build the masked lattice of spacing `h` for the given shape.
pub fn build_masked_grid(dim: usize, shape: Shape, h: f64) -> Result<CartesianGrid> {
    if !(dim == 2 || dim == 3) {
        return Err(Error::domain(format!("grid dimension must be 2 or 3, got {dim}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("spacing must be positive, got {h}")));
    }
    let (origin, lo, hi) = match &shape {
        Shape::Disk | Shape::Ball => {
            let want = if matches!(shape, Shape::Disk) { 2 } else { 3 };
            if dim != want {
                return Err(Error::domain(format!("{shape:?} requires dimension {want}")));
            }
            let m = (1.0 / h).ceil() as i64 + 1;
            let mut lo = [0i64; 3];
            let mut hi = [0i64; 3];
            for k in 0..dim {
                lo[k] = -m;
                hi[k] = m;
            }
            ([0.0; 3], lo, hi)
        }
        Shape::Rectangle { lo: a, hi: b } => {
            if a.len() != dim || b.len() != dim {
                return Err(Error::domain("rectangle corners must match the grid dimension"));
            }
            let mut origin = [0.0; 3];
            let mut lo = [0i64; 3];
            let mut hi = [0i64; 3];
            for k in 0..dim {
                if !(b[k] > a[k]) {
                    return Err(Error::domain("rectangle must have hi > lo on every axis"));
                }
                origin[k] = a[k];
                lo[k] = -1;
                hi[k] = ((b[k] - a[k]) / h).round() as i64 + 1;
            }
            (origin, lo, hi)
        }
    };

    let mut extent = [1usize; 3];
    for k in 0..dim {
        extent[k] = (hi[k] - lo[k] + 1) as usize;
    }
    let total = extent.iter().product::<usize>();
    let mut grid = CartesianGrid {
        dim,
        h,
        shape,
        origin,
        lo,
        extent,
        index: vec![OUTSIDE; total],
        coords: Vec::new(),
        rho: Vec::new(),
        ghosts: Vec::new(),
        neighbors: Vec::new(),
    };

    for flat in 0..total {
        let c = grid.unflatten(flat);
        let x = grid.position(c);
        let r = grid.exact_distance(&x);
        if r > INTERIOR_TOL {
            grid.index[flat] = grid.coords.len() as i64;
            grid.coords.push(c);
            grid.rho.push(r);
        }
    }
    if grid.coords.len() < 9 {
        return Err(Error::domain(format!(
            "grid has {} interior nodes; at least 9 are required",
            grid.coords.len()
        )));
    }

    let mut neighbors = Vec::with_capacity(grid.coords.len());
    for i in 0..grid.coords.len() {
        let c = grid.coords[i];
        let mut nb = [Neighbor::Interior(i); 6];
        for axis in 0..dim {
            for (s, step) in [-1i64, 1].into_iter().enumerate() {
                let mut d = c;
                d[axis] += step;
                let flat = grid
                    .flatten(d)
                    .ok_or_else(|| Error::domain("stencil leaves the lattice bounding box"))?;
                let slot = grid.index[flat];
                nb[2 * axis + s] = if slot >= 0 {
                    Neighbor::Interior(slot as usize)
                } else if slot == OUTSIDE {
                    let g = grid.ghosts.len();
                    let x = grid.position(d);
                    grid.ghosts.push(Ghost { coord: d, point: grid.project_to_boundary(&x) });
                    grid.index[flat] = -(g as i64) - 1;
                    Neighbor::Ghost(g)
                } else {
                    Neighbor::Ghost((-slot - 1) as usize)
                };
            }
        }
        neighbors.push(nb);
    }
    grid.neighbors = neighbors;
    Ok(grid)
}

impl CartesianGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { dim: self.dim, shape: self.shape.clone(), h: self.h }
    }

    /// Number of interior unknowns.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Volume of one lattice cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Measure attached to a boundary ghost, `h^(dim-1)`.
    pub fn boundary_cell_measure(&self) -> f64 {
        self.h.powi(self.dim as i32 - 1)
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn ghosts(&self) -> &[Ghost] {
        &self.ghosts
    }

    pub fn neighbors(&self, node: usize) -> &[Neighbor] {
        &self.neighbors[node][..2 * self.dim]
    }

    /// Exact distance to the boundary at every interior node.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn position(&self, c: Coord) -> [f64; 3] {
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = self.origin[k] + self.h * c[k] as f64;
        }
        x
    }

    pub fn node_position(&self, node: usize) -> [f64; 3] {
        self.position(self.coords[node])
    }

    /// Interior node at lattice coordinate `c`, if any.
    pub fn node_at(&self, c: Coord) -> Option<usize> {
        let flat = self.flatten(c)?;
        let slot = self.index[flat];
        (slot >= 0).then_some(slot as usize)
    }

    /// Ghost at lattice coordinate `c`, if any.
    pub fn ghost_at(&self, c: Coord) -> Option<usize> {
        let flat = self.flatten(c)?;
        let slot = self.index[flat];
        (slot < 0 && slot != OUTSIDE).then_some((-slot - 1) as usize)
    }

    /// Whether a point lies in the closed domain.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        self.exact_distance(&pad(x)) >= -1e-12
    }

    /// Exact signed distance to the boundary (positive inside).
    pub fn exact_distance(&self, x: &[f64; 3]) -> f64 {
        self.shape.signed_distance(x, self.dim)
    }

    /// Nearest point of the boundary.
    pub fn project_to_boundary(&self, x: &[f64; 3]) -> [f64; 3] {
        match &self.shape {
            Shape::Disk | Shape::Ball => {
                let r = norm(x, self.dim);
                let mut p = [0.0; 3];
                if r == 0.0 {
                    p[0] = 1.0;
                } else {
                    for k in 0..self.dim {
                        p[k] = x[k] / r;
                    }
                }
                p
            }
            Shape::Rectangle { lo, hi } => {
                let mut p = [0.0; 3];
                for k in 0..self.dim {
                    p[k] = x[k].clamp(lo[k], hi[k]);
                }
                if self.exact_distance(x) > 0.0 {
                    let mut best = (f64::INFINITY, 0, 0.0);
                    for k in 0..self.dim {
                        for side in [lo[k], hi[k]] {
                            let d = (x[k] - side).abs();
                            if d < best.0 {
                                best = (d, k, side);
                            }
                        }
                    }
                    p[best.1] = best.2;
                }
                p
            }
        }
    }

    /// Interior node nearest to `x` (ties broken by lowest index).
    pub fn nearest_node(&self, x: &[f64]) -> Result<usize> {
        let x = pad(x);
        if !self.contains_closed(&x[..self.dim]) {
            return Err(Error::domain(format!("point {:?} lies outside the domain", &x[..self.dim])));
        }
        let mut c = [0i64; 3];
        for k in 0..self.dim {
            c[k] = ((x[k] - self.origin[k]) / self.h).round() as i64;
        }
        if let Some(i) = self.node_at(c) {
            return Ok(i);
        }
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, &cc) in self.coords.iter().enumerate() {
            let p = self.position(cc);
            let d = dist2(&p, &x, self.dim);
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best.1)
    }

    /// Ghost whose boundary point is nearest to `a`; exact lattice hits win.
    pub fn nearest_ghost(&self, a: &[f64]) -> usize {
        let a = pad(a);
        let mut c = [0i64; 3];
        for k in 0..self.dim {
            c[k] = ((a[k] - self.origin[k]) / self.h).round() as i64;
        }
        if let Some(g) = self.ghost_at(c) {
            if dist2(&self.position(c), &a, self.dim) < 1e-20 {
                return g;
            }
        }
        let mut best = (f64::INFINITY, f64::INFINITY, 0usize);
        for (g, gh) in self.ghosts.iter().enumerate() {
            let d = dist2(&gh.point, &a, self.dim);
            let e = dist2(&self.position(gh.coord), &a, self.dim);
            if d < best.0 - 1e-15 || (d <= best.0 + 1e-15 && e < best.1) {
                best = (d, e, g);
            }
        }
        best.2
    }

    fn flatten(&self, c: Coord) -> Option<usize> {
        let mut flat = 0usize;
        for k in (0..self.dim).rev() {
            let off = c[k] - self.lo[k];
            if off < 0 || off as usize >= self.extent[k] {
                return None;
            }
            flat = flat * self.extent[k] + off as usize;
        }
        Some(flat)
    }

    fn unflatten(&self, mut flat: usize) -> Coord {
        let mut c = [0i64; 3];
        for (k, ck) in c.iter_mut().enumerate().take(self.dim) {
            *ck = self.lo[k] + (flat % self.extent[k]) as i64;
            flat /= self.extent[k];
        }
        c
    }
}

pub(crate) fn pad(x: &[f64]) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (k, v) in x.iter().take(3).enumerate() {
        p[k] = *v;
    }
    p
}

pub(crate) fn norm(x: &[f64; 3], dim: usize) -> f64 {
    x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist2(a: &[f64; 3], b: &[f64; 3], dim: usize) -> f64 {
    (0..dim).map(|k| (a[k] - b[k]).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_counts_match_enumeration() {
        let g = build_masked_grid(2, Shape::Disk, 1.0 / 64.0).unwrap();
        let mut count = 0;
        for i in -70i64..=70 {
            for j in -70i64..=70 {
                let (x, y) = (i as f64 / 64.0, j as f64 / 64.0);
                if x * x + y * y < 1.0 - 1e-12 {
                    count += 1;
                }
            }
        }
        assert_eq!(g.len(), count);
        let area = std::f64::consts::PI * 64.0 * 64.0;
        assert!((g.len() as f64 - area).abs() / area < 0.05);
    }

    #[test]
    fn ball_count_near_volume() {
        let g = build_masked_grid(3, Shape::Ball, 1.0 / 16.0).unwrap();
        let vol = 4.0 / 3.0 * std::f64::consts::PI * 16f64.powi(3);
        assert!((g.len() as f64 - vol).abs() / vol < 0.10);
    }

    #[test]
    fn oversized_spacing_is_rejected() {
        assert!(matches!(build_masked_grid(2, Shape::Disk, 3.0), Err(Error::Domain(_))));
        assert!(build_masked_grid(4, Shape::Disk, 0.1).is_err());
        assert!(build_masked_grid(3, Shape::Disk, 0.1).is_err());
    }

    #[test]
    fn distances_are_exact() {
        let g = build_masked_grid(2, Shape::Disk, 0.25).unwrap();
        let o = g.node_at([0, 0, 0]).unwrap();
        assert_eq!(g.rho()[o], 1.0);
        let p = g.node_at([2, 0, 0]).unwrap();
        assert!((g.rho()[p] - 0.5).abs() < 1e-15);
        let rect = Shape::Rectangle { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let r = build_masked_grid(2, rect, 0.05).unwrap();
        let n = r.nearest_node(&[0.25, 0.1]).unwrap();
        assert!((r.rho()[n] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn every_stencil_is_complete() {
        for shape in [Shape::Disk, Shape::Rectangle { lo: vec![-1.0, 0.0], hi: vec![1.0, 0.5] }] {
            let g = build_masked_grid(2, shape, 1.0 / 16.0).unwrap();
            for i in 0..g.len() {
                for nb in g.neighbors(i) {
                    match *nb {
                        Neighbor::Interior(j) => assert!(j < g.len()),
                        Neighbor::Ghost(k) => {
                            let gh = &g.ghosts()[k];
                            assert!(g.exact_distance(&g.position(gh.coord)) <= INTERIOR_TOL);
                            assert!(g.exact_distance(&gh.point).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lattice_boundary_point_is_its_own_ghost() {
        let g = build_masked_grid(2, Shape::Disk, 1.0 / 32.0).unwrap();
        let k = g.nearest_ghost(&[1.0, 0.0]);
        assert_eq!(g.ghosts()[k].coord, [32, 0, 0]);
    }
}
