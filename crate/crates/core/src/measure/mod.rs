//! Radon measures stored as atoms plus densities from a small named catalog,
//! their discretization on lattices, mollification and weighted masses.

mod weak;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{norm, pad, CartesianGrid, GridFunction, Shape};
use std::sync::Arc;

pub use weak::{check_embedding, marcinkiewicz_norm, strong_norm, WeakNorm};

/// Point mass inside the closed domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: Vec<f64>,
    pub w: f64,
}

/// Point mass on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAtom {
    pub point: Vec<f64>,
    pub w: f64,
}

/// Interior density expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    Constant { value: f64 },
    /// `coef·|x − center|^exponent`, with the distance floored at `h/2`.
    RadialPower { center: Vec<f64>, coef: f64, exponent: f64 },
    Indicator { center: Vec<f64>, radius: f64, value: f64 },
    /// Quartic bump `(1 − |x−c|²/ε²)²` carrying exactly `mass` after discretization.
    Bump { center: Vec<f64>, eps: f64, mass: f64 },
}

/// Boundary density expressions (Dirichlet data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryDensity {
    Constant { value: f64 },
    /// `mean + amplitude·cos(mode·θ)`, θ the polar angle in the first two coordinates.
    Cosine { mean: f64, amplitude: f64, mode: f64 },
    /// Quartic bump in geodesic distance along a round boundary, unit-normalized times `mass`.
    Bump { center: Vec<f64>, eps: f64, mass: f64 },
}

impl Density {
    fn eval(&self, x: &[f64; 3], dim: usize, h: f64) -> f64 {
        match self {
            Density::Constant { value } => *value,
            Density::RadialPower { center, coef, exponent } => {
                let r = distance(x, center, dim).max(0.5 * h);
                coef * r.powf(*exponent)
            }
            Density::Indicator { center, radius, value } => {
                if distance(x, center, dim) < *radius {
                    *value
                } else {
                    0.0
                }
            }
            Density::Bump { center, eps, .. } => quartic(distance(x, center, dim) / eps),
        }
    }
}

impl BoundaryDensity {
    /// Value at a boundary point.
    pub fn eval(&self, p: &[f64; 3], dim: usize) -> f64 {
        match self {
            BoundaryDensity::Constant { value } => *value,
            BoundaryDensity::Cosine { mean, amplitude, mode } => mean + amplitude * (mode * p[1].atan2(p[0])).cos(),
            BoundaryDensity::Bump { center, eps, mass } => {
                let c = pad(center);
                let cosang = (0..dim).map(|k| p[k] * c[k]).sum::<f64>() / (norm(p, dim) * norm(&c, dim));
                let s = cosang.clamp(-1.0, 1.0).acos();
                let unit = if dim == 2 { 16.0 * eps / 15.0 } else { std::f64::consts::PI * eps * eps / 3.0 };
                mass * quartic(s / eps) / unit
            }
        }
    }
}

fn quartic(s: f64) -> f64 {
    if s < 1.0 {
        (1.0 - s * s).powi(2)
    } else {
        0.0
    }
}

fn distance(x: &[f64; 3], c: &[f64], dim: usize) -> f64 {
    let c = pad(c);
    (0..dim).map(|k| (x[k] - c[k]).powi(2)).sum::<f64>().sqrt()
}

/// Interior and boundary Radon measure.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasureData {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub densities: Vec<Density>,
    #[serde(default)]
    pub boundary_atoms: Vec<BoundaryAtom>,
    #[serde(default)]
    pub boundary_densities: Vec<BoundaryDensity>,
}

impl MeasureData {
    pub fn zero() -> Self {
        MeasureData::default()
    }

    /// `c·δ_{x0}` for a point of the closed domain.
    pub fn dirac(shape: &Shape, x0: &[f64], c: f64) -> Result<Self> {
        if shape.signed_distance(&pad(x0), x0.len()) < -1e-12 {
            return Err(Error::domain(format!("atom location {x0:?} lies outside the domain")));
        }
        Ok(MeasureData { atoms: vec![Atom { x: x0.to_vec(), w: c }], ..Default::default() })
    }

    /// `c·δ_a` for a boundary point `a`.
    pub fn boundary_dirac(shape: &Shape, a: &[f64], c: f64) -> Result<Self> {
        if shape.signed_distance(&pad(a), a.len()).abs() > 1e-9 {
            return Err(Error::domain(format!("boundary atom {a:?} is not on the boundary")));
        }
        Ok(MeasureData { boundary_atoms: vec![BoundaryAtom { point: a.to_vec(), w: c }], ..Default::default() })
    }

    pub fn density(d: Density) -> Self {
        MeasureData { densities: vec![d], ..Default::default() }
    }

    pub fn boundary_density(d: BoundaryDensity) -> Self {
        MeasureData { boundary_densities: vec![d], ..Default::default() }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.atoms.iter_mut().for_each(|a| a.w *= s);
        m.boundary_atoms.iter_mut().for_each(|a| a.w *= s);
        for d in &mut m.densities {
            match d {
                Density::Constant { value } | Density::Indicator { value, .. } => *value *= s,
                Density::RadialPower { coef, .. } => *coef *= s,
                Density::Bump { mass, .. } => *mass *= s,
            }
        }
        for d in &mut m.boundary_densities {
            match d {
                BoundaryDensity::Constant { value } => *value *= s,
                BoundaryDensity::Cosine { mean, amplitude, .. } => {
                    *mean *= s;
                    *amplitude *= s;
                }
                BoundaryDensity::Bump { mass, .. } => *mass *= s,
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = self.clone();
        m.atoms.extend(other.atoms.iter().cloned());
        m.densities.extend(other.densities.iter().cloned());
        m.boundary_atoms.extend(other.boundary_atoms.iter().cloned());
        m.boundary_densities.extend(other.boundary_densities.iter().cloned());
        m
    }

    pub fn has_interior(&self) -> bool {
        !self.atoms.is_empty() || !self.densities.is_empty()
    }

    pub fn has_boundary(&self) -> bool {
        !self.boundary_atoms.is_empty() || !self.boundary_densities.is_empty()
    }

    /// Interior part with every term replaced by its absolute value; its
    /// potential dominates that of `|λ|`.
    pub fn dominating_interior(&self) -> Self {
        let mut m = self.interior();
        m.atoms.iter_mut().for_each(|a| a.w = a.w.abs());
        for d in &mut m.densities {
            match d {
                Density::Constant { value } | Density::Indicator { value, .. } => *value = value.abs(),
                Density::RadialPower { coef, .. } => *coef = coef.abs(),
                Density::Bump { mass, .. } => *mass = mass.abs(),
            }
        }
        m
    }

    /// Interior part only.
    pub fn interior(&self) -> Self {
        MeasureData { atoms: self.atoms.clone(), densities: self.densities.clone(), ..Default::default() }
    }

    /// Boundary part only.
    pub fn boundary(&self) -> Self {
        MeasureData {
            boundary_atoms: self.boundary_atoms.clone(),
            boundary_densities: self.boundary_densities.clone(),
            ..Default::default()
        }
    }

    /// Replace atoms by unit-mass quartic bumps of radius `eps` (interior) or
    /// geodesic radius `eps` (boundary).
    pub fn mollify(&self, eps: f64) -> Self {
        let mut m = MeasureData {
            densities: self.densities.clone(),
            boundary_densities: self.boundary_densities.clone(),
            ..Default::default()
        };
        for a in &self.atoms {
            m.densities.push(Density::Bump { center: a.x.clone(), eps, mass: a.w });
        }
        for a in &self.boundary_atoms {
            m.boundary_densities.push(BoundaryDensity::Bump { center: a.point.clone(), eps, mass: a.w });
        }
        m
    }

    /// Nodal right-hand side: atoms snap to the nearest node with weight `c/h^dim`.
    pub fn discretize(&self, grid: &Arc<CartesianGrid>) -> Result<GridFunction> {
        let dim = grid.dim();
        let h = grid.h();
        let vol = grid.cell_volume();
        let mut rhs = vec![0.0; grid.len()];
        for d in &self.densities {
            let vals: Vec<f64> = (0..grid.len()).map(|i| d.eval(&grid.node_position(i), dim, h)).collect();
            let factor = match d {
                Density::Bump { mass, .. } => {
                    let total: f64 = vals.iter().sum::<f64>() * vol;
                    if total > 0.0 {
                        mass / total
                    } else {
                        0.0
                    }
                }
                _ => 1.0,
            };
            if let Density::Bump { center, mass, .. } = d {
                if factor == 0.0 && *mass != 0.0 {
                    // bump narrower than the lattice: fall back to an atom
                    let i = grid.nearest_node(center)?;
                    rhs[i] += mass / vol;
                    continue;
                }
            }
            for (r, v) in rhs.iter_mut().zip(vals) {
                *r += factor * v;
            }
        }
        for a in &self.atoms {
            let i = grid.nearest_node(&a.x)?;
            rhs[i] += a.w / vol;
        }
        GridFunction::new(Arc::clone(grid), rhs)
    }

    /// Dirichlet values at the ghost nodes; boundary atoms sit on the nearest
    /// ghost with weight `c/h^(dim-1)`.
    pub fn discretize_boundary(&self, grid: &CartesianGrid) -> Vec<f64> {
        let dim = grid.dim();
        let mut g: Vec<f64> = grid
            .ghosts()
            .iter()
            .map(|gh| self.boundary_densities.iter().map(|d| d.eval(&gh.point, dim)).sum())
            .collect();
        for a in &self.boundary_atoms {
            let k = grid.nearest_ghost(&a.point);
            g[k] += a.w / grid.boundary_cell_measure();
        }
        g
    }

    /// `Σ |c|·ρ(x)^α + ∫ |density|·ρ^α dx` on the grid.
    pub fn weighted_mass(&self, alpha: f64, grid: &Arc<CartesianGrid>) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.atoms {
            let r = grid.exact_distance(&pad(&a.x)).max(0.0);
            total += a.w.abs() * weight(r, alpha);
        }
        if !self.densities.is_empty() {
            let dens = MeasureData { densities: self.densities.clone(), ..Default::default() }.discretize(grid)?;
            let s: f64 = dens
                .values()
                .iter()
                .zip(grid.rho())
                .map(|(v, &r)| v.abs() * weight(r, alpha))
                .sum();
            total += s * grid.cell_volume();
        }
        Ok(total)
    }

    /// Total signed mass of the interior part on the grid.
    pub fn interior_mass(&self, grid: &Arc<CartesianGrid>) -> Result<f64> {
        let rhs = self.interior().discretize(grid)?;
        Ok(rhs.values().iter().sum::<f64>() * grid.cell_volume())
    }

    /// Whether every atom weight and density is nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|a| a.w >= 0.0)
            && self.boundary_atoms.iter().all(|a| a.w >= 0.0)
            && self.densities.iter().all(|d| match d {
                Density::Constant { value } | Density::Indicator { value, .. } => *value >= 0.0,
                Density::RadialPower { coef, .. } => *coef >= 0.0,
                Density::Bump { mass, .. } => *mass >= 0.0,
            })
    }
}

fn weight(r: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        r.powf(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_masked_grid;
    use std::f64::consts::PI;

    fn disk(h: f64) -> Arc<CartesianGrid> {
        Arc::new(build_masked_grid(2, Shape::Disk, h).unwrap())
    }

    #[test]
    fn algebra() {
        let d = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 1.0).unwrap().scale(3.0);
        assert_eq!(d.atoms[0].w, 3.0);
        let e = d.add(&MeasureData::dirac(&Shape::Disk, &[0.5, 0.0], 1.0).unwrap());
        assert_eq!(e.atoms.len(), 2);
        assert!(MeasureData::dirac(&Shape::Disk, &[1.5, 0.0], 1.0).is_err());
        assert!(MeasureData::boundary_dirac(&Shape::Disk, &[0.5, 0.0], 1.0).is_err());
    }

    #[test]
    fn dirac_discretization() {
        let g = disk(1.0 / 64.0);
        let rhs = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 1.0).unwrap().discretize(&g).unwrap();
        let o = g.node_at([0, 0, 0]).unwrap();
        assert_eq!(rhs.values()[o], 4096.0);
        let mass: f64 = rhs.values().iter().sum::<f64>() * g.cell_volume();
        assert!((mass - 1.0).abs() < 1e-12);
        let both = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 2.0)
            .unwrap()
            .add(&MeasureData::density(Density::Constant { value: 1.0 }));
        let m = both.interior_mass(&g).unwrap();
        assert!((m - (2.0 + PI)).abs() / (2.0 + PI) < 0.02);
    }

    #[test]
    fn mollified_mass_is_exact() {
        let g = disk(1.0 / 64.0);
        let d = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 1.0).unwrap();
        for eps in [0.2, 0.1, 0.05, 0.02] {
            let m = d.mollify(eps).interior_mass(&g).unwrap();
            assert!((m - 1.0).abs() < 1e-12);
        }
        let a = d.scale(3.0).mollify(0.1).discretize(&g).unwrap();
        let b = d.mollify(0.1).discretize(&g).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - 3.0 * y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn weighted_masses() {
        let g = disk(1.0 / 64.0);
        let d = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 1.0).unwrap();
        assert!((d.weighted_mass(1.0, &g).unwrap() - 1.0).abs() < 1e-15);
        let d = MeasureData::dirac(&Shape::Disk, &[0.9, 0.0], 1.0).unwrap();
        assert!((d.weighted_mass(1.0, &g).unwrap() - 0.1).abs() < 1e-12);
        let u = MeasureData::density(Density::Constant { value: 1.0 });
        assert!((u.weighted_mass(0.0, &g).unwrap() - PI).abs() / PI < 0.02);
    }

    #[test]
    fn boundary_atom_weight() {
        let g = disk(1.0 / 32.0);
        let m = MeasureData::boundary_dirac(&Shape::Disk, &[1.0, 0.0], 1.0).unwrap();
        let gv = m.discretize_boundary(&g);
        let k = g.nearest_ghost(&[1.0, 0.0]);
        assert_eq!(gv[k], 32.0);
        assert_eq!(gv.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn boundary_bump_has_unit_mass() {
        let bump = BoundaryDensity::Bump { center: vec![1.0, 0.0], eps: 0.2, mass: 1.0 };
        let n = 20000;
        let s: f64 = (0..n)
            .map(|i| {
                let th = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                bump.eval(&[th.cos(), th.sin(), 0.0], 2)
            })
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64;
        assert!((s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn json_round_trip() {
        let m = MeasureData::dirac(&Shape::Disk, &[0.0, 0.0], 1.0)
            .unwrap()
            .add(&MeasureData::density(Density::Constant { value: 2.0 }));
        let s = serde_json::to_string(&m).unwrap();
        let back: MeasureData = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
