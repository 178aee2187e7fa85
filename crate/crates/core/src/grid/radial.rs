use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node placement rule of a radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingLaw {
    Uniform,
    Logarithmic,
}

/// One-dimensional grid in the radial variable of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    n: usize,
    nodes: Vec<f64>,
    law: SpacingLaw,
}

/// JSON descriptor `{n, r_min, r_max, count, law}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSpec {
    pub n: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub law: SpacingLaw,
}

impl RadialSpec {
    pub fn build(&self) -> Result<RadialGrid> {
        build_radial_grid(self.n, self.r_min, self.r_max, self.count, self.law)
    }
}

pub fn build_radial_grid(n: usize, r_min: f64, r_max: f64, count: usize, law: SpacingLaw) -> Result<RadialGrid> {
    if n < 2 {
        return Err(Error::domain(format!("radial dimension must be at least 2, got {n}")));
    }
    if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
        return Err(Error::domain(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
    }
    if count < 3 {
        return Err(Error::domain(format!("need at least 3 radial nodes, got {count}")));
    }
    let last = (count - 1) as f64;
    let mut nodes: Vec<f64> = match law {
        SpacingLaw::Uniform => (0..count).map(|i| r_min + (r_max - r_min) * i as f64 / last).collect(),
        SpacingLaw::Logarithmic => {
            let (a, b) = (r_min.ln(), r_max.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
        }
    };
    nodes[0] = r_min;
    nodes[count - 1] = r_max;
    RadialGrid::from_nodes(n, nodes, law)
}

impl RadialGrid {
    /// Wrap explicit nodes, checking the ordering invariant.
    pub fn from_nodes(n: usize, nodes: Vec<f64>, law: SpacingLaw) -> Result<Self> {
        if n < 2 || nodes.len() < 3 {
            return Err(Error::domain("radial grid needs n >= 2 and at least 3 nodes"));
        }
        if nodes[0] <= 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("radial nodes must be positive and strictly increasing"));
        }
        Ok(RadialGrid { n, nodes, law })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn law(&self) -> SpacingLaw {
        self.law
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

/// Area of the unit sphere `S^(n-1)`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2), via the recursion |S^{n+1}| = 2 pi |S^{n-1}| / n
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area(n - 2) / (n - 2) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logarithmic_ratio_is_constant() {
        let g = build_radial_grid(3, 1e-4, 1.0, 2000, SpacingLaw::Logarithmic).unwrap();
        assert_eq!(g.len(), 2000);
        let r = g.nodes();
        let q0 = r[1] / r[0];
        for w in r.windows(2) {
            assert!((w[1] / w[0] - q0).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_spacing() {
        let g = build_radial_grid(2, 1e-3, 1.0, 500, SpacingLaw::Uniform).unwrap();
        let d = (1.0 - 1e-3) / 499.0;
        for w in g.nodes().windows(2) {
            assert!((w[1] - w[0] - d).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_radial_grid(1, 0.1, 1.0, 10, SpacingLaw::Uniform).is_err());
        assert!(build_radial_grid(3, 0.0, 1.0, 10, SpacingLaw::Uniform).is_err());
        assert!(build_radial_grid(3, 0.1, 1.0, 2, SpacingLaw::Uniform).is_err());
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }
}
