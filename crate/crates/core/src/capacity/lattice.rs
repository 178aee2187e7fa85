use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compact target set of a capacity problem, snapped to lattice nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompactSet {
    /// The node nearest to `x`.
    Point { x: Vec<f64> },
    /// All nodes with `|y − center| ≤ radius` (at least the nearest one).
    Ball { center: Vec<f64>, radius: f64 },
    /// Nodes nearest to the given points.
    Nodes { points: Vec<Vec<f64>> },
    Empty,
}

impl CompactSet {
    pub fn point(n: usize) -> Self {
        CompactSet::Point { x: vec![0.0; n] }
    }

    /// Diameter of the continuous set.
    pub fn diameter(&self) -> f64 {
        match self {
            CompactSet::Point { .. } | CompactSet::Empty => 0.0,
            CompactSet::Ball { radius, .. } => 2.0 * radius,
            CompactSet::Nodes { points } => {
                let mut d = 0.0f64;
                for a in points {
                    for b in points {
                        d = d.max(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt());
                    }
                }
                d
            }
        }
    }

    fn extent(&self) -> f64 {
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            CompactSet::Point { x } => norm(x),
            CompactSet::Ball { center, radius } => norm(center) + radius,
            CompactSet::Nodes { points } => points.iter().map(|p| norm(p)).fold(0.0, f64::max),
            CompactSet::Empty => 0.0,
        }
    }

    fn dimension(&self) -> Option<usize> {
        match self {
            CompactSet::Point { x } => Some(x.len()),
            CompactSet::Ball { center, .. } => Some(center.len()),
            CompactSet::Nodes { points } => points.first().map(Vec::len),
            CompactSet::Empty => None,
        }
    }
}

/// Cube `[−L, L]^n` with `M` interior nodes per axis and zero boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxLattice {
    pub n: usize,
    pub half_width: f64,
    pub h: f64,
    /// Interior nodes per axis.
    pub m: usize,
}

impl BoxLattice {
    pub fn new(n: usize, half_width: f64, h: f64) -> Result<Self> {
        if n == 0 || !(h > 0.0) || !(half_width > h) {
            return Err(Error::domain(format!("bad capacity box n={n}, L={half_width}, h={h}")));
        }
        let cells = (2.0 * half_width / h).round() as usize;
        if cells < 2 {
            return Err(Error::domain("capacity box needs at least one interior node"));
        }
        Ok(BoxLattice { n, half_width: 0.5 * cells as f64 * h, h, m: cells - 1 })
    }

    /// Total interior nodes.
    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 1.0) * self.h
    }

    /// Interior multi-index (0-based) nearest to `x`, if strictly inside.
    pub fn nearest(&self, x: &[f64]) -> Option<Vec<usize>> {
        x.iter()
            .map(|&v| {
                let i = ((v + self.half_width) / self.h).round() as i64 - 1;
                (i >= 0 && (i as usize) < self.m).then_some(i as usize)
            })
            .collect()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.m + i)
    }

    pub fn unflat(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for d in (0..self.n).rev() {
            idx[d] = k % self.m;
            k /= self.m;
        }
        idx
    }

    /// Multi-indices of the nodes of `set`, deduplicated and sorted.
    pub fn nodes_of(&self, set: &CompactSet) -> Result<Vec<Vec<usize>>> {
        if let Some(d) = set.dimension() {
            if d != self.n {
                return Err(Error::domain(format!("set lives in R^{d}, box in R^{}", self.n)));
            }
        }
        let mut out = match set {
            CompactSet::Empty => Vec::new(),
            CompactSet::Point { x } => vec![self.nearest(x).ok_or_else(|| Error::domain("point outside the box"))?],
            CompactSet::Nodes { points } => points
                .iter()
                .map(|p| self.nearest(p).ok_or_else(|| Error::domain("node outside the box")))
                .collect::<Result<Vec<_>>>()?,
            CompactSet::Ball { center, radius } => {
                let c = self.nearest(center).ok_or_else(|| Error::domain("ball centre outside the box"))?;
                let reach = (radius / self.h).ceil() as i64 + 1;
                let mut v = vec![c.clone()];
                let mut offs = vec![-reach; self.n];
                loop {
                    let idx: Option<Vec<usize>> = c
                        .iter()
                        .zip(&offs)
                        .map(|(&a, &o)| {
                            let j = a as i64 + o;
                            (j >= 0 && (j as usize) < self.m).then_some(j as usize)
                        })
                        .collect();
                    if let Some(idx) = idx {
                        let d2: f64 =
                            idx.iter().zip(center).map(|(&i, &x)| (self.coordinate(i) - x).powi(2)).sum();
                        if d2 <= radius * radius * (1.0 + 1e-12) {
                            v.push(idx);
                        }
                    }
                    let mut d = 0;
                    while d < self.n {
                        offs[d] += 1;
                        if offs[d] <= reach {
                            break;
                        }
                        offs[d] = -reach;
                        d += 1;
                    }
                    if d == self.n {
                        break;
                    }
                }
                v
            }
        };
        out.sort();
        out.dedup();
        Ok(out)
    }
}

/// Half-width `max(4·diam K + |K|_∞ reach, 1)` of the default computational box.
pub fn default_half_width(set: &CompactSet) -> f64 {
    (4.0 * set.diameter() + set.extent()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_a_node() {
        let b = BoxLattice::new(3, 1.0, 0.125).unwrap();
        assert_eq!(b.m, 15);
        let i = b.nearest(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(i, vec![7, 7, 7]);
        assert_eq!(b.unflat(b.flat(&i)), i);
        assert_eq!(b.coordinate(7), 0.0);
    }

    #[test]
    fn ball_nodes() {
        let b = BoxLattice::new(2, 1.0, 0.25).unwrap();
        let k = b.nodes_of(&CompactSet::Ball { center: vec![0.0, 0.0], radius: 0.25 }).unwrap();
        assert_eq!(k.len(), 5);
        assert!(b.nodes_of(&CompactSet::Empty).unwrap().is_empty());
    }
}
