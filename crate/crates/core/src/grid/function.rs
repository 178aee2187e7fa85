use std::sync::Arc;

use super::cartesian::CartesianGrid;
use crate::error::{Error, Result};

/// Values at the interior nodes of a grid, plus optional ghost values.
#[derive(Debug, Clone)]
pub struct GridFunction<G = CartesianGrid> {
    grid: Arc<G>,
    values: Vec<f64>,
    ghost_values: Option<Vec<f64>>,
}

impl<G> GridFunction<G> {
    pub fn grid(&self) -> &Arc<G> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ghost_values(&self) -> Option<&[f64]> {
        self.ghost_values.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
            ghost_values: self.ghost_values.clone(),
        }
    }
}

impl GridFunction<CartesianGrid> {
    pub fn new(grid: Arc<CartesianGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} interior nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values, ghost_values: None })
    }

    pub fn zeros(grid: Arc<CartesianGrid>) -> Self {
        let n = grid.len();
        GridFunction { grid, values: vec![0.0; n], ghost_values: None }
    }

    pub fn from_fn(grid: Arc<CartesianGrid>, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node_position(i))).collect();
        GridFunction { grid, values, ghost_values: None }
    }

    pub fn with_ghost_values(mut self, ghost: Vec<f64>) -> Result<Self> {
        if ghost.len() != self.grid.ghosts().len() {
            return Err(Error::GridMismatch("ghost value count differs from ghost count".into()));
        }
        self.ghost_values = Some(ghost);
        Ok(self)
    }

    /// CSV with header `kind,i,j,k,x,y,z,value`: one `node` row per interior
    /// node, then one `ghost` row per ghost when ghost values are present.
    pub fn to_csv(&self) -> String {
        let grid = &self.grid;
        let mut out = String::from("kind,i,j,k,x,y,z,value\n");
        let mut row = |kind: &str, c: super::Coord, v: f64| {
            let x = grid.position(c);
            out.push_str(&format!(
                "{kind},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                c[0], c[1], c[2], x[0], x[1], x[2], v
            ));
        };
        for (c, &v) in grid.coords().iter().zip(&self.values) {
            row("node", *c, v);
        }
        if let Some(gv) = &self.ghost_values {
            for (g, &v) in grid.ghosts().iter().zip(gv) {
                row("ghost", g.coord, v);
            }
        }
        out
    }

    /// Inverse of [`GridFunction::to_csv`]; rows are matched by lattice index.
    pub fn from_csv(grid: Arc<CartesianGrid>, text: &str) -> Result<Self> {
        let mut values = vec![f64::NAN; grid.len()];
        let mut ghosts = vec![f64::NAN; grid.ghosts().len()];
        let mut any_ghost = false;
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| rec.get(k).ok_or_else(|| Error::config(format!("row {}", line + 2), "too few columns"));
            let int = |k: usize| -> Result<i64> {
                field(k)?.trim().parse().map_err(|_| Error::config(format!("row {}", line + 2), "bad lattice index"))
            };
            let c = [int(1)?, int(2)?, int(3)?];
            let v: f64 =
                field(7)?.trim().parse().map_err(|_| Error::config(format!("row {}", line + 2), "bad value"))?;
            match field(0)?.trim() {
                "node" => {
                    let i = grid.node_at(c).ok_or_else(|| Error::GridMismatch(format!("{c:?} is not a node")))?;
                    values[i] = v;
                }
                "ghost" => {
                    let g = grid.ghost_at(c).ok_or_else(|| Error::GridMismatch(format!("{c:?} is not a ghost")))?;
                    ghosts[g] = v;
                    any_ghost = true;
                }
                other => return Err(Error::config(format!("row {}", line + 2), format!("unknown kind `{other}`"))),
            }
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::GridMismatch("solution file does not cover every node".into()));
        }
        let f = GridFunction::new(grid, values)?;
        if !any_ghost {
            return Ok(f);
        }
        if ghosts.iter().any(|v| v.is_nan()) {
            return Err(Error::GridMismatch("solution file covers only some ghosts".into()));
        }
        f.with_ghost_values(ghosts)
    }

    /// Fails unless both functions live on the same grid.
    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        same_grid(&self.grid, &other.grid)
    }
}

impl GridFunction<super::radial::RadialGrid> {
    pub fn on_radial(grid: Arc<super::radial::RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a radial grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values, ghost_values: None })
    }
}

pub(crate) fn same_grid(a: &Arc<CartesianGrid>, b: &Arc<CartesianGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) {
        return Ok(());
    }
    if a.dim() == b.dim() && a.h() == b.h() && a.shape() == b.shape() && a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "grids differ: {:?} h={} vs {:?} h={}",
            a.shape(),
            a.h(),
            b.shape(),
            b.h()
        )))
    }
}

/// Cell-sum quadrature `Σ f·w·h^dim` over interior nodes.
pub fn integrate_weighted(f: &GridFunction, w: &GridFunction) -> Result<f64> {
    f.check_same_grid(w)?;
    let s: f64 = f.values().iter().zip(w.values()).map(|(a, b)| a * b).sum();
    Ok(s * f.grid().cell_volume())
}

/// Cell-sum integral of a nodal vector.
pub fn integrate(grid: &CartesianGrid, f: &[f64]) -> f64 {
    f.iter().sum::<f64>() * grid.cell_volume()
}
