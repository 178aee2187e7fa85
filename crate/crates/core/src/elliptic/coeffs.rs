use serde::{Deserialize, Serialize};

/// Scalar coefficient fields from a fixed catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    /// `base + amp·sin(freq·x_axis)`.
    Sine { base: f64, amp: f64, axis: usize, freq: f64 },
    /// `base + grad·x`.
    Affine { base: f64, grad: Vec<f64> },
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn zero() -> Self {
        ScalarField::Constant { value: 0.0 }
    }

    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Sine { base, amp, axis, freq } => base + amp * (freq * x[*axis]).sin(),
            ScalarField::Affine { base, grad } => base + grad.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>(),
        }
    }

    /// Analytic partial derivative along `axis`.
    pub fn partial(&self, x: &[f64; 3], axis: usize) -> f64 {
        match self {
            ScalarField::Constant { .. } => 0.0,
            ScalarField::Sine { amp, axis: a, freq, .. } => {
                if *a == axis {
                    amp * freq * (freq * x[*a]).cos()
                } else {
                    0.0
                }
            }
            ScalarField::Affine { grad, .. } => grad.get(axis).copied().unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Constant { value } if *value == 0.0)
    }

    /// Lower bound from the closed form where available, else `None`.
    pub fn lower_bound(&self) -> Option<f64> {
        match self {
            ScalarField::Constant { value } => Some(*value),
            ScalarField::Sine { base, amp, .. } => Some(base - amp.abs()),
            ScalarField::Affine { .. } => None,
        }
    }
}

/// Diffusion tensor: isotropic `s(x)·I` or axis-aligned `diag(s_1, …, s_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diffusion {
    Isotropic { field: ScalarField },
    Diagonal { fields: Vec<ScalarField> },
}

impl Diffusion {
    pub fn component(&self, axis: usize, x: &[f64; 3]) -> f64 {
        match self {
            Diffusion::Isotropic { field } => field.eval(x),
            Diffusion::Diagonal { fields } => fields[axis].eval(x),
        }
    }

    pub fn is_isotropic_constant(&self) -> bool {
        matches!(self, Diffusion::Isotropic { field: ScalarField::Constant { .. } })
    }
}

/// Coefficients of `−∂_i(a_ij ∂_j u) + b·∇u − ∂_i(c_i u) + d u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a: Diffusion,
    #[serde(default)]
    pub b: Vec<ScalarField>,
    #[serde(default)]
    pub c: Vec<ScalarField>,
    #[serde(default = "ScalarField::zero")]
    pub d: ScalarField,
    /// Claimed ellipticity constant, checked at every node.
    pub ellipticity: f64,
}

impl CoefficientSet {
    /// `L = −Δ`.
    pub fn laplacian() -> Self {
        CoefficientSet {
            a: Diffusion::Isotropic { field: ScalarField::constant(1.0) },
            b: Vec::new(),
            c: Vec::new(),
            d: ScalarField::zero(),
            ellipticity: 1.0,
        }
    }

    /// Isotropic diffusion `a(x)·I` with the given ellipticity constant.
    pub fn isotropic(field: ScalarField, ellipticity: f64) -> Self {
        CoefficientSet { a: Diffusion::Isotropic { field }, ellipticity, ..CoefficientSet::laplacian() }
    }

    pub fn with_reaction(mut self, d: ScalarField) -> Self {
        self.d = d;
        self
    }

    pub fn with_drifts(mut self, b: Vec<ScalarField>, c: Vec<ScalarField>) -> Self {
        self.b = b;
        self.c = c;
        self
    }

    /// Coefficients of the formal adjoint: `b` and `c` exchange roles.
    pub fn adjoint(&self) -> Self {
        CoefficientSet { b: self.c.clone(), c: self.b.clone(), ..self.clone() }
    }

    pub fn has_first_order(&self) -> bool {
        self.b.iter().chain(&self.c).any(|f| !f.is_zero())
    }

    pub fn b_at(&self, axis: usize, x: &[f64; 3]) -> f64 {
        self.b.get(axis).map_or(0.0, |f| f.eval(x))
    }

    pub fn c_at(&self, axis: usize, x: &[f64; 3]) -> f64 {
        self.c.get(axis).map_or(0.0, |f| f.eval(x))
    }
}
