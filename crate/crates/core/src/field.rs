//! Points, tangent vectors and the field traits everything else is built on.
//!
//! Fields are evaluated on [`Jet`] inputs only. A plain `f64` evaluation is a
//! jet with no active directions, so one closed form serves both the value
//! and every derivative the operations need.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{self, Jet};
use crate::linalg::Matrix;

/// Tangent vectors shorter than this are rejected: Finsler data is only smooth
/// on the slit tangent bundle.
pub const MIN_TANGENT_NORM: f64 = 1e-8;

/// Coordinates `x^i` of a point in an open subset of `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint(Vec<f64>);

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidCoordinates(format!(
                "a chart point needs n >= 2 coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCoordinates(format!("non-finite coordinate in {coords:?}")));
        }
        Ok(ChartPoint(coords))
    }

    pub fn origin(n: usize) -> Self {
        ChartPoint(vec![0.0; n])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.0)
    }

    pub fn jets(&self) -> Vec<Jet> {
        jet::constants(&self.0)
    }
}

/// Components `y^i` of a tangent vector.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector(Vec<f64>);

impl TangentVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCoordinates(format!("non-finite component in {coords:?}")));
        }
        Ok(TangentVector(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.0)
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector(self.0.iter().map(|v| v * s).collect())
    }

    /// Rejects vectors on (or numerically near) the zero section.
    pub fn ensure_nonzero(&self) -> Result<()> {
        let norm = self.norm();
        if norm < MIN_TANGENT_NORM {
            return Err(Error::ZeroVector { norm });
        }
        Ok(())
    }

    pub fn jets(&self) -> Vec<Jet> {
        jet::constants(&self.0)
    }
}

pub(crate) fn check_dims(n: usize, x: &ChartPoint, y: Option<&TangentVector>) -> Result<()> {
    if x.dim() != n {
        return Err(Error::Dimension { expected: n, got: x.dim() });
    }
    if let Some(y) = y {
        if y.dim() != n {
            return Err(Error::Dimension { expected: n, got: y.dim() });
        }
    }
    Ok(())
}

/// A differentiable function of `(x, y)` on the tangent bundle.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet;
}

/// [`ScalarField`] backed by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[Jet], &[Jet]) -> Jet + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[Jet], &[Jet]) -> Jet + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        (self.f)(x, y)
    }
}

/// A Finsler norm `F(x, y)`.
pub trait FinslerMetric: Send + Sync {
    fn dim(&self) -> usize;
    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet;

    /// Directions consumed internally by `norm` (e.g. a Hessian metric spends two).
    fn nesting_depth(&self) -> usize {
        0
    }

    /// Checks that `x` lies in the region where the metric is defined.
    fn admits(&self, _x: &ChartPoint) -> Result<()> {
        Ok(())
    }

    fn energy(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let f = self.norm(x, y);
        f * f
    }
}

/// `F^2` of a Finsler metric as a scalar field.
pub struct Energy<'a>(pub &'a dyn FinslerMetric);

impl ScalarField for Energy<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.0.energy(x, y)
    }
}

/// Riemannian metric `a_ij(x)`: symmetric, positive definite.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet>;
    fn nesting_depth(&self) -> usize {
        0
    }
}

/// 1-form `b_i(x)`.
pub trait OneFormField: Send + Sync {
    fn dim(&self) -> usize;
    fn components(&self, x: &[Jet]) -> Vec<Jet>;
    fn nesting_depth(&self) -> usize {
        0
    }
}

/// Vector field `W^i(x)`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn components(&self, x: &[Jet]) -> Vec<Jet>;
    fn nesting_depth(&self) -> usize {
        0
    }
}

pub type SharedMetric = Arc<dyn MetricField>;
pub type SharedForm = Arc<dyn OneFormField>;
pub type SharedVector = Arc<dyn VectorField>;

/// The Riemannian norm `sqrt(a_ij y^i y^j)`.
#[derive(Clone)]
pub struct RiemannNorm(pub SharedMetric);

impl FinslerMetric for RiemannNorm {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.energy(x, y).sqrt()
    }
    fn energy(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.0.matrix(x).bilinear(y, y)
    }
    fn nesting_depth(&self) -> usize {
        self.0.nesting_depth()
    }
}

/// `a^{ij} b_i b_j`, evaluated on jets.
pub fn form_norm_sq(a: &Matrix<Jet>, b: &[Jet]) -> Jet {
    a.inverse_or_nan().bilinear(b, b)
}

/// Convenience: evaluate a metric at a plain point.
pub fn metric_at(metric: &dyn MetricField, x: &ChartPoint) -> Matrix<f64> {
    metric.matrix(&x.jets()).primal()
}

pub fn form_at(form: &dyn OneFormField, x: &ChartPoint) -> Vec<f64> {
    form.components(&x.jets()).iter().map(Jet::value).collect()
}

pub fn vector_at(field: &dyn VectorField, x: &ChartPoint) -> Vec<f64> {
    field.components(&x.jets()).iter().map(Jet::value).collect()
}
