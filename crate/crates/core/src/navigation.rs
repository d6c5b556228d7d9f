//! Zermelo navigation data `(h, W)` of a Randers metric and the inverse
//! transform.
//!
//! Forward: `h_ij = (1-b^2)(a_ij - b_i b_j)`, `W_flat = -(1-b^2) b`,
//! `W^i = -b^i / (1-b^2)`. Inverse, with `w2 = |W|_h^2`:
//! `a_ij = ((1-w2) h_ij + W_i W_j) / (1-w2)^2`, `b_i = -W_i / (1-w2)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{check_dims, form_norm_sq, ChartPoint, MetricField, OneFormField, SharedMetric, SharedVector, VectorField};
use crate::jet::{dot, Jet};
use crate::linalg::Matrix;
use crate::randers::{Domain, RandersMetric, RANDERS_MARGIN};

/// Riemannian metric `h` and wind `W` with `|W|_h < 1`.
#[derive(Clone)]
pub struct NavigationData {
    h: SharedMetric,
    wind: SharedVector,
    domain: Domain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NavigationPoint {
    pub h: Matrix<f64>,
    pub wind: Vec<f64>,
    pub wind_flat: Vec<f64>,
    pub wind_sq: f64,
}

impl NavigationData {
    pub fn new(h: SharedMetric, wind: SharedVector, domain: Domain) -> Result<Self> {
        if h.dim() != wind.dim() {
            return Err(Error::Dimension { expected: h.dim(), got: wind.dim() });
        }
        Ok(NavigationData { h, wind, domain })
    }

    pub fn h(&self) -> &SharedMetric {
        &self.h
    }

    pub fn wind(&self) -> &SharedVector {
        &self.wind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `W_flat_i = h_ij W^j` as a 1-form field.
    pub fn wind_flat(&self) -> Arc<dyn OneFormField> {
        Arc::new(LoweredWind(self.clone()))
    }

    pub fn evaluate(&self, x: &ChartPoint) -> NavigationPoint {
        let xj = x.jets();
        let h = self.h.matrix(&xj).primal();
        let wind: Vec<f64> = self.wind.components(&xj).iter().map(Jet::value).collect();
        let wind_flat = h.mul_vec(&wind);
        let wind_sq = wind.iter().zip(&wind_flat).map(|(a, b)| a * b).sum();
        NavigationPoint { h, wind, wind_flat, wind_sq }
    }

    /// Pointwise data, checking the domain, positivity of `h` and `|W|_h < 1`.
    pub fn at(&self, x: &ChartPoint) -> Result<NavigationPoint> {
        check_dims(self.dim(), x, None)?;
        self.domain.check(x)?;
        let p = self.evaluate(x);
        if !p.h.is_positive_definite() {
            return Err(Error::Domain { x: x.coords().to_vec(), reason: "h is not positive definite".into() });
        }
        if !(p.wind_sq.sqrt() < 1.0 - RANDERS_MARGIN) {
            return Err(Error::Domain {
                x: x.coords().to_vec(),
                reason: format!("|W|_h = {} violates |W|_h < 1 - {RANDERS_MARGIN:e}", p.wind_sq.sqrt()),
            });
        }
        Ok(p)
    }
}

struct LoweredWind(NavigationData);

impl OneFormField for LoweredWind {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        self.0.h.matrix(x).mul_vec(&self.0.wind.components(x))
    }
    fn nesting_depth(&self) -> usize {
        self.0.h.nesting_depth().max(self.0.wind.nesting_depth())
    }
}

/// `W = scale * x`; the Funk wind is `scale = -1`.
#[derive(Clone, Debug)]
pub struct RadialWind {
    pub n: usize,
    pub scale: f64,
}

impl VectorField for RadialWind {
    fn dim(&self) -> usize {
        self.n
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        x.iter().map(|&v| v * self.scale).collect()
    }
}

/// `W = 0`.
#[derive(Clone, Debug)]
pub struct ZeroWind(pub usize);

impl VectorField for ZeroWind {
    fn dim(&self) -> usize {
        self.0
    }
    fn components(&self, _x: &[Jet]) -> Vec<Jet> {
        vec![Jet::constant(0.0); self.0]
    }
}

struct NavMetric(RandersMetric);

impl MetricField for NavMetric {
    fn dim(&self) -> usize {
        self.0.alpha().dim()
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let a = self.0.alpha().matrix(x);
        let b = self.0.beta().components(x);
        let s = 1.0 - form_norm_sq(&a, &b);
        Matrix::from_fn(a.dim(), |i, j| s * (a[(i, j)] - b[i] * b[j]))
    }
    fn nesting_depth(&self) -> usize {
        self.0.alpha().nesting_depth().max(self.0.beta().nesting_depth())
    }
}

struct NavWind(RandersMetric);

impl VectorField for NavWind {
    fn dim(&self) -> usize {
        self.0.alpha().dim()
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let a = self.0.alpha().matrix(x);
        let b = self.0.beta().components(x);
        let inv = a.inverse_or_nan();
        let upper = inv.mul_vec(&b);
        let s = (1.0 - dot(&b, &upper)).recip() * -1.0;
        upper.into_iter().map(|v| v * s).collect()
    }
    fn nesting_depth(&self) -> usize {
        self.0.alpha().nesting_depth().max(self.0.beta().nesting_depth())
    }
}

fn wind_parts(n: &NavigationData, x: &[Jet]) -> (Matrix<Jet>, Vec<Jet>, Jet) {
    let h = n.h.matrix(x);
    let w = n.wind.components(x);
    let flat = h.mul_vec(&w);
    let w2 = dot(&w, &flat);
    (h, flat, w2)
}

struct InverseAlpha(NavigationData);

impl MetricField for InverseAlpha {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let (h, flat, w2) = wind_parts(&self.0, x);
        let lam = 1.0 - w2;
        let s = (lam * lam).recip();
        Matrix::from_fn(h.dim(), |i, j| (lam * h[(i, j)] + flat[i] * flat[j]) * s)
    }
    fn nesting_depth(&self) -> usize {
        self.0.h.nesting_depth().max(self.0.wind.nesting_depth())
    }
}

struct InverseBeta(NavigationData);

impl OneFormField for InverseBeta {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let (_, flat, w2) = wind_parts(&self.0, x);
        let s = (1.0 - w2).recip() * -1.0;
        flat.into_iter().map(|v| v * s).collect()
    }
    fn nesting_depth(&self) -> usize {
        self.0.h.nesting_depth().max(self.0.wind.nesting_depth())
    }
}

/// Navigation data of a Randers metric. Pointwise validity is checked by
/// [`NavigationData::at`] (and [`RandersMetric::at`] on the input).
pub fn to_navigation(r: &RandersMetric) -> NavigationData {
    NavigationData {
        h: Arc::new(NavMetric(r.clone())),
        wind: Arc::new(NavWind(r.clone())),
        domain: r.domain(),
    }
}

/// The Randers metric with navigation data `n`.
pub fn from_navigation(n: &NavigationData) -> RandersMetric {
    RandersMetric::new(Arc::new(InverseAlpha(n.clone())), Arc::new(InverseBeta(n.clone())), n.domain)
        .expect("navigation fields share one dimension")
}

/// Largest componentwise gap between the `(a, b)` data of two Randers metrics at `x`.
pub fn randers_gap(p: &RandersMetric, q: &RandersMetric, x: &ChartPoint) -> f64 {
    let (u, v) = (p.evaluate(x), q.evaluate(x));
    let db = u.b.iter().zip(&v.b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    u.a.max_abs_diff(&v.a).max(db)
}

/// Largest componentwise gap between the `(h, W)` data of two navigation pairs at `x`.
pub fn navigation_gap(p: &NavigationData, q: &NavigationData, x: &ChartPoint) -> f64 {
    let (u, v) = (p.evaluate(x), q.evaluate(x));
    let dw = u.wind.iter().zip(&v.wind).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    u.h.max_abs_diff(&v.h).max(dw)
}
