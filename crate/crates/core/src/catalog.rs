//! Closed-form metrics and 1-forms: Euclidean, Funk, the two-parameter
//! dually flat family, the constant-curvature metric with its closed
//! conformal 1-form, and the dually flat Riemannian metric with its dually
//! related 1-form.
//!
//! Every Randers entry also has a "display" form, which evaluates `F`
//! directly from its one-line formula instead of from `(a_ij, b_i)`. The two
//! are independent code paths and are compared in the tests.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FinslerMetric, MetricField, OneFormField};
use crate::jet::{dot, Jet};
use crate::linalg::Matrix;
use crate::randers::{Domain, RandersMetric};

fn sq(x: &[Jet]) -> Jet {
    dot(x, x)
}

/// `delta_ij * diag + x_i x_j * outer`.
fn radial_matrix(x: &[Jet], diag: Jet, outer: Jet) -> Matrix<Jet> {
    let n = x.len();
    Matrix::from_fn(n, |i, j| {
        let v = x[i] * x[j] * outer;
        if i == j {
            v + diag
        } else {
            v
        }
    })
}

/// `r_mu`: `1/sqrt(-mu)` for `mu < 0`, infinite otherwise.
pub fn radius_for(mu: f64) -> f64 {
    if mu < 0.0 {
        1.0 / (-mu).sqrt()
    } else {
        f64::INFINITY
    }
}

/// Largest `r` with `b < 1` on `|x| < r` for the `a = 0` pairs, where
/// `b^2 = lambda^2 s / (1 + mu s)`, `s = |x|^2`; intersected with `r_mu`.
pub fn conformal_pair_radius(mu: f64, lambda: f64) -> f64 {
    let k = lambda * lambda - mu;
    let r = if k > 0.0 { 1.0 / k.sqrt() } else { f64::INFINITY };
    r.min(radius_for(mu))
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {n}")));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Euclidean {
    n: usize,
}

impl Euclidean {
    pub fn new(n: usize) -> Self {
        Euclidean { n }
    }
}

impl MetricField for Euclidean {
    fn dim(&self) -> usize {
        self.n
    }
    fn matrix(&self, _x: &[Jet]) -> Matrix<Jet> {
        Matrix::identity(self.n)
    }
}

#[derive(Clone, Debug)]
pub struct ZeroForm {
    n: usize,
}

impl ZeroForm {
    pub fn new(n: usize) -> Self {
        ZeroForm { n }
    }
}

impl OneFormField for ZeroForm {
    fn dim(&self) -> usize {
        self.n
    }
    fn components(&self, _x: &[Jet]) -> Vec<Jet> {
        vec![Jet::constant(0.0); self.n]
    }
}

/// `b_i = c_i`, constant components.
#[derive(Clone, Debug)]
pub struct ConstantForm {
    c: Vec<f64>,
}

impl ConstantForm {
    pub fn new(c: Vec<f64>) -> Self {
        ConstantForm { c }
    }
}

impl OneFormField for ConstantForm {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn components(&self, _x: &[Jet]) -> Vec<Jet> {
        self.c.iter().map(|&v| Jet::constant(v)).collect()
    }
}

/// `b_i = scale * x_i` (the 1-form `scale <x, y>`).
#[derive(Clone, Debug)]
pub struct RadialForm {
    n: usize,
    scale: f64,
}

impl RadialForm {
    pub fn new(n: usize, scale: f64) -> Self {
        RadialForm { n, scale }
    }
}

impl OneFormField for RadialForm {
    fn dim(&self) -> usize {
        self.n
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        x.iter().map(|&v| v * self.scale).collect()
    }
}

pub fn euclidean(n: usize) -> Result<RandersMetric> {
    check_dim(n)?;
    Ok(RandersMetric::riemannian(Arc::new(Euclidean::new(n)), Domain::whole()))
}

// ---------------------------------------------------------------- Funk

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `a_ij = ((1-|x|^2) delta_ij + x_i x_j) / (1-|x|^2)^2`.
#[derive(Clone, Debug)]
pub struct FunkAlpha {
    n: usize,
}

impl MetricField for FunkAlpha {
    fn dim(&self) -> usize {
        self.n
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let w = 1.0 - sq(x);
        let w2 = (w * w).recip();
        radial_matrix(x, w * w2, w2)
    }
}

/// `b_i = +- x_i / (1-|x|^2)`.
#[derive(Clone, Debug)]
pub struct FunkBeta {
    n: usize,
    sign: f64,
}

impl OneFormField for FunkBeta {
    fn dim(&self) -> usize {
        self.n
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let s = (1.0 - sq(x)).recip() * self.sign;
        x.iter().map(|&v| v * s).collect()
    }
}

pub fn funk(n: usize, sign: Sign) -> Result<RandersMetric> {
    check_dim(n)?;
    RandersMetric::new(
        Arc::new(FunkAlpha { n }),
        Arc::new(FunkBeta { n, sign: sign.factor() }),
        Domain::ball(1.0),
    )
}

/// Funk metric straight from its displayed formula.
#[derive(Clone, Debug)]
pub struct FunkDisplay {
    pub n: usize,
    pub sign: Sign,
}

impl FinslerMetric for FunkDisplay {
    fn dim(&self) -> usize {
        self.n
    }
    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let xx = sq(x);
        let xy = dot(x, y);
        let w = 1.0 - xx;
        ((w * sq(y) + xy * xy).sqrt() + xy * self.sign.factor()) / w
    }
}

// ---------------------------------------------------------------- family

/// Parameters of the two-parameter dually flat family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyParams {
    pub mu: f64,
    pub lambda: f64,
    pub n: usize,
}

impl FamilyParams {
    pub fn new(mu: f64, lambda: f64, n: usize) -> Result<Self> {
        check_dim(n)?;
        check_finite("mu", mu)?;
        check_finite("lambda", lambda)?;
        Ok(FamilyParams { mu, lambda, n })
    }

    /// `r_mu`, cut down for `mu > 0` to where `b < 1`:
    /// `b^2 = lambda^2 s w / (w + lambda^2 s)` reaches 1 at `lambda^2 mu s^2 = 1 + mu s`.
    pub fn radius(&self) -> f64 {
        let (mu, l2) = (self.mu, self.lambda * self.lambda);
        if mu > 0.0 && l2 > 0.0 {
            let s = (mu + (mu * mu + 4.0 * l2 * mu).sqrt()) / (2.0 * l2 * mu);
            s.sqrt()
        } else {
            radius_for(mu)
        }
    }
}

/// `a_ij = q^(1/2) ((1+mu|x|^2) delta_ij - mu x_i x_j) / (1+mu|x|^2)^2`,
/// `q = 1 + (mu + lambda^2)|x|^2`.
#[derive(Clone, Debug)]
pub struct FamilyAlpha {
    p: FamilyParams,
}

impl MetricField for FamilyAlpha {
    fn dim(&self) -> usize {
        self.p.n
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let FamilyParams { mu, lambda, .. } = self.p;
        let xx = sq(x);
        let w = 1.0 + xx * mu;
        let q = 1.0 + xx * (mu + lambda * lambda);
        let s = q.sqrt() / (w * w);
        radial_matrix(x, w * s, s * (-mu))
    }
}

/// `b_i = lambda x_i / ((1+mu|x|^2) q^(1/4))`.
#[derive(Clone, Debug)]
pub struct FamilyBeta {
    p: FamilyParams,
}

impl OneFormField for FamilyBeta {
    fn dim(&self) -> usize {
        self.p.n
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let FamilyParams { mu, lambda, .. } = self.p;
        let xx = sq(x);
        let w = 1.0 + xx * mu;
        let q = 1.0 + xx * (mu + lambda * lambda);
        let s = (w * q.powf(0.25)).recip() * lambda;
        x.iter().map(|&v| v * s).collect()
    }
}

pub fn example_family(p: FamilyParams) -> Result<RandersMetric> {
    let p = FamilyParams::new(p.mu, p.lambda, p.n)?;
    RandersMetric::new(Arc::new(FamilyAlpha { p }), Arc::new(FamilyBeta { p }), Domain::ball(p.radius()))
}

/// The family straight from its displayed formula.
#[derive(Clone, Debug)]
pub struct FamilyDisplay(pub FamilyParams);

impl FinslerMetric for FamilyDisplay {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let FamilyParams { mu, lambda, .. } = self.0;
        let xx = sq(x);
        let xy = dot(x, y);
        let w = 1.0 + xx * mu;
        let q4 = (1.0 + xx * (mu + lambda * lambda)).powf(0.25);
        q4 * (w * sq(y) - xy * xy * mu).sqrt() / w + xy * lambda / (w * q4)
    }
}

/// The companion display obtained through the third equivalent item; equals
/// the family at `(mu - lambda^2, -lambda)`.
#[derive(Clone, Debug)]
pub struct AltFamilyDisplay {
    pub mu: f64,
    pub lambda: f64,
    pub n: usize,
}

impl FinslerMetric for AltFamilyDisplay {
    fn dim(&self) -> usize {
        self.n
    }
    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let (mu, lambda) = (self.mu, self.lambda);
        let m = mu - lambda * lambda;
        let xx = sq(x);
        let xy = dot(x, y);
        let w = 1.0 + xx * m;
        let q4 = (1.0 + xx * mu).powf(0.25);
        q4 * (w * sq(y) - xy * xy * m).sqrt() / w - xy * lambda / (w * q4)
    }
}

// ---------------------------------------------------------------- constant curvature

/// `a_ij = ((1+mu|x|^2) delta_ij - mu x_i x_j) / (1+mu|x|^2)^2`, sectional curvature `mu`.
#[derive(Clone, Debug)]
pub struct ConstantCurvature {
    pub mu: f64,
    pub n: usize,
}

impl MetricField for ConstantCurvature {
    fn dim(&self) -> usize {
        self.n
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let w = 1.0 + sq(x) * self.mu;
        let s = (w * w).recip();
        radial_matrix(x, w * s, s * (-self.mu))
    }
}

/// `b_i = (lambda x_i + (1+mu|x|^2) a_i - mu <a,x> x_i) / (1+mu|x|^2)^(3/2)`,
/// closed and conformal with respect to [`ConstantCurvature`].
#[derive(Clone, Debug)]
pub struct ClosedConformal {
    pub lambda: f64,
    pub mu: f64,
    pub a: Vec<f64>,
}

impl OneFormField for ClosedConformal {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let w = 1.0 + sq(x) * self.mu;
        let ax: Jet = x.iter().zip(&self.a).map(|(&xi, &ai)| xi * ai).sum();
        let s = w.powf(-1.5);
        x.iter()
            .zip(&self.a)
            .map(|(&xi, &ai)| (xi * self.lambda + w * ai - ax * xi * self.mu) * s)
            .collect()
    }
}

pub fn csc_metric(mu: f64, n: usize) -> Result<ConstantCurvature> {
    check_dim(n)?;
    check_finite("mu", mu)?;
    Ok(ConstantCurvature { mu, n })
}

/// The closed conformal 1-form. A nonzero constant vector is only admitted
/// for `mu = 0`; for `mu != 0` the construction forces `a = 0`.
pub fn cc_oneform(lambda: f64, mu: f64, a: Vec<f64>) -> Result<ClosedConformal> {
    check_dim(a.len())?;
    check_finite("lambda", lambda)?;
    check_finite("mu", mu)?;
    if mu != 0.0 && a.iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidParameter("the constant vector a must vanish when mu != 0".into()));
    }
    Ok(ClosedConformal { lambda, mu, a })
}

/// Constant-curvature metric as a Riemannian Randers metric (`beta = 0`).
pub fn csc(mu: f64, n: usize) -> Result<RandersMetric> {
    Ok(RandersMetric::riemannian(Arc::new(csc_metric(mu, n)?), Domain::ball(radius_for(mu))))
}

/// Constant-curvature metric paired with its closed conformal 1-form.
pub fn csc_with_cc(mu: f64, lambda: f64, n: usize) -> Result<RandersMetric> {
    RandersMetric::new(
        Arc::new(csc_metric(mu, n)?),
        Arc::new(cc_oneform(lambda, mu, vec![0.0; n])?),
        Domain::ball(conformal_pair_radius(mu, lambda)),
    )
}

/// `alpha + beta` of the constant-curvature pair from its displayed formulas.
#[derive(Clone, Debug)]
pub struct CscCcDisplay {
    pub mu: f64,
    pub lambda: f64,
    pub a: Vec<f64>,
}

impl FinslerMetric for CscCcDisplay {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let mu = self.mu;
        let xx = sq(x);
        let xy = dot(x, y);
        let w = 1.0 + xx * mu;
        let ay: Jet = y.iter().zip(&self.a).map(|(&v, &c)| v * c).sum();
        let ax: Jet = x.iter().zip(&self.a).map(|(&v, &c)| v * c).sum();
        let alpha = (w * sq(y) - xy * xy * mu).sqrt() / w;
        let beta = (xy * self.lambda + w * ay - ax * xy * mu) / w.powf(1.5);
        alpha + beta
    }
}

// ---------------------------------------------------------------- dually flat Riemannian

/// `a_ij = ((1+mu|x|^2) delta_ij - mu x_i x_j) / (1+mu|x|^2)^(3/2)`, dually flat.
#[derive(Clone, Debug)]
pub struct DuallyFlatRiemann {
    pub mu: f64,
    pub n: usize,
}

impl MetricField for DuallyFlatRiemann {
    fn dim(&self) -> usize {
        self.n
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let w = 1.0 + sq(x) * self.mu;
        let s = w.powf(-1.5);
        radial_matrix(x, w * s, s * (-self.mu))
    }
}

/// `b_i = lambda x_i / (1+mu|x|^2)^(5/4)`, dually related to [`DuallyFlatRiemann`].
#[derive(Clone, Debug)]
pub struct DuallyRelatedForm {
    pub lambda: f64,
    pub mu: f64,
    pub n: usize,
}

impl OneFormField for DuallyRelatedForm {
    fn dim(&self) -> usize {
        self.n
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let s = (1.0 + sq(x) * self.mu).powf(-1.25) * self.lambda;
        x.iter().map(|&v| v * s).collect()
    }
}

pub fn dfr_metric(mu: f64, n: usize) -> Result<DuallyFlatRiemann> {
    check_dim(n)?;
    check_finite("mu", mu)?;
    Ok(DuallyFlatRiemann { mu, n })
}

pub fn drb_oneform(lambda: f64, mu: f64, n: usize) -> Result<DuallyRelatedForm> {
    check_dim(n)?;
    check_finite("lambda", lambda)?;
    check_finite("mu", mu)?;
    Ok(DuallyRelatedForm { lambda, mu, n })
}

pub fn dfr(mu: f64, n: usize) -> Result<RandersMetric> {
    Ok(RandersMetric::riemannian(Arc::new(dfr_metric(mu, n)?), Domain::ball(radius_for(mu))))
}

pub fn dfr_with_drb(mu: f64, lambda: f64, n: usize) -> Result<RandersMetric> {
    RandersMetric::new(
        Arc::new(dfr_metric(mu, n)?),
        Arc::new(drb_oneform(lambda, mu, n)?),
        Domain::ball(conformal_pair_radius(mu, lambda)),
    )
}

/// `alpha-bar + beta-bar` of the dually flat pair from the displayed formulas.
#[derive(Clone, Debug)]
pub struct DfrDrbDisplay {
    pub mu: f64,
    pub lambda: f64,
    pub n: usize,
}

impl FinslerMetric for DfrDrbDisplay {
    fn dim(&self) -> usize {
        self.n
    }
    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let mu = self.mu;
        let xx = sq(x);
        let xy = dot(x, y);
        let w = 1.0 + xx * mu;
        (w * sq(y) - xy * xy * mu).sqrt() / w.powf(0.75) + xy * self.lambda / w.powf(1.25)
    }
}
