//! Beta-deformations: a stretch along `beta`, a conformal rescale and a
//! rescale of the 1-form, each by a factor depending only on `t = b^2`.
//!
//! ```text
//! a~ = a - kappa(t) b b        b~ = b
//! a^ = e^{2 rho(t)} a~         b^ = b~
//! a- = a^                      b- = nu(t) b^
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{check_dims, form_norm_sq, ChartPoint, MetricField, OneFormField, SharedForm, SharedMetric, TangentVector};
use crate::jet::Jet;
use crate::linalg::Matrix;
use crate::riemann::{covariant_decomposition, covariant_derivative, riemann_spray, CovariantDecomposition};

/// Factors `(kappa, rho, nu)` of `t = b^2` with their `t`-derivatives.
pub trait DeformationProfile: Send + Sync {
    fn name(&self) -> String;
    fn kappa(&self, t: Jet) -> Jet;
    fn kappa_prime(&self, t: Jet) -> Jet;
    fn rho(&self, t: Jet) -> Jet;
    fn rho_prime(&self, t: Jet) -> Jet;
    fn nu(&self, t: Jet) -> Jet;
    fn nu_prime(&self, t: Jet) -> Jet;
}

fn c(v: f64) -> Jet {
    Jet::constant(v)
}

/// Plain-number evaluation of every factor at `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factors {
    pub kappa: f64,
    pub kappa_prime: f64,
    pub rho: f64,
    pub rho_prime: f64,
    pub nu: f64,
    pub nu_prime: f64,
}

pub fn factors(p: &dyn DeformationProfile, t: f64) -> Factors {
    let t = c(t);
    Factors {
        kappa: p.kappa(t).value(),
        kappa_prime: p.kappa_prime(t).value(),
        rho: p.rho(t).value(),
        rho_prime: p.rho_prime(t).value(),
        nu: p.nu(t).value(),
        nu_prime: p.nu_prime(t).value(),
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl DeformationProfile for Identity {
    fn name(&self) -> String {
        "identity".into()
    }
    fn kappa(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn kappa_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn rho(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn rho_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn nu(&self, _t: Jet) -> Jet {
        c(1.0)
    }
    fn nu_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
}

/// `kappa = 1`, `e^rho = sqrt(1-t)`, `nu = -(1-t)`: the navigation transform.
#[derive(Clone, Copy, Debug, Default)]
pub struct Navigation;

impl DeformationProfile for Navigation {
    fn name(&self) -> String {
        "navigation".into()
    }
    fn kappa(&self, _t: Jet) -> Jet {
        c(1.0)
    }
    fn kappa_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn rho(&self, t: Jet) -> Jet {
        (1.0 - t).ln() * 0.5
    }
    fn rho_prime(&self, t: Jet) -> Jet {
        (1.0 - t).recip() * -0.5
    }
    fn nu(&self, t: Jet) -> Jet {
        t - 1.0
    }
    fn nu_prime(&self, _t: Jet) -> Jet {
        c(1.0)
    }
}

/// `kappa = 0`, `e^rho = (1-t)^(1/4)`, `nu = (1-t)^(-1/4)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuarticRoot;

impl DeformationProfile for QuarticRoot {
    fn name(&self) -> String {
        "quartic-root".into()
    }
    fn kappa(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn kappa_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn rho(&self, t: Jet) -> Jet {
        (1.0 - t).ln() * 0.25
    }
    fn rho_prime(&self, t: Jet) -> Jet {
        (1.0 - t).recip() * -0.25
    }
    fn nu(&self, t: Jet) -> Jet {
        (1.0 - t).powf(-0.25)
    }
    fn nu_prime(&self, t: Jet) -> Jet {
        (1.0 - t).powf(-1.25) * 0.25
    }
}

/// Constant `kappa`, `rho = 0`, `nu = 1`. Fails the factor ODE unless
/// `kappa = 0`; kept for negative controls.
#[derive(Clone, Copy, Debug)]
pub struct ConstantKappa(pub f64);

impl DeformationProfile for ConstantKappa {
    fn name(&self) -> String {
        format!("constant-kappa({})", self.0)
    }
    fn kappa(&self, _t: Jet) -> Jet {
        c(self.0)
    }
    fn kappa_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn rho(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn rho_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn nu(&self, _t: Jet) -> Jet {
        c(1.0)
    }
    fn nu_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
}

/// The profile that carries the constant-curvature pair `(a, b)` with
/// `a = 0` to the dually flat pair: `kappa = 0`,
/// `rho = 1/4 ln(lambda^2 / (lambda^2 - mu t))` (i.e. `1/4 ln(1 + mu|x|^2)`
/// on that data) and `nu = e^rho`.
#[derive(Clone, Copy, Debug)]
pub struct Construction {
    pub mu: f64,
    pub lambda: f64,
}

impl Construction {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu.is_finite() && lambda.is_finite()) || lambda == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "construction profile needs finite mu and nonzero lambda, got ({mu}, {lambda})"
            )));
        }
        Ok(Construction { mu, lambda })
    }

    fn l2(&self) -> f64 {
        self.lambda * self.lambda
    }
}

impl DeformationProfile for Construction {
    fn name(&self) -> String {
        format!("construction(mu={}, lambda={})", self.mu, self.lambda)
    }
    fn kappa(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn kappa_prime(&self, _t: Jet) -> Jet {
        c(0.0)
    }
    fn rho(&self, t: Jet) -> Jet {
        (self.l2() - t * self.mu).ln() * -0.25 + 0.25 * self.l2().ln()
    }
    fn rho_prime(&self, t: Jet) -> Jet {
        (self.l2() - t * self.mu).recip() * (0.25 * self.mu)
    }
    fn nu(&self, t: Jet) -> Jet {
        self.rho(t).exp()
    }
    fn nu_prime(&self, t: Jet) -> Jet {
        self.rho_prime(t) * self.nu(t)
    }
}

/// Left-hand sides of the three factor ODEs at `t`:
/// `kappa^2 - kappa + kappa'(1-t)`, `1 + kappa + 4 rho'(1-t)`,
/// `(5 kappa - 1) nu + 4 (1-t) nu'`.
pub fn profile_conditions(p: &dyn DeformationProfile, t: f64) -> [f64; 3] {
    let f = factors(p, t);
    let s = 1.0 - t;
    [
        f.kappa * f.kappa - f.kappa + f.kappa_prime * s,
        1.0 + f.kappa + 4.0 * f.rho_prime * s,
        (5.0 * f.kappa - 1.0) * f.nu + 4.0 * s * f.nu_prime,
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Tilde,
    Hat,
}

#[derive(Clone)]
struct Source {
    alpha: SharedMetric,
    beta: SharedForm,
    profile: Arc<dyn DeformationProfile>,
}

impl Source {
    fn depth(&self) -> usize {
        self.alpha.nesting_depth().max(self.beta.nesting_depth())
    }
}

struct StageMetric {
    src: Source,
    stage: Stage,
}

impl MetricField for StageMetric {
    fn dim(&self) -> usize {
        self.src.alpha.dim()
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let a = self.src.alpha.matrix(x);
        let b = self.src.beta.components(x);
        let t = form_norm_sq(&a, &b);
        let k = self.src.profile.kappa(t);
        let scale = match self.stage {
            Stage::Tilde => c(1.0),
            Stage::Hat => (self.src.profile.rho(t) * 2.0).exp(),
        };
        Matrix::from_fn(a.dim(), |i, j| (a[(i, j)] - k * b[i] * b[j]) * scale)
    }
    fn nesting_depth(&self) -> usize {
        self.src.depth()
    }
}

struct BarForm(Source);

impl OneFormField for BarForm {
    fn dim(&self) -> usize {
        self.0.beta.dim()
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let a = self.0.alpha.matrix(x);
        let b = self.0.beta.components(x);
        let nu = self.0.profile.nu(form_norm_sq(&a, &b));
        b.into_iter().map(|v| v * nu).collect()
    }
    fn nesting_depth(&self) -> usize {
        self.0.depth()
    }
}

/// Output of all three stages, as metric / 1-form fields.
#[derive(Clone)]
pub struct DeformedData {
    pub alpha: SharedMetric,
    pub beta: SharedForm,
    pub tilde_alpha: SharedMetric,
    pub hat_alpha: SharedMetric,
    pub bar_alpha: SharedMetric,
    pub tilde_beta: SharedForm,
    pub hat_beta: SharedForm,
    pub bar_beta: SharedForm,
    pub profile: Arc<dyn DeformationProfile>,
}

/// Smallest admitted value of `1 - kappa b^2`.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

impl DeformedData {
    /// `b^2` of the input data at `x`.
    pub fn b_sq(&self, x: &ChartPoint) -> f64 {
        let xj = x.jets();
        form_norm_sq(&self.alpha.matrix(&xj), &self.beta.components(&xj)).value()
    }

    /// Checks `1 - kappa b^2 > 0` and `nu != 0` at `x`.
    pub fn check_at(&self, x: &ChartPoint) -> Result<()> {
        check_dims(self.alpha.dim(), x, None)?;
        let t = self.b_sq(x);
        let f = factors(self.profile.as_ref(), t);
        let value = 1.0 - f.kappa * t;
        if !(value > POSITIVITY_FLOOR) {
            return Err(Error::Positivity { value });
        }
        if !(f.nu != 0.0 && f.nu.is_finite() && f.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("profile factors degenerate at b^2 = {t}: {f:?}")));
        }
        Ok(())
    }

    /// `nu^2 e^{-2 rho} b^2 / (1 - kappa b^2)`.
    pub fn bar_b_sq_predicted(&self, x: &ChartPoint) -> f64 {
        let t = self.b_sq(x);
        let f = factors(self.profile.as_ref(), t);
        f.nu * f.nu * (-2.0 * f.rho).exp() * t / (1.0 - f.kappa * t)
    }
}

pub fn deform(alpha: SharedMetric, beta: SharedForm, profile: Arc<dyn DeformationProfile>) -> Result<DeformedData> {
    if alpha.dim() != beta.dim() {
        return Err(Error::Dimension { expected: alpha.dim(), got: beta.dim() });
    }
    let src = Source { alpha: alpha.clone(), beta: beta.clone(), profile: profile.clone() };
    let tilde: SharedMetric = Arc::new(StageMetric { src: src.clone(), stage: Stage::Tilde });
    let hat: SharedMetric = Arc::new(StageMetric { src: src.clone(), stage: Stage::Hat });
    Ok(DeformedData {
        tilde_alpha: tilde,
        hat_alpha: hat.clone(),
        bar_alpha: hat,
        tilde_beta: beta.clone(),
        hat_beta: beta.clone(),
        bar_beta: Arc::new(BarForm(src)),
        alpha,
        beta,
        profile,
    })
}

struct ReverseAlpha {
    bar_alpha: SharedMetric,
    bar_beta: SharedForm,
}

impl MetricField for ReverseAlpha {
    fn dim(&self) -> usize {
        self.bar_alpha.dim()
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let a = self.bar_alpha.matrix(x);
        let s = (1.0 + form_norm_sq(&a, &self.bar_beta.components(x))).sqrt();
        a.map(|v| v * s)
    }
    fn nesting_depth(&self) -> usize {
        self.bar_alpha.nesting_depth().max(self.bar_beta.nesting_depth())
    }
}

struct ReverseBeta {
    bar_alpha: SharedMetric,
    bar_beta: SharedForm,
}

impl OneFormField for ReverseBeta {
    fn dim(&self) -> usize {
        self.bar_beta.dim()
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let b = self.bar_beta.components(x);
        let s = (1.0 + form_norm_sq(&self.bar_alpha.matrix(x), &b)).powf(-0.25);
        b.into_iter().map(|v| v * s).collect()
    }
    fn nesting_depth(&self) -> usize {
        self.bar_alpha.nesting_depth().max(self.bar_beta.nesting_depth())
    }
}

/// Inverse of the `kappa = 0` quartic-root deformation:
/// `alpha = (1 + b-^2)^(1/4) alpha-`, `beta = (1 + b-^2)^(-1/4) beta-`.
pub fn reverse_kappa0(bar_alpha: SharedMetric, bar_beta: SharedForm) -> (SharedMetric, SharedForm) {
    (
        Arc::new(ReverseAlpha { bar_alpha: bar_alpha.clone(), bar_beta: bar_beta.clone() }),
        Arc::new(ReverseBeta { bar_alpha, bar_beta }),
    )
}

/// Everything the closed-form lemmas read off the input pair at `(x, y)`.
#[derive(Clone, Debug)]
pub struct BaseQuantities {
    pub y: Vec<f64>,
    pub a: Matrix<f64>,
    pub spray: Vec<f64>,
    pub dec: CovariantDecomposition,
    pub alpha_sq: f64,
    pub beta: f64,
}

impl BaseQuantities {
    pub fn new(alpha: &dyn MetricField, beta: &dyn OneFormField, x: &ChartPoint, y: &TangentVector) -> Result<Self> {
        y.ensure_nonzero()?;
        let dec = covariant_decomposition(alpha, beta, x, y)?;
        let a = crate::field::metric_at(alpha, x);
        let yv = y.coords().to_vec();
        let alpha_sq = a.bilinear(&yv, &yv);
        let beta = dec.b_lower.iter().zip(&yv).map(|(b, v)| b * v).sum();
        Ok(BaseQuantities { spray: riemann_spray(alpha, x, y)?, y: yv, a, dec, alpha_sq, beta })
    }

    pub fn b_sq(&self) -> f64 {
        self.dec.b_sq
    }
}

/// Spray `G^i` and covariant derivative `b_{i|j}` of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StagePrediction {
    pub spray: Vec<f64>,
    pub bij: Matrix<f64>,
}

impl StagePrediction {
    /// Largest componentwise gap, relative to `1 + max |entry|` of `other`.
    pub fn normalized_gap(&self, other: &StagePrediction) -> f64 {
        let scale = other
            .spray
            .iter()
            .chain(other.bij.as_slice())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let ds = self.spray.iter().zip(&other.spray).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        ds.max(self.bij.max_abs_diff(&other.bij)) / (1.0 + scale)
    }
}

/// Stretch stage: spray and `b~_{i|j}` of `(a - kappa b b, b)` in closed form.
pub fn lemma1_predicted(q: &BaseQuantities, kappa: f64, kappa_prime: f64) -> StagePrediction {
    let d = &q.dec;
    let n = q.y.len();
    let (b2, beta) = (q.b_sq(), q.beta);
    let w = 1.0 - kappa * b2;
    let spray = (0..n)
        .map(|i| {
            let bi = d.b_upper[i];
            let k_term = 2.0 * w * beta * d.s_upper_i0[i] + d.r00 * bi + 2.0 * kappa * d.s0 * beta * bi;
            let kp_term = w * beta * beta * (d.r_upper[i] + d.s_upper[i]) + kappa * d.r * beta * beta * bi
                - 2.0 * (d.r0 + d.s0) * beta * bi;
            q.spray[i] - kappa / (2.0 * w) * k_term + kappa_prime / (2.0 * w) * kp_term
        })
        .collect();
    let b = &d.b_lower;
    let bij = Matrix::from_fn(n, |i, j| {
        let k_term = b2 * d.rij[(i, j)] + b[i] * d.s_vec[j] + b[j] * d.s_vec[i];
        let kp_term = d.r * b[i] * b[j] - b2 * b[i] * (d.r_vec[j] + d.s_vec[j]) - b2 * b[j] * (d.r_vec[i] + d.s_vec[i]);
        d.bij[(i, j)] + kappa / w * k_term - kappa_prime / w * kp_term
    });
    StagePrediction { spray, bij }
}

/// Conformal stage applied to the stretch-stage output.
pub fn lemma2_predicted(q: &BaseQuantities, tilde: &StagePrediction, kappa: f64, rho_prime: f64) -> StagePrediction {
    let d = &q.dec;
    let n = q.y.len();
    let b2 = q.b_sq();
    let w = 1.0 - kappa * b2;
    let tilde_alpha_sq = q.alpha_sq - kappa * q.beta * q.beta;
    let spray = (0..n)
        .map(|i| {
            let inner = d.r_upper[i] + d.s_upper[i] + kappa / w * d.r * d.b_upper[i];
            tilde.spray[i] + rho_prime * (2.0 * (d.r0 + d.s0) * q.y[i] - tilde_alpha_sq * inner)
        })
        .collect();
    let b = &d.b_lower;
    let bij = Matrix::from_fn(n, |i, j| {
        let t = b[i] * (d.r_vec[j] + d.s_vec[j]) + b[j] * (d.r_vec[i] + d.s_vec[i])
            - d.r / w * (q.a[(i, j)] - kappa * b[i] * b[j]);
        tilde.bij[(i, j)] - 2.0 * rho_prime * t
    });
    StagePrediction { spray, bij }
}

/// 1-form rescale stage: the spray is unchanged.
pub fn lemma3_predicted(q: &BaseQuantities, hat: &StagePrediction, nu: f64, nu_prime: f64) -> StagePrediction {
    let d = &q.dec;
    let n = q.y.len();
    let b = &d.b_lower;
    let bij = Matrix::from_fn(n, |i, j| nu * hat.bij[(i, j)] + 2.0 * nu_prime * b[i] * (d.r_vec[j] + d.s_vec[j]));
    StagePrediction { spray: hat.spray.clone(), bij }
}

/// Closed-form predictions of all three stages at `(x, y)`.
pub fn predict_stages(data: &DeformedData, x: &ChartPoint, y: &TangentVector) -> Result<[StagePrediction; 3]> {
    data.check_at(x)?;
    let q = BaseQuantities::new(data.alpha.as_ref(), data.beta.as_ref(), x, y)?;
    let f = factors(data.profile.as_ref(), q.b_sq());
    let s1 = lemma1_predicted(&q, f.kappa, f.kappa_prime);
    let s2 = lemma2_predicted(&q, &s1, f.kappa, f.rho_prime);
    let s3 = lemma3_predicted(&q, &s2, f.nu, f.nu_prime);
    Ok([s1, s2, s3])
}

/// The same quantities recomputed from the deformed fields directly.
pub fn direct_stages(data: &DeformedData, x: &ChartPoint, y: &TangentVector) -> Result<[StagePrediction; 3]> {
    data.check_at(x)?;
    let stage = |m: &SharedMetric, b: &SharedForm| -> Result<StagePrediction> {
        Ok(StagePrediction {
            spray: riemann_spray(m.as_ref(), x, y)?,
            bij: covariant_derivative(m.as_ref(), b.as_ref(), x)?,
        })
    };
    Ok([
        stage(&data.tilde_alpha, &data.tilde_beta)?,
        stage(&data.hat_alpha, &data.hat_beta)?,
        stage(&data.bar_alpha, &data.bar_beta)?,
    ])
}
