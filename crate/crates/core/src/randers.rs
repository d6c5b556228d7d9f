//! Randers metrics `F = alpha + beta` and general Finsler quantities derived
//! from `F^2`: fundamental tensor, spray coefficients, the dual-flatness
//! residual and flag curvature.

use crate::error::{Error, Result};
use crate::field::{
    check_dims, form_norm_sq, ChartPoint, FinslerMetric, SharedForm, SharedMetric, TangentVector,
};
use crate::jet::{dot, max_dirs, Jet};
use crate::linalg::{norm, Matrix};
use crate::riemann::require_depth;

/// Margin kept between `b = |beta|_alpha` and 1.
pub const RANDERS_MARGIN: f64 = 1e-6;

/// Open ball `|x| < radius` around the origin; `radius` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub radius: f64,
}

impl Domain {
    pub fn ball(radius: f64) -> Self {
        Domain { radius }
    }

    pub fn whole() -> Self {
        Domain { radius: f64::INFINITY }
    }

    pub fn contains(&self, x: &ChartPoint) -> bool {
        x.norm() < self.radius
    }

    /// Radius of the ball probes are drawn from. Unbounded domains sample
    /// the unit ball before shrinking.
    pub fn sampling_radius(&self, shrink: f64) -> f64 {
        shrink * if self.radius.is_finite() { self.radius } else { 1.0 }
    }

    pub(crate) fn check(&self, x: &ChartPoint) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                x: x.coords().to_vec(),
                reason: format!("|x| = {} is not below the domain radius {}", x.norm(), self.radius),
            })
        }
    }
}

/// `F = sqrt(a_ij y^i y^j) + b_i y^i` with `|beta|_alpha < 1`.
#[derive(Clone)]
pub struct RandersMetric {
    alpha: SharedMetric,
    beta: SharedForm,
    domain: Domain,
}

/// Pointwise data of a Randers metric.
#[derive(Clone, Debug, PartialEq)]
pub struct RandersPoint {
    pub a: Matrix<f64>,
    pub b: Vec<f64>,
    pub b_sq: f64,
}

impl RandersMetric {
    pub fn new(alpha: SharedMetric, beta: SharedForm, domain: Domain) -> Result<Self> {
        if alpha.dim() != beta.dim() {
            return Err(Error::Dimension { expected: alpha.dim(), got: beta.dim() });
        }
        Ok(RandersMetric { alpha, beta, domain })
    }

    /// `beta = 0`.
    pub fn riemannian(alpha: SharedMetric, domain: Domain) -> Self {
        let n = alpha.dim();
        RandersMetric { alpha, beta: std::sync::Arc::new(crate::catalog::ZeroForm::new(n)), domain }
    }

    pub fn alpha(&self) -> &SharedMetric {
        &self.alpha
    }

    pub fn beta(&self) -> &SharedForm {
        &self.beta
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Unchecked pointwise data.
    pub fn evaluate(&self, x: &ChartPoint) -> RandersPoint {
        let xj = x.jets();
        let a = self.alpha.matrix(&xj);
        let b = self.beta.components(&xj);
        let b_sq = form_norm_sq(&a, &b).value();
        RandersPoint { a: a.primal(), b: b.iter().map(Jet::value).collect(), b_sq }
    }

    /// Pointwise data, checking the domain, positivity of `alpha` and `b < 1`.
    pub fn at(&self, x: &ChartPoint) -> Result<RandersPoint> {
        check_dims(self.dim(), x, None)?;
        self.domain.check(x)?;
        let p = self.evaluate(x);
        if !p.a.is_positive_definite() {
            return Err(Error::Domain { x: x.coords().to_vec(), reason: "alpha is not positive definite".into() });
        }
        if !(p.b_sq.sqrt() < 1.0 - RANDERS_MARGIN) {
            return Err(Error::Domain {
                x: x.coords().to_vec(),
                reason: format!("b = {} violates b < 1 - {RANDERS_MARGIN:e}", p.b_sq.sqrt()),
            });
        }
        Ok(p)
    }
}

impl FinslerMetric for RandersMetric {
    fn dim(&self) -> usize {
        self.alpha.dim()
    }

    fn norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let a = self.alpha.matrix(x);
        let b = self.beta.components(x);
        a.bilinear(y, y).sqrt() + dot(&b, y)
    }

    fn nesting_depth(&self) -> usize {
        self.alpha.nesting_depth().max(self.beta.nesting_depth())
    }

    fn admits(&self, x: &ChartPoint) -> Result<()> {
        self.at(x).map(|_| ())
    }
}

fn prepare(f: &dyn FinslerMetric, x: &ChartPoint, y: &TangentVector) -> Result<()> {
    check_dims(f.dim(), x, Some(y))?;
    y.ensure_nonzero()?;
    f.admits(x)
}

fn non_finite(x: &ChartPoint, y: &TangentVector) -> Error {
    Error::NonFinite { x: x.coords().to_vec(), y: y.coords().to_vec() }
}

/// `g_ij = 1/2 [F^2]_{y^i y^j}`; positive definite by construction of the type.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalTensor(pub Matrix<f64>);

impl FundamentalTensor {
    pub fn matrix(&self) -> &Matrix<f64> {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.symmetric_eigenvalues()[0]
    }
}

/// `1/2 [F^2]_{y y}` on jets; outer directions of `x`, `y` are kept.
fn hessian_yy(f: &dyn FinslerMetric, x: &[Jet], y: &[Jet], base: usize) -> Matrix<Jet> {
    let n = y.len();
    let mask = (1 << base) | (1 << (base + 1));
    let mut g = Matrix::<Jet>::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut ys = y.to_vec();
            ys[i] += Jet::variable(0.0, base);
            ys[j] += Jet::variable(0.0, base + 1);
            let v = f.energy(x, &ys).inner(base, mask) * 0.5;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `[F^2]_{x^k y^l} y^k` and `[F^2]_{x^l}` on jets.
fn shen_terms(f: &dyn FinslerMetric, x: &[Jet], y: &[Jet], base: usize) -> (Vec<Jet>, Vec<Jet>) {
    let n = y.len();
    let (m1, m2) = (1 << base, 1 << (base + 1));
    let mut contracted = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    for l in 0..n {
        // x moves along y itself, which contracts the mixed Hessian with y^k
        let xs: Vec<Jet> = x.iter().zip(y).map(|(&xi, &yi)| xi + yi * Jet::variable(0.0, base)).collect();
        let mut ys = y.to_vec();
        ys[l] += Jet::variable(0.0, base + 1);
        contracted.push(f.energy(&xs, &ys).inner(base, m1 | m2));

        let mut xs = x.to_vec();
        xs[l] += Jet::variable(0.0, base);
        grad.push(f.energy(&xs, y).inner(base, m1));
    }
    (contracted, grad)
}

fn jet_base(f: &dyn FinslerMetric, x: &[Jet], y: &[Jet]) -> Result<usize> {
    let base = max_dirs(x).max(max_dirs(y));
    require_depth(base + 2 + f.nesting_depth())?;
    Ok(base)
}

/// Spray coefficients on jet inputs.
pub(crate) fn spray_jet(f: &dyn FinslerMetric, x: &[Jet], y: &[Jet]) -> Result<Vec<Jet>> {
    let base = jet_base(f, x, y)?;
    let g = hessian_yy(f, x, y, base);
    let (contracted, grad) = shen_terms(f, x, y, base);
    let rhs: Vec<Jet> = contracted.iter().zip(&grad).map(|(&c, &d)| (c - d) * 0.25).collect();
    g.solve(&rhs)
}

pub fn fundamental_tensor(f: &dyn FinslerMetric, x: &ChartPoint, y: &TangentVector) -> Result<FundamentalTensor> {
    prepare(f, x, y)?;
    require_depth(2 + f.nesting_depth())?;
    let g = hessian_yy(f, &x.jets(), &y.jets(), 0).primal();
    if g.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(non_finite(x, y));
    }
    if !g.is_positive_definite() {
        return Err(Error::ConvexityViolation { x: x.coords().to_vec(), y: y.coords().to_vec() });
    }
    Ok(FundamentalTensor(g))
}

/// `G^i = 1/4 g^{il} ([F^2]_{x^k y^l} y^k - [F^2]_{x^l})`.
pub fn finsler_spray(f: &dyn FinslerMetric, x: &ChartPoint, y: &TangentVector) -> Result<Vec<f64>> {
    prepare(f, x, y)?;
    let g: Vec<f64> = spray_jet(f, &x.jets(), &y.jets())?.iter().map(Jet::value).collect();
    if g.iter().any(|v| !v.is_finite()) {
        return Err(non_finite(x, y));
    }
    Ok(g)
}

/// Shen's dual-flatness residual `R_l = [F^2]_{x^k y^l} y^k - 2 [F^2]_{x^l}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessResidual {
    pub components: Vec<f64>,
    /// `|R| / (1 + |[F^2]_x|)`
    pub normalized: f64,
}

pub fn dual_flatness_residual(f: &dyn FinslerMetric, x: &ChartPoint, y: &TangentVector) -> Result<FlatnessResidual> {
    prepare(f, x, y)?;
    require_depth(2 + f.nesting_depth())?;
    let (contracted, grad) = shen_terms(f, &x.jets(), &y.jets(), 0);
    let components: Vec<f64> = contracted.iter().zip(&grad).map(|(c, d)| c.value() - 2.0 * d.value()).collect();
    let grad: Vec<f64> = grad.iter().map(Jet::value).collect();
    if components.iter().chain(&grad).any(|v| !v.is_finite()) {
        return Err(non_finite(x, y));
    }
    let normalized = norm(&components) / (1.0 + norm(&grad));
    Ok(FlatnessResidual { components, normalized })
}

/// Flag curvature `K(y, u)` from the spray:
/// `R^i_k = 2 G^i_{x^k} - y^j G^i_{x^j y^k} + 2 G^j G^i_{y^j y^k} - G^i_{y^j} G^j_{y^k}`,
/// `K = g(u, R u) / (F^2 g(u,u) - g(y,u)^2)`.
pub fn flag_curvature(f: &dyn FinslerMetric, x: &ChartPoint, y: &TangentVector, u: &TangentVector) -> Result<f64> {
    prepare(f, x, y)?;
    check_dims(f.dim(), x, Some(u))?;
    require_depth(4 + f.nesting_depth())?;
    let n = x.dim();
    let g = fundamental_tensor(f, x, y)?.0;
    let (yv, uv) = (y.coords(), u.coords());
    let f2 = g.bilinear(yv, yv);
    let denom = f2 * g.bilinear(uv, uv) - g.bilinear(yv, uv).powi(2);
    if !(denom > 1e-12 * f2 * g.bilinear(uv, uv)) {
        return Err(Error::DegenerateFlag);
    }

    let xj = x.jets();
    let yj = y.jets();
    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let mut spray = vec![0.0; n];
    let mut d_x = vec![0.0; n * n]; // [i][k] = dG^i/dx^k
    let mut d_y = vec![0.0; n * n]; // [i][k] = dG^i/dy^k
    let mut d_xy = vec![0.0; n * n * n]; // [i][j][k] = d2G^i/dx^j dy^k
    let mut d_yy = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            let mut xs = xj.clone();
            xs[j] += Jet::variable(0.0, 0);
            let mut ys = yj.clone();
            ys[k] += Jet::variable(0.0, 1);
            let gj = spray_jet(f, &xs, &ys)?;
            for i in 0..n {
                spray[i] = gj[i].value();
                d_x[i * n + j] = gj[i].coeff(0b01);
                d_y[i * n + k] = gj[i].coeff(0b10);
                d_xy[idx(i, j, k)] = gj[i].coeff(0b11);
            }
            if k >= j {
                let mut ys = yj.clone();
                ys[j] += Jet::variable(0.0, 0);
                ys[k] += Jet::variable(0.0, 1);
                let gj = spray_jet(f, &xj, &ys)?;
                for i in 0..n {
                    d_yy[idx(i, j, k)] = gj[i].coeff(0b11);
                    d_yy[idx(i, k, j)] = gj[i].coeff(0b11);
                }
            }
        }
    }
    let mut riem = Matrix::<f64>::zeros(n);
    for i in 0..n {
        for k in 0..n {
            let mut v = 2.0 * d_x[i * n + k];
            for j in 0..n {
                v -= yv[j] * d_xy[idx(i, j, k)];
                v += 2.0 * spray[j] * d_yy[idx(i, j, k)];
                v -= d_y[i * n + j] * d_y[j * n + k];
            }
            riem[(i, k)] = v;
        }
    }
    let ru = riem.mul_vec(uv);
    let k = g.bilinear(uv, &ru) / denom;
    if !k.is_finite() {
        return Err(non_finite(x, y));
    }
    Ok(k)
}
