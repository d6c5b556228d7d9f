//! Riemannian machinery: Christoffel symbols, spray, covariant derivative of a
//! 1-form with its symmetric/antisymmetric split, and sectional curvature.
//!
//! Indices are always raised with the metric handed to the operation; nothing
//! here keeps a notion of "the" metric, since the deformation code juggles
//! several at once.

use crate::error::{Error, Result};
use crate::field::{check_dims, ChartPoint, MetricField, OneFormField, TangentVector};
use crate::jet::{max_dirs, Jet, MAX_ORDER};
use crate::linalg::Matrix;

/// `Gamma^i_{jk}`, stored with `i` outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `1/2 Gamma^i_{jk} y^j y^k`.
    pub fn spray(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        acc += self.get(i, j, k) * y[j] * y[k];
                    }
                }
                0.5 * acc
            })
            .collect()
    }
}

pub(crate) fn require_depth(requested: usize) -> Result<()> {
    if requested > MAX_ORDER {
        return Err(Error::UnsupportedOrder { requested, max: MAX_ORDER });
    }
    Ok(())
}

/// `d_l a_ij` as jets in the outer directions of `x`, indexed `[l]`.
pub(crate) fn metric_gradient_jet(metric: &dyn MetricField, x: &[Jet]) -> Vec<Matrix<Jet>> {
    let base = max_dirs(x);
    let mask = 1usize << base;
    (0..x.len())
        .map(|l| {
            let mut xs = x.to_vec();
            xs[l] += Jet::variable(0.0, base);
            metric.matrix(&xs).map(|v| v.inner(base, mask))
        })
        .collect()
}

/// Christoffel symbols on jet inputs, `i*n*n + j*n + k` layout.
pub(crate) fn christoffel_jet(metric: &dyn MetricField, x: &[Jet]) -> Result<Vec<Jet>> {
    let n = x.len();
    require_depth(max_dirs(x) + 1 + metric.nesting_depth())?;
    let a = metric.matrix(x);
    let inv = a.inverse()?;
    let da = metric_gradient_jet(metric, x);
    // lowered: Gamma_{l,jk} = 1/2 (d_j a_lk + d_k a_lj - d_l a_jk)
    let mut lowered = vec![Jet::constant(0.0); n * n * n];
    for l in 0..n {
        for j in 0..n {
            for k in j..n {
                let v = (da[j][(l, k)] + da[k][(l, j)] - da[l][(j, k)]) * 0.5;
                lowered[(l * n + j) * n + k] = v;
                lowered[(l * n + k) * n + j] = v;
            }
        }
    }
    let mut gamma = vec![Jet::constant(0.0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let v: Jet = (0..n).map(|l| inv[(i, l)] * lowered[(l * n + j) * n + k]).sum();
                gamma[(i * n + j) * n + k] = v;
                gamma[(i * n + k) * n + j] = v;
            }
        }
    }
    Ok(gamma)
}

fn finite_or(x: &ChartPoint, v: &[f64]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { x: x.coords().to_vec(), y: vec![] })
    }
}

pub fn christoffel(metric: &dyn MetricField, x: &ChartPoint) -> Result<Christoffel> {
    check_dims(metric.dim(), x, None)?;
    let data: Vec<f64> = christoffel_jet(metric, &x.jets())?.iter().map(Jet::value).collect();
    finite_or(x, &data)?;
    Ok(Christoffel { n: x.dim(), data })
}

/// `d_k a_ij`, indexed `[k]`.
pub fn metric_gradient(metric: &dyn MetricField, x: &ChartPoint) -> Result<Vec<Matrix<f64>>> {
    check_dims(metric.dim(), x, None)?;
    require_depth(1 + metric.nesting_depth())?;
    Ok(metric_gradient_jet(metric, &x.jets()).iter().map(Matrix::primal).collect())
}

/// Spray coefficients `G^i = 1/2 Gamma^i_{jk} y^j y^k`.
pub fn riemann_spray(metric: &dyn MetricField, x: &ChartPoint, y: &TangentVector) -> Result<Vec<f64>> {
    check_dims(metric.dim(), x, Some(y))?;
    Ok(christoffel(metric, x)?.spray(y.coords()))
}

/// Covariant derivative `b_{i|j} = d_j b_i - Gamma^k_{ij} b_k`.
pub fn covariant_derivative(
    metric: &dyn MetricField,
    form: &dyn OneFormField,
    x: &ChartPoint,
) -> Result<Matrix<f64>> {
    check_dims(metric.dim(), x, None)?;
    check_dims(form.dim(), x, None)?;
    require_depth(1 + form.nesting_depth())?;
    let gamma = christoffel(metric, x)?;
    let xj = x.jets();
    let b: Vec<f64> = form.components(&xj).iter().map(Jet::value).collect();
    let n = x.dim();
    let mut db = Matrix::<f64>::zeros(n);
    for j in 0..n {
        let mut xs = xj.clone();
        xs[j] += Jet::variable(0.0, 0);
        let comps = form.components(&xs);
        for i in 0..n {
            db[(i, j)] = comps[i].coeff(1);
        }
    }
    let cov = Matrix::from_fn(n, |i, j| db[(i, j)] - (0..n).map(|k| gamma.get(k, i, j) * b[k]).sum::<f64>());
    finite_or(x, cov.as_slice())?;
    Ok(cov)
}

/// `b_{i|j}` split into `r_ij + s_ij`, with the usual contractions at `(x, y)`.
///
/// Conventions: `r_j = b^i r_ij`, `s_j = b^i s_ij`, `r_0 = r_j y^j`,
/// `s_0 = s_j y^j`, `r = r_j b^j`, `s_{i0} = s_ij y^j`, and `r^i`, `s^i`,
/// `s^i_0` raised with `a^{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariantDecomposition {
    pub bij: Matrix<f64>,
    pub rij: Matrix<f64>,
    pub sij: Matrix<f64>,
    /// `b_i`
    pub b_lower: Vec<f64>,
    /// `b^i`
    pub b_upper: Vec<f64>,
    pub b_sq: f64,
    pub r00: f64,
    pub r_vec: Vec<f64>,
    pub r_upper: Vec<f64>,
    pub r0: f64,
    pub r: f64,
    pub s_vec: Vec<f64>,
    pub s_upper: Vec<f64>,
    pub s0: f64,
    pub s_i0: Vec<f64>,
    pub s_upper_i0: Vec<f64>,
}

pub fn covariant_decomposition(
    metric: &dyn MetricField,
    form: &dyn OneFormField,
    x: &ChartPoint,
    y: &TangentVector,
) -> Result<CovariantDecomposition> {
    check_dims(metric.dim(), x, Some(y))?;
    let n = x.dim();
    let bij = covariant_derivative(metric, form, x)?;
    let xj = x.jets();
    let inv = metric.matrix(&xj).primal().inverse()?;
    let b_lower: Vec<f64> = form.components(&xj).iter().map(Jet::value).collect();
    let b_upper = inv.mul_vec(&b_lower);
    let b_sq = dot(&b_lower, &b_upper);
    let rij = Matrix::from_fn(n, |i, j| 0.5 * (bij[(i, j)] + bij[(j, i)]));
    let sij = Matrix::from_fn(n, |i, j| 0.5 * (bij[(i, j)] - bij[(j, i)]));
    let y = y.coords();
    let r00 = rij.bilinear(y, y);
    let r_vec = rij.transpose().mul_vec(&b_upper);
    let s_vec = sij.transpose().mul_vec(&b_upper);
    let r0 = dot(&r_vec, y);
    let s0 = dot(&s_vec, y);
    let r = dot(&r_vec, &b_upper);
    let s_i0 = sij.mul_vec(y);
    Ok(CovariantDecomposition {
        r_upper: inv.mul_vec(&r_vec),
        s_upper: inv.mul_vec(&s_vec),
        s_upper_i0: inv.mul_vec(&s_i0),
        bij,
        rij,
        sij,
        b_lower,
        b_upper,
        b_sq,
        r00,
        r_vec,
        r0,
        r,
        s_vec,
        s0,
        s_i0,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// `R^i_{jkl}` with `R(d_k, d_l) d_j = R^i_{jkl} d_i`.
#[derive(Clone, Debug)]
pub struct RiemannTensor {
    n: usize,
    data: Vec<f64>,
}

impl RiemannTensor {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }
}

pub fn riemann_tensor(metric: &dyn MetricField, x: &ChartPoint) -> Result<RiemannTensor> {
    check_dims(metric.dim(), x, None)?;
    require_depth(2 + metric.nesting_depth())?;
    let n = x.dim();
    let xj = x.jets();
    let gamma: Vec<f64> = christoffel(metric, x)?.data;
    let g = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
    // dgamma[m][ijk] = d_m Gamma^i_{jk}
    let mut dgamma = Vec::with_capacity(n);
    for m in 0..n {
        let mut xs = xj.clone();
        xs[m] += Jet::variable(0.0, 0);
        let gj = christoffel_jet(metric, &xs)?;
        dgamma.push(gj.iter().map(|v| v.coeff(1)).collect::<Vec<f64>>());
    }
    let dg = |m: usize, i: usize, j: usize, k: usize| dgamma[m][(i * n + j) * n + k];
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dg(k, i, l, j) - dg(l, i, k, j);
                    for m in 0..n {
                        v += g(i, k, m) * g(m, l, j) - g(i, l, m) * g(m, k, j);
                    }
                    data[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    finite_or(x, &data)?;
    Ok(RiemannTensor { n, data })
}

/// Sectional curvature of the plane spanned by `u` and `v`.
pub fn sectional_curvature(
    metric: &dyn MetricField,
    x: &ChartPoint,
    u: &TangentVector,
    v: &TangentVector,
) -> Result<f64> {
    check_dims(metric.dim(), x, Some(u))?;
    check_dims(metric.dim(), x, Some(v))?;
    let a = metric.matrix(&x.jets()).primal();
    let (u, v) = (u.coords(), v.coords());
    let denom = a.bilinear(u, u) * a.bilinear(v, v) - a.bilinear(u, v).powi(2);
    let scale = a.bilinear(u, u) * a.bilinear(v, v);
    if !(denom > 1e-12 * scale) {
        return Err(Error::DegeneratePlane);
    }
    let riem = riemann_tensor(metric, x)?;
    let n = x.dim();
    // <R(u,v)v, u>
    let mut rvu = vec![0.0; n];
    for (i, slot) in rvu.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    acc += riem.get(i, j, k, l) * v[j] * u[k] * v[l];
                }
            }
        }
        *slot = acc;
    }
    Ok(a.bilinear(&rvu, u) / denom)
}
