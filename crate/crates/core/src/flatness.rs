//! Pointwise characterization checks for dual flatness.
//!
//! * Riemannian: `G^i = 2 theta y^i + alpha^2 theta^i` for some 1-form `theta`.
//! * Randers: `(theta, tau)` with
//!   `G^i = (2 theta + tau beta) y^i - alpha^2 (tau b^i - theta^i)`,
//!   `r_00 = 2 theta beta - 5 tau beta^2 + (3 tau + 2 tau b^2 - 2 b_k theta^k) alpha^2`,
//!   `s_i0 = beta theta_i - theta b_i`.
//! * Dually related 1-forms: `b_{i|j} = 2 theta_i b_j + c(x) a_ij`.
//!
//! Every fit is a small linear least-squares problem in the tensor components
//! at a single point.

use std::sync::Arc;

use crate::deform::{deform, QuarticRoot};
use crate::error::{Error, Result};
use crate::field::{check_dims, ChartPoint, MetricField, OneFormField, TangentVector};
use crate::jet::{max_dirs, Jet};
use crate::linalg::{least_squares, norm, Matrix};
use crate::navigation::to_navigation;
use crate::randers::{dual_flatness_residual, RandersMetric};
use crate::riemann::{christoffel, covariant_decomposition, covariant_derivative, riemann_spray, require_depth};

fn kron(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Least-squares `theta` for `Gamma^i_jk = 2 theta_j d^i_k + 2 theta_k d^i_j + 2 a_jk theta^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RiemannTheta {
    pub theta: Vec<f64>,
    /// `|misfit| / (1 + |Gamma|)`
    pub residual: f64,
}

pub fn extract_riemann_theta(metric: &dyn MetricField, x: &ChartPoint) -> Result<RiemannTheta> {
    check_dims(metric.dim(), x, None)?;
    let n = x.dim();
    let gamma = christoffel(metric, x)?;
    let inv = crate::field::metric_at(metric, x).inverse()?;
    let a = crate::field::metric_at(metric, x);
    let mut rows = Vec::with_capacity(n * n * n);
    let mut rhs = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let row: Vec<f64> = (0..n)
                    .map(|l| 2.0 * kron(l, j) * kron(i, k) + 2.0 * kron(l, k) * kron(i, j) + 2.0 * a[(j, k)] * inv[(i, l)])
                    .collect();
                rows.push(row);
                rhs.push(gamma.get(i, j, k));
            }
        }
    }
    let (theta, misfit) = least_squares(&rows, &rhs)?;
    Ok(RiemannTheta { theta, residual: misfit / (1.0 + norm(&rhs)) })
}

/// Result of the joint `(theta, tau)` fit.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaTau {
    pub theta: Vec<f64>,
    pub tau: f64,
    /// Largest normalized misfit over the spray identity and the six
    /// consequences `r_ij`, `s^i_j`, `s_i`, `r_i + s_i`, `b_i s_j + b_j s_i`, `r`.
    pub residual: f64,
    /// The seven normalized misfits, in the order above.
    pub parts: [f64; 7],
}

/// Below this `b^2` the 1-form is treated as zero and `tau` is not determined.
pub const VANISHING_FORM: f64 = 1e-20;

pub fn extract_theta_tau(alpha: &dyn MetricField, beta: &dyn OneFormField, x: &ChartPoint) -> Result<ThetaTau> {
    check_dims(alpha.dim(), x, None)?;
    let n = x.dim();
    let y0 = TangentVector::new(vec![1.0; n])?;
    let d = covariant_decomposition(alpha, beta, x, &y0)?;
    if d.b_sq < VANISHING_FORM {
        return Err(Error::Underdetermined { x: x.coords().to_vec() });
    }
    let gamma = christoffel(alpha, x)?;
    let a = crate::field::metric_at(alpha, x);
    let inv = a.inverse()?;
    let (b, bu, b2) = (&d.b_lower, &d.b_upper, d.b_sq);

    // Unknowns: theta_0..theta_{n-1}, tau. Each block is scaled by
    // 1 / (1 + |block rhs|) so that no tensor dominates the fit.
    let mut blocks: Vec<(Vec<Vec<f64>>, Vec<f64>)> = Vec::new();

    let mut g = (vec![], vec![]);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut row: Vec<f64> = (0..n)
                    .map(|l| 2.0 * kron(l, j) * kron(i, k) + 2.0 * kron(l, k) * kron(i, j) + 2.0 * a[(j, k)] * inv[(i, l)])
                    .collect();
                row.push(b[j] * kron(i, k) + b[k] * kron(i, j) - 2.0 * a[(j, k)] * bu[i]);
                g.0.push(row);
                g.1.push(gamma.get(i, j, k));
            }
        }
    }
    blocks.push(g);

    let mut r = (vec![], vec![]);
    for i in 0..n {
        for j in 0..n {
            let mut row: Vec<f64> = (0..n).map(|l| kron(l, i) * b[j] + kron(l, j) * b[i] - 2.0 * bu[l] * a[(i, j)]).collect();
            row.push(-5.0 * b[i] * b[j] + (3.0 + 2.0 * b2) * a[(i, j)]);
            r.0.push(row);
            r.1.push(d.rij[(i, j)]);
        }
    }
    blocks.push(r);

    let mut s = (vec![], vec![]);
    for i in 0..n {
        for j in 0..n {
            let mut row: Vec<f64> = (0..n).map(|l| kron(l, i) * b[j] - kron(l, j) * b[i]).collect();
            row.push(0.0);
            s.0.push(row);
            s.1.push(d.sij[(i, j)]);
        }
    }
    blocks.push(s);

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (brows, brhs) in &blocks {
        let w = 1.0 / (1.0 + norm(brhs));
        rows.extend(brows.iter().map(|r| r.iter().map(|v| v * w).collect::<Vec<f64>>()));
        rhs.extend(brhs.iter().map(|v| v * w));
    }
    let (sol, _) = least_squares(&rows, &rhs)?;
    let theta = sol[..n].to_vec();
    let tau = sol[n];
    let parts = consequence_residuals(&gamma, &a, &inv, &d, &theta, tau);
    let residual = parts.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(ThetaTau { theta, tau, residual, parts })
}

fn rel(diff: &[f64], scale: &[f64]) -> f64 {
    norm(diff) / (1.0 + norm(scale))
}

fn consequence_residuals(
    gamma: &crate::riemann::Christoffel,
    a: &Matrix<f64>,
    inv: &Matrix<f64>,
    d: &crate::riemann::CovariantDecomposition,
    theta: &[f64],
    tau: f64,
) -> [f64; 7] {
    let n = theta.len();
    let (b, bu, b2) = (&d.b_lower, &d.b_upper, d.b_sq);
    let tu = inv.mul_vec(theta);
    let bt = dot(bu, theta);

    let mut lhs = vec![];
    let mut diff = vec![];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let model = 2.0 * theta[j] * kron(i, k) + 2.0 * theta[k] * kron(i, j) + 2.0 * a[(j, k)] * tu[i]
                    + tau * (b[j] * kron(i, k) + b[k] * kron(i, j) - 2.0 * a[(j, k)] * bu[i]);
                lhs.push(gamma.get(i, j, k));
                diff.push(gamma.get(i, j, k) - model);
            }
        }
    }
    let p_g = rel(&diff, &lhs);

    let (mut l1, mut d1) = (vec![], vec![]);
    let (mut l2, mut d2) = (vec![], vec![]);
    let (mut l5, mut d5) = (vec![], vec![]);
    let s_upper = Matrix::from_fn(n, |i, j| (0..n).map(|k| inv[(i, k)] * d.sij[(k, j)]).sum::<f64>());
    for i in 0..n {
        for j in 0..n {
            let m1 = theta[i] * b[j] + theta[j] * b[i] - 5.0 * tau * b[i] * b[j] + (3.0 * tau + 2.0 * tau * b2 - 2.0 * bt) * a[(i, j)];
            l1.push(d.rij[(i, j)]);
            d1.push(d.rij[(i, j)] - m1);
            let m2 = b[j] * tu[i] - theta[j] * bu[i];
            l2.push(s_upper[(i, j)]);
            d2.push(s_upper[(i, j)] - m2);
            let lhs5 = b[i] * d.s_vec[j] + b[j] * d.s_vec[i];
            let m5 = 2.0 * bt * b[i] * b[j] - b2 * (theta[i] * b[j] + theta[j] * b[i]);
            l5.push(lhs5);
            d5.push(lhs5 - m5);
        }
    }
    let d3: Vec<f64> = (0..n).map(|i| d.s_vec[i] - (bt * b[i] - b2 * theta[i])).collect();
    let l4: Vec<f64> = (0..n).map(|i| d.r_vec[i] + d.s_vec[i]).collect();
    let d4: Vec<f64> = (0..n).map(|i| l4[i] - 3.0 * tau * (1.0 - b2) * b[i]).collect();
    let d6 = [d.r - 3.0 * tau * (1.0 - b2) * b2];
    [
        p_g,
        rel(&d1, &l1),
        rel(&d2, &l2),
        rel(&d3, &d.s_vec),
        rel(&d4, &l4),
        rel(&d5, &l5),
        rel(&d6, &[d.r]),
    ]
}

/// Normalized residuals of the spray, `r_00` and `s_i0` identities at `(x, y)`
/// for given `(theta, tau)`.
pub fn maincf_residuals(
    alpha: &dyn MetricField,
    beta: &dyn OneFormField,
    theta: &[f64],
    tau: f64,
    x: &ChartPoint,
    y: &TangentVector,
) -> Result<[f64; 3]> {
    check_dims(alpha.dim(), x, Some(y))?;
    if theta.len() != x.dim() {
        return Err(Error::Dimension { expected: x.dim(), got: theta.len() });
    }
    y.ensure_nonzero()?;
    let n = x.dim();
    let d = covariant_decomposition(alpha, beta, x, y)?;
    let g = riemann_spray(alpha, x, y)?;
    let a = crate::field::metric_at(alpha, x);
    let yv = y.coords();
    let alpha_sq = a.bilinear(yv, yv);
    let beta = dot(&d.b_lower, yv);
    let th = dot(theta, yv);
    let tu = a.inverse()?.mul_vec(theta);
    let bt = dot(&d.b_upper, theta);

    let dg: Vec<f64> = (0..n)
        .map(|i| g[i] - ((2.0 * th + tau * beta) * yv[i] - alpha_sq * (tau * d.b_upper[i] - tu[i])))
        .collect();
    let model_r = 2.0 * th * beta - 5.0 * tau * beta * beta + (3.0 * tau + 2.0 * tau * d.b_sq - 2.0 * bt) * alpha_sq;
    let ds: Vec<f64> = (0..n).map(|i| d.s_i0[i] - (beta * theta[i] - th * d.b_lower[i])).collect();
    Ok([rel(&dg, &g), rel(&[d.r00 - model_r], &[d.r00]), rel(&ds, &d.s_i0)])
}

/// Fit of `b_{i|j} = 2 theta_i b_j + c a_ij` for a given `theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct DuallyRelatedCertificate {
    pub theta: Vec<f64>,
    pub c: f64,
    /// Frobenius norm of `b_{i|j} - 2 theta_i b_j - c a_ij`.
    pub residual: f64,
    /// `residual / (1 + |b_{i|j}|)`
    pub normalized: f64,
    /// `c + 2 b_k theta^k`; zero exactly for the trivial case.
    pub nontriviality: f64,
}

pub fn dually_related_check(
    metric: &dyn MetricField,
    form: &dyn OneFormField,
    theta: &[f64],
    x: &ChartPoint,
) -> Result<DuallyRelatedCertificate> {
    check_dims(metric.dim(), x, None)?;
    if theta.len() != x.dim() {
        return Err(Error::Dimension { expected: x.dim(), got: theta.len() });
    }
    let n = x.dim();
    let bij = covariant_derivative(metric, form, x)?;
    let a = crate::field::metric_at(metric, x);
    let inv = a.inverse()?;
    let b = crate::field::form_at(form, x);
    let m = Matrix::from_fn(n, |i, j| bij[(i, j)] - 2.0 * theta[i] * b[j]);
    let mut trace = 0.0;
    for i in 0..n {
        for j in 0..n {
            trace += inv[(i, j)] * m[(i, j)];
        }
    }
    let c = trace / n as f64;
    let rest = Matrix::from_fn(n, |i, j| m[(i, j)] - c * a[(i, j)]);
    let residual = rest.frobenius();
    let bu = inv.mul_vec(&b);
    Ok(DuallyRelatedCertificate {
        theta: theta.to_vec(),
        c,
        residual,
        normalized: residual / (1.0 + bij.frobenius()),
        nontriviality: c + 2.0 * dot(&bu, theta),
    })
}

/// Distance of `(alpha, beta)` from the trivial system
/// `G = 2 theta y + alpha^2 theta^i`, `b_{i|j} = 2 theta_i b_j - 2 b_k theta^k a_ij`:
/// `[theta misfit, normalized dually-related misfit + |c + 2 b_k theta^k| / (1 + |b_{i|j}|)]`.
pub fn special_residual(alpha: &dyn MetricField, beta: &dyn OneFormField, x: &ChartPoint) -> Result<[f64; 2]> {
    let th = extract_riemann_theta(alpha, x)?;
    let cert = dually_related_check(alpha, beta, &th.theta, x)?;
    let scale = 1.0 + covariant_derivative(alpha, beta, x)?.frobenius();
    Ok([th.residual, cert.normalized + cert.nontriviality.abs() / scale])
}

/// A smooth function `psi(x)`.
pub trait PotentialField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[Jet]) -> Jet;
}

/// [`PotentialField`] backed by a closure.
pub struct FnPotential<F> {
    dim: usize,
    f: F,
}

impl<F> FnPotential<F>
where
    F: Fn(&[Jet]) -> Jet + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnPotential { dim, f }
    }
}

impl<F> PotentialField for FnPotential<F>
where
    F: Fn(&[Jet]) -> Jet + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[Jet]) -> Jet {
        (self.f)(x)
    }
}

/// `a_ij = d_i d_j psi`. Spends two jet directions per evaluation.
#[derive(Clone)]
pub struct HessianMetric {
    psi: Arc<dyn PotentialField>,
}

impl MetricField for HessianMetric {
    fn dim(&self) -> usize {
        self.psi.dim()
    }
    fn matrix(&self, x: &[Jet]) -> Matrix<Jet> {
        let n = x.len();
        let base = max_dirs(x);
        let mask = (1 << base) | (1 << (base + 1));
        let mut h = Matrix::<Jet>::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut xs = x.to_vec();
                xs[i] += Jet::variable(0.0, base);
                xs[j] += Jet::variable(0.0, base + 1);
                let v = self.psi.eval(&xs).inner(base, mask);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }
    fn nesting_depth(&self) -> usize {
        2
    }
}

/// The Hessian metric of `psi`, after checking positivity at every probe.
pub fn hessian_metric(psi: Arc<dyn PotentialField>, probes: &[ChartPoint]) -> Result<HessianMetric> {
    require_depth(2)?;
    let m = HessianMetric { psi };
    for x in probes {
        check_dims(m.dim(), x, None)?;
        if !crate::field::metric_at(&m, x).is_positive_definite() {
            return Err(Error::IndefiniteHessian { x: x.coords().to_vec() });
        }
    }
    Ok(m)
}

/// Outcome of a check at the shared thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

/// Residuals below this pass.
pub const PASS_BELOW: f64 = 1e-8;
/// Residuals above this fail; anything in between is indeterminate.
pub const FAIL_ABOVE: f64 = 1e-4;

impl Verdict {
    pub fn classify(residual: f64) -> Verdict {
        if residual < PASS_BELOW {
            Verdict::Pass
        } else if residual > FAIL_ABOVE || !residual.is_finite() {
            Verdict::Fail
        } else {
            Verdict::Indeterminate
        }
    }

    /// Fail dominates, then indeterminate.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Indeterminate, _) | (_, Indeterminate) => Indeterminate,
            _ => Pass,
        }
    }
}

/// The three item residuals at one probe.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceProbe {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub residuals: [f64; 3],
}

impl EquivalenceProbe {
    pub fn verdicts(&self) -> [Verdict; 3] {
        self.residuals.map(Verdict::classify)
    }

    /// One item passes while another fails.
    pub fn is_mixed(&self) -> bool {
        let v = self.verdicts();
        v.contains(&Verdict::Pass) && v.contains(&Verdict::Fail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceItem {
    pub name: &'static str,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub items: [EquivalenceItem; 3],
    pub probes: Vec<EquivalenceProbe>,
    pub mixed_probes: usize,
}

impl EquivalenceReport {
    /// All three item verdicts equal and no probe with a mixed verdict.
    pub fn coherent(&self) -> bool {
        let v = self.items[0].verdict;
        self.mixed_probes == 0 && self.items.iter().all(|i| i.verdict == v)
    }
}

pub const EQUIVALENCE_ITEMS: [&str; 3] = ["dual-flatness", "navigation-data", "quartic-root-deformation"];

/// Residuals of the three equivalent items at one probe:
/// Shen's residual on `F`; dual flatness of `h` and dual relatedness of
/// `W_flat`; the same for the `kappa = 0` deformation `(alpha-, beta-)`.
pub fn equivalence_probe(r: &RandersMetric, x: &ChartPoint, y: &TangentVector) -> Result<EquivalenceProbe> {
    let item1 = dual_flatness_residual(r, x, y)?.normalized;

    let nav = to_navigation(r);
    nav.at(x)?;
    let xi = extract_riemann_theta(nav.h().as_ref(), x)?;
    let cert = dually_related_check(nav.h().as_ref(), nav.wind_flat().as_ref(), &xi.theta, x)?;
    let item2 = xi.residual.max(cert.normalized);

    let d = deform(r.alpha().clone(), r.beta().clone(), Arc::new(QuarticRoot))?;
    d.check_at(x)?;
    let th = extract_riemann_theta(d.bar_alpha.as_ref(), x)?;
    let cert = dually_related_check(d.bar_alpha.as_ref(), d.bar_beta.as_ref(), &th.theta, x)?;
    let item3 = th.residual.max(cert.normalized);

    Ok(EquivalenceProbe { x: x.coords().to_vec(), y: y.coords().to_vec(), residuals: [item1, item2, item3] })
}

pub fn main1_equivalence(r: &RandersMetric, probes: &[(ChartPoint, TangentVector)]) -> Result<EquivalenceReport> {
    if probes.is_empty() {
        return Err(Error::InvalidParameter("at least one probe is required".into()));
    }
    let results = probes.iter().map(|(x, y)| equivalence_probe(r, x, y)).collect::<Result<Vec<_>>>()?;
    let items = std::array::from_fn(|k| {
        let vals: Vec<f64> = results.iter().map(|p| p.residuals[k]).collect();
        let max = vals.iter().fold(0.0f64, |m, v| m.max(*v));
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let verdict = vals.iter().map(|&v| Verdict::classify(v)).fold(Verdict::Pass, Verdict::combine);
        EquivalenceItem { name: EQUIVALENCE_ITEMS[k], max_residual: max, mean_residual: mean, verdict }
    });
    let mixed = results.iter().filter(|p| p.is_mixed()).count();
    Ok(EquivalenceReport { items, probes: results, mixed_probes: mixed })
}
