//! Verification runs over seeded probes and their JSON reports.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{self, FamilyParams, Sign};
use crate::deform::{deform, direct_stages, predict_stages, profile_conditions, ConstantKappa, Construction, DeformationProfile, Navigation, QuarticRoot};
use crate::error::{Error, Result};
use crate::field::{ChartPoint, TangentVector};
use crate::flatness::{equivalence_probe, Verdict, FAIL_ABOVE, PASS_BELOW};
use crate::navigation::{from_navigation, navigation_gap, randers_gap, to_navigation};
use crate::probe::{flag_set, probe_set, PRNG};
use crate::randers::{dual_flatness_residual, flag_curvature, fundamental_tensor, RandersMetric};

pub const VERSION: &str = concat!("duflat ", env!("CARGO_PKG_VERSION"));

/// Sampling and tolerance settings of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub shrink: f64,
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { dim: 2, samples: 100, seed: 0, shrink: 0.9, tol: 1e-6 }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidParameter(format!("dim must be at least 2, got {}", self.dim)));
        }
        if self.samples < 1 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink <= 1.0) {
            return Err(Error::InvalidParameter(format!("shrink must lie in (0, 1], got {}", self.shrink)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Catalog entries addressable by name.
pub const METRICS: [(&str, &str); 5] = [
    ("euclidean", "flat metric |y|"),
    ("funk", "Funk metric on the unit ball, --sign plus|minus"),
    ("family", "two-parameter dually flat family, --mu --lambda"),
    ("csc", "constant sectional curvature mu; --as-randers-with cc adds the closed conformal 1-form"),
    ("dfr", "dually flat Riemannian metric; --as-randers-with drb adds the dually related 1-form"),
];

/// A catalog metric with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub metric: String,
    pub mu: f64,
    pub lambda: f64,
    pub sign: String,
    pub with: Option<String>,
}

impl MetricSpec {
    pub fn new(metric: &str) -> Self {
        MetricSpec { metric: metric.to_string(), mu: 0.0, lambda: 0.0, sign: "plus".into(), with: None }
    }

    fn sign(&self) -> Result<Sign> {
        match self.sign.as_str() {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            s => Err(Error::InvalidParameter(format!("sign must be plus or minus, got {s:?}"))),
        }
    }

    pub fn build(&self, n: usize) -> Result<RandersMetric> {
        let with = self.with.as_deref();
        let bad_with = |w: &str| Error::InvalidParameter(format!("metric {} cannot be paired with {w:?}", self.metric));
        match (self.metric.as_str(), with) {
            ("euclidean", None) => catalog::euclidean(n),
            ("funk", None) => catalog::funk(n, self.sign()?),
            ("family", None) => catalog::example_family(FamilyParams::new(self.mu, self.lambda, n)?),
            ("csc", None) => catalog::csc(self.mu, n),
            ("csc", Some("cc")) => catalog::csc_with_cc(self.mu, self.lambda, n),
            ("dfr", None) => catalog::dfr(self.mu, n),
            ("dfr", Some("drb")) => catalog::dfr_with_drb(self.mu, self.lambda, n),
            (m, Some(w)) if METRICS.iter().any(|(k, _)| *k == m) => Err(bad_with(w)),
            (m, _) => Err(Error::UnknownMetric(m.to_string())),
        }
    }

    /// Known constant flag curvature, where the catalog guarantees one.
    pub fn flag_curvature_target(&self) -> Option<f64> {
        match (self.metric.as_str(), self.with.as_deref()) {
            ("euclidean", None) => Some(0.0),
            ("funk", None) => Some(-0.25),
            ("csc", None) => Some(self.mu),
            _ => None,
        }
    }
}

/// Effective configuration echoed into a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub seed_source: String,
    pub shrink: f64,
    pub sampling_radius: f64,
    pub tol: f64,
    pub pass_below: f64,
    pub fail_above: f64,
    pub prng: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub verdict: Verdict,
}

impl CheckResult {
    /// Pass iff `max < tol`; fail above `max(tol, FAIL_ABOVE)`; otherwise indeterminate.
    /// NaN counts as `+inf`; non-finite values serialize as JSON `null`.
    pub fn from_residuals(name: &str, residuals: &[f64], tol: f64) -> Self {
        let clean = |v: &f64| if v.is_nan() { f64::INFINITY } else { *v };
        let max = residuals.iter().map(clean).fold(0.0f64, f64::max);
        let mean = residuals.iter().map(clean).sum::<f64>() / residuals.len().max(1) as f64;
        let verdict = if max < tol {
            Verdict::Pass
        } else if max > tol.max(FAIL_ABOVE) {
            Verdict::Fail
        } else {
            Verdict::Indeterminate
        };
        CheckResult { name: name.to_string(), max_residual: max, mean_residual: mean, verdict }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu: f64,
    pub lambda: f64,
    pub sign: String,
    pub with: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub metric: String,
    pub params: Params,
    pub config: ConfigEcho,
    pub checks: Vec<CheckResult>,
    pub version: String,
}

impl FlatnessReport {
    /// Process exit status: 0 all pass, 1 any fail, 3 indeterminate only.
    pub fn exit_code(&self) -> i32 {
        exit_status(&self.checks)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut out = format!("{} ({}), seed {} [{}]\n", self.metric, self.version, self.config.seed, self.config.seed_source);
        out.push_str(&format!("{:<28} {:>12} {:>12}  verdict\n", "check", "max", "mean"));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<28} {:>12.3e} {:>12.3e}  {:?}\n",
                c.name, c.max_residual, c.mean_residual, c.verdict
            ));
        }
        out
    }
}

/// 0 all pass, 1 any fail, 3 indeterminate only.
pub fn exit_status(checks: &[CheckResult]) -> i32 {
    if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        1
    } else if checks.iter().any(|c| c.verdict == Verdict::Indeterminate) {
        3
    } else {
        0
    }
}

fn echo(config: &ProbeConfig, seed_source: &str, radius: f64) -> ConfigEcho {
    ConfigEcho {
        dim: config.dim,
        samples: config.samples,
        seed: config.seed,
        seed_source: seed_source.to_string(),
        shrink: config.shrink,
        sampling_radius: radius,
        tol: config.tol,
        pass_below: PASS_BELOW,
        fail_above: FAIL_ABOVE,
        prng: PRNG.to_string(),
    }
}

fn params(spec: &MetricSpec, profile: Option<String>) -> Params {
    Params { mu: spec.mu, lambda: spec.lambda, sign: spec.sign.clone(), with: spec.with.clone(), profile }
}

/// Residual vector of a probe; evaluation errors become `+inf`, which fails the check.
fn or_inf(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::INFINITY)
}

fn columns(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

const DEFORM_PROFILES: usize = 3;

fn lemma_profiles() -> [Arc<dyn DeformationProfile>; DEFORM_PROFILES] {
    [Arc::new(Navigation), Arc::new(QuarticRoot), Arc::new(ConstantKappa(0.5))]
}

fn lemma_gap(r: &RandersMetric, profile: Arc<dyn DeformationProfile>, x: &ChartPoint, y: &TangentVector) -> Result<f64> {
    let d = deform(r.alpha().clone(), r.beta().clone(), profile)?;
    let pred = predict_stages(&d, x, y)?;
    let direct = direct_stages(&d, x, y)?;
    Ok(pred.iter().zip(&direct).fold(0.0f64, |m, (p, q)| m.max(p.normalized_gap(q))))
}

/// Runs the full check set over `config.samples` seeded probes.
pub fn run_verify(config: &ProbeConfig, spec: &MetricSpec, seed_source: &str) -> Result<FlatnessReport> {
    config.validate()?;
    let r = spec.build(config.dim)?;
    let radius = r.domain().sampling_radius(config.shrink);
    let probes = probe_set(config.dim, config.samples, config.seed, radius)?;

    let rows: Vec<Vec<f64>> = probes
        .par_iter()
        .map(|(x, y)| {
            let mut row = Vec::with_capacity(8);
            row.push(or_inf(dual_flatness_residual(&r, x, y).map(|v| v.normalized)));
            match equivalence_probe(&r, x, y) {
                Ok(p) => {
                    row.extend_from_slice(&p.residuals[1..]);
                    row.push(if p.is_mixed() { 1.0 } else { 0.0 });
                }
                Err(_) => row.extend_from_slice(&[f64::INFINITY; 3]),
            }
            let nav = to_navigation(&r);
            row.push(or_inf(nav.at(x).map(|_| randers_gap(&from_navigation(&nav), &r, x))));
            row.push(or_inf(fundamental_tensor(&r, x, y).map(|g| if g.min_eigenvalue() > 0.0 { 0.0 } else { 1.0 })));
            let lemma = lemma_profiles()
                .into_iter()
                .map(|p| or_inf(lemma_gap(&r, p, x, y)))
                .fold(0.0f64, f64::max);
            row.push(lemma);
            row
        })
        .collect();

    let names = [
        "dual-flatness",
        "navigation-data",
        "quartic-root-deformation",
        "equivalence-coherence",
        "navigation-round-trip",
        "strong-convexity",
        "deformation-lemmas",
    ];
    let mut checks: Vec<CheckResult> =
        names.iter().enumerate().map(|(k, name)| CheckResult::from_residuals(name, &columns(&rows, k), config.tol)).collect();

    if let Some(target) = spec.flag_curvature_target() {
        let flags = flag_set(config.dim, config.samples.min(50), config.seed ^ 0x5eed_f1a6, radius)?;
        let ks: Vec<f64> = flags
            .par_iter()
            .map(|(x, y, u)| or_inf(flag_curvature(&r, x, y, u).map(|k| (k - target).abs())))
            .collect();
        checks.push(CheckResult::from_residuals("flag-curvature", &ks, config.tol));
    }

    Ok(FlatnessReport {
        metric: spec.metric.clone(),
        params: params(spec, None),
        config: echo(config, seed_source, radius),
        checks,
        version: VERSION.to_string(),
    })
}

/// Direction of a navigation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `(alpha, beta) -> (h, W) -> (alpha, beta)`
    Forward,
    /// `(h, W) -> (alpha, beta) -> (h, W)`
    Inverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavigationSample {
    pub x: Vec<f64>,
    pub h: Vec<Vec<f64>>,
    pub wind: Vec<f64>,
    pub wind_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavigationReport {
    pub metric: String,
    pub params: Params,
    pub direction: Direction,
    pub config: ConfigEcho,
    pub samples: Vec<NavigationSample>,
    pub max_wind_norm: f64,
    pub checks: Vec<CheckResult>,
    pub version: String,
}

impl NavigationReport {
    pub fn exit_code(&self) -> i32 {
        exit_status(&self.checks)
    }
}

/// Navigation data at seeded points and the round-trip residual.
pub fn run_navigate(config: &ProbeConfig, spec: &MetricSpec, direction: Direction, seed_source: &str) -> Result<NavigationReport> {
    config.validate()?;
    let r = spec.build(config.dim)?;
    let radius = r.domain().sampling_radius(config.shrink);
    let probes = probe_set(config.dim, config.samples, config.seed, radius)?;
    let nav = to_navigation(&r);
    let rows: Vec<(f64, f64, f64)> = probes
        .par_iter()
        .map(|(x, _)| match nav.at(x) {
            Ok(p) => {
                let gap = match direction {
                    Direction::Forward => randers_gap(&from_navigation(&nav), &r, x),
                    Direction::Inverse => navigation_gap(&to_navigation(&from_navigation(&nav)), &nav, x),
                };
                (gap, p.wind_sq.sqrt(), 0.0)
            }
            Err(_) => (f64::INFINITY, f64::INFINITY, 1.0),
        })
        .collect();
    let samples = probes
        .iter()
        .take(3)
        .map(|(x, _)| {
            let p = nav.evaluate(x);
            NavigationSample { x: x.coords().to_vec(), h: p.h.rows(), wind: p.wind, wind_norm: p.wind_sq.sqrt() }
        })
        .collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let bounds: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(NavigationReport {
        metric: spec.metric.clone(),
        params: params(spec, None),
        direction,
        config: echo(config, seed_source, radius),
        samples,
        max_wind_norm: rows.iter().fold(0.0f64, |m, r| m.max(r.1)),
        checks: vec![
            CheckResult::from_residuals("round-trip", &gaps, config.tol),
            CheckResult::from_residuals("wind-bound", &bounds, config.tol),
        ],
        version: VERSION.to_string(),
    })
}

/// Profiles selectable by name.
pub const PROFILES: [&str; 5] = ["identity", "navigation", "quartic-root", "constant-kappa", "construction"];

/// `constant-kappa` takes kappa from `mu`; `construction` takes `(mu, lambda)` from the spec.
pub fn profile_by_name(name: &str, spec: &MetricSpec) -> Result<Arc<dyn DeformationProfile>> {
    Ok(match name {
        "identity" => Arc::new(crate::deform::Identity),
        "navigation" => Arc::new(Navigation),
        "quartic-root" => Arc::new(QuarticRoot),
        "constant-kappa" => Arc::new(ConstantKappa(spec.mu)),
        "construction" => Arc::new(Construction::new(spec.mu, spec.lambda)?),
        other => return Err(Error::InvalidParameter(format!("unknown profile {other:?}; expected one of {PROFILES:?}"))),
    })
}

/// Lemma predictions against direct recomputation for one profile, plus the
/// factor ODE residuals on `t = 0, 0.1, ..., 0.9`.
pub fn run_deform(config: &ProbeConfig, spec: &MetricSpec, profile_name: &str, seed_source: &str) -> Result<FlatnessReport> {
    config.validate()?;
    let r = spec.build(config.dim)?;
    let profile = profile_by_name(profile_name, spec)?;
    let radius = r.domain().sampling_radius(config.shrink);
    let probes = probe_set(config.dim, config.samples, config.seed, radius)?;
    let d = deform(r.alpha().clone(), r.beta().clone(), profile.clone())?;
    let rows: Vec<Vec<f64>> = probes
        .par_iter()
        .map(|(x, y)| match (predict_stages(&d, x, y), direct_stages(&d, x, y)) {
            (Ok(p), Ok(q)) => {
                let xj = x.jets();
                let bar = crate::field::form_norm_sq(&d.bar_alpha.matrix(&xj), &d.bar_beta.components(&xj)).value();
                let rel_bar = (bar - d.bar_b_sq_predicted(x)).abs() / (1.0 + bar.abs());
                vec![p[0].normalized_gap(&q[0]), p[1].normalized_gap(&q[1]), p[2].normalized_gap(&q[2]), rel_bar]
            }
            _ => vec![f64::INFINITY; 4],
        })
        .collect();
    let mut checks: Vec<CheckResult> = ["stretch-stage", "conformal-stage", "rescale-stage", "deformed-b-norm"]
        .iter()
        .enumerate()
        .map(|(k, n)| CheckResult::from_residuals(n, &columns(&rows, k), config.tol))
        .collect();
    // Profiles such as `construction` are only defined on part of [0, 1).
    let ode: Vec<Vec<f64>> = (0..10)
        .map(|k| profile_conditions(profile.as_ref(), k as f64 / 10.0).to_vec())
        .filter(|r| r.iter().all(|v| v.is_finite()))
        .collect();
    for (k, name) in ["ode-kappa", "ode-rho", "ode-nu"].iter().enumerate() {
        let vals: Vec<f64> = columns(&ode, k).iter().map(|v| v.abs()).collect();
        checks.push(CheckResult::from_residuals(name, &vals, config.tol));
    }
    Ok(FlatnessReport {
        metric: spec.metric.clone(),
        params: params(spec, Some(profile.name())),
        config: echo(config, seed_source, radius),
        checks,
        version: VERSION.to_string(),
    })
}
