//! Numerical laboratory for dually flat Randers metrics.
//!
//! Fields are evaluated on [`Jet`]s, a forward-mode automatic differentiation
//! scalar with up to four nested directions, so every spray, covariant
//! derivative and curvature is exact to rounding.

pub mod catalog;
pub mod deform;
pub mod diff;
pub mod error;
pub mod field;
pub mod flatness;
pub mod jet;
pub mod linalg;
pub mod navigation;
pub mod probe;
pub mod randers;
pub mod report;
pub mod riemann;

pub use catalog::{FamilyParams, Sign};
pub use deform::{deform, DeformationProfile, DeformedData};
pub use diff::{fd_derivative, jet_derivative};
pub use error::{Error, Result};
pub use field::{ChartPoint, FinslerMetric, MetricField, OneFormField, ScalarField, TangentVector, VectorField};
pub use flatness::{
    dually_related_check, extract_riemann_theta, extract_theta_tau, hessian_metric, main1_equivalence, maincf_residuals,
    DuallyRelatedCertificate, ThetaTau, Verdict,
};
pub use jet::Jet;
pub use linalg::Matrix;
pub use navigation::{from_navigation, to_navigation, NavigationData};
pub use randers::{dual_flatness_residual, finsler_spray, flag_curvature, fundamental_tensor, FundamentalTensor, RandersMetric};
pub use report::{run_deform, run_navigate, run_verify, CheckResult, FlatnessReport, MetricSpec, ProbeConfig};
pub use riemann::{christoffel, covariant_decomposition, riemann_spray, sectional_curvature, CovariantDecomposition};
