//! Fixtures shared by the benchmarks.

use duflat::catalog::{self, FamilyParams};
use duflat::{ChartPoint, RandersMetric, TangentVector};

/// Dually flat family member `(mu, lambda) = (1, 0.7)` in dimension `n`.
pub fn family(n: usize) -> RandersMetric {
    catalog::example_family(FamilyParams::new(1.0, 0.7, n).unwrap()).unwrap()
}

/// A fixed interior point, a direction and a second vector spanning a flag.
pub fn probe(n: usize) -> (ChartPoint, TangentVector, TangentVector) {
    let x = (0..n).map(|i| 0.1 + 0.05 * i as f64).collect();
    let y = (0..n).map(|i| 1.0 - 0.3 * i as f64).collect();
    let u = (0..n).map(|i| if i == 1 { 1.0 } else { 0.2 }).collect();
    (ChartPoint::new(x).unwrap(), TangentVector::new(y).unwrap(), TangentVector::new(u).unwrap())
}
