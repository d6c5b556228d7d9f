//! Seeded probe sampling: points uniform in a ball, directions uniform on
//! the unit sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{ChartPoint, TangentVector};

/// Name and version of the generator, echoed into reports.
pub const PRNG: &str = "ChaCha8Rng (rand_chacha 0.9)";

/// A seeded stream of probe points and directions.
pub struct Sampler {
    rng: ChaCha8Rng,
    n: usize,
}

impl Sampler {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {n}")));
        }
        Ok(Sampler { rng: ChaCha8Rng::seed_from_u64(seed), n })
    }

    fn in_unit_ball(&mut self) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.n).map(|_| self.rng.random_range(-1.0..1.0)).collect();
            let s: f64 = v.iter().map(|c| c * c).sum();
            if s < 1.0 {
                return v;
            }
        }
    }

    /// Uniform in `|x| < radius`, by rejection from the cube.
    pub fn point(&mut self, radius: f64) -> ChartPoint {
        let v = self.in_unit_ball();
        ChartPoint::new(v.into_iter().map(|c| c * radius).collect()).expect("finite sample in n >= 2")
    }

    /// Uniform on the unit sphere: a ball sample away from the origin, normalized.
    pub fn direction(&mut self) -> TangentVector {
        loop {
            let v = self.in_unit_ball();
            let s = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if s > 1e-3 {
                return TangentVector::new(v.into_iter().map(|c| c / s).collect()).expect("finite sample");
            }
        }
    }

    /// A unit vector at least `min_angle` radians away from `y` and `-y`.
    pub fn transverse(&mut self, y: &TangentVector, min_angle: f64) -> TangentVector {
        let ny = y.norm();
        loop {
            let u = self.direction();
            let cos = u.coords().iter().zip(y.coords()).map(|(a, b)| a * b).sum::<f64>() / ny;
            if cos.abs() < min_angle.cos() {
                return u;
            }
        }
    }
}

/// `count` pairs `(x, y)` with `|x| < radius` and `|y| = 1`.
pub fn probe_set(n: usize, count: usize, seed: u64, radius: f64) -> Result<Vec<(ChartPoint, TangentVector)>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("sampling radius must be positive and finite, got {radius}")));
    }
    let mut s = Sampler::new(n, seed)?;
    Ok((0..count)
        .map(|_| {
            let x = s.point(radius);
            let y = s.direction();
            (x, y)
        })
        .collect())
}

/// `count` flags `(x, y, u)` with `u` at least 0.1 rad from the pole `y`.
pub fn flag_set(n: usize, count: usize, seed: u64, radius: f64) -> Result<Vec<(ChartPoint, TangentVector, TangentVector)>> {
    let mut s = Sampler::new(n, seed)?;
    Ok((0..count)
        .map(|_| {
            let x = s.point(radius);
            let y = s.direction();
            let u = s.transverse(&y, 0.1);
            (x, y, u)
        })
        .collect())
}
