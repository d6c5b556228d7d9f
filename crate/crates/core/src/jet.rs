//! Truncated multi-direction forward-mode jets.
//!
//! A [`Jet`] carries the Taylor coefficients of a scalar with respect to up
//! to [`MAX_ORDER`] independent infinitesimal directions `e_0 .. e_3`, where
//! every direction is nilpotent (`e_d^2 = 0`). The coefficient stored at bit
//! mask `S` multiplies the monomial `prod_{d in S} e_d`, so the coefficient at
//! the full mask of `k` directions is an exact `k`-th order mixed partial.
//!
//! This is the flattened form of nesting dual numbers four levels deep. Keeping
//! it flat makes the type `Copy`, object-safe to pass through trait objects and
//! lets callers peel off "inner" directions while keeping "outer" ones, which
//! is how the spray of a Finsler metric gets differentiated as a field.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Maximum number of independent directions (and so the maximum derivative order).
pub const MAX_ORDER: usize = 4;
const SLOTS: usize = 1 << MAX_ORDER;

#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; SLOTS],
    dirs: u8,
}

impl Jet {
    pub const fn constant(value: f64) -> Self {
        let mut c = [0.0; SLOTS];
        c[0] = value;
        Jet { c, dirs: 0 }
    }

    /// `value + e_dir`. Directions at or beyond [`MAX_ORDER`] poison the jet with NaN.
    pub fn variable(value: f64, dir: usize) -> Self {
        Self::seeded(value, dir, 1.0)
    }

    /// `value + slope * e_dir`.
    pub fn seeded(value: f64, dir: usize, slope: f64) -> Self {
        if dir >= MAX_ORDER {
            return Jet::constant(f64::NAN);
        }
        let mut j = Jet::constant(value);
        j.c[1 << dir] = slope;
        j.dirs = dir as u8 + 1;
        j
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Number of directions this jet may depend on (`0..dirs`).
    #[inline]
    pub fn dirs(&self) -> usize {
        self.dirs as usize
    }

    /// Coefficient of the monomial selected by `mask`.
    #[inline]
    pub fn coeff(&self, mask: usize) -> f64 {
        self.c[mask]
    }

    /// Mixed partial along every active direction.
    pub fn top(&self) -> f64 {
        self.c[(1 << self.dirs) - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.c[..1 << self.dirs].iter().all(|v| v.is_finite())
    }

    /// Extracts the derivative along the directions in `inner_mask` as a jet in
    /// the first `base` directions. All bits of `inner_mask` must be `>= base`.
    pub fn inner(&self, base: usize, inner_mask: usize) -> Jet {
        debug_assert_eq!(inner_mask & ((1 << base) - 1), 0);
        let mut out = Jet::constant(0.0);
        out.dirs = base as u8;
        for s in 0..1usize << base {
            out.c[s] = self.c[s | inner_mask];
        }
        out
    }

    /// Truncates to the first `base` directions.
    pub fn restrict(&self, base: usize) -> Jet {
        self.inner(base, 0)
    }

    /// Applies a scalar function given its derivatives `f, f', f'', ...` at
    /// `self.value()`. `derivs` must hold at least `dirs + 1` entries.
    ///
    /// Uses `d_i (f o u) = (f' o u) d_i u` with `i` the lowest direction of
    /// the mask, expanded with the product rule over the remaining ones.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let d = self.dirs();
        let size = 1usize << d;
        let mut g = [[0.0f64; SLOTS]; MAX_ORDER + 1];
        for m in (0..=d).rev() {
            g[m][0] = derivs[m];
            if m == d {
                continue;
            }
            let budget = d - m;
            for s in 1..size {
                if (s as u32).count_ones() as usize > budget {
                    continue;
                }
                let low = s & s.wrapping_neg();
                let rest = s ^ low;
                // sum over a subset of `rest`; complement keeps `low`
                let mut acc = 0.0;
                let mut a = rest;
                loop {
                    acc += g[m + 1][a] * self.c[s ^ a];
                    if a == 0 {
                        break;
                    }
                    a = (a - 1) & rest;
                }
                g[m][s] = acc;
            }
        }
        Jet { c: g[0], dirs: self.dirs }
    }

    pub fn powf(self, p: f64) -> Jet {
        let d = self.dirs();
        let u = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (m, slot) in derivs.iter_mut().enumerate().take(d + 1) {
            *slot = coef * u.powf(p - m as f64);
            coef *= p - m as f64;
        }
        self.compose(&derivs)
    }

    pub fn sqrt(self) -> Jet {
        if self.dirs == 0 {
            return Jet::constant(self.value().sqrt());
        }
        self.powf(0.5)
    }

    pub fn recip(self) -> Jet {
        let d = self.dirs();
        let u = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        let inv = 1.0 / u;
        let mut term = inv;
        for (m, slot) in derivs.iter_mut().enumerate().take(d + 1) {
            *slot = term;
            term *= -((m + 1) as f64) * inv;
        }
        self.compose(&derivs)
    }

    pub fn exp(self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(self) -> Jet {
        let d = self.dirs();
        let u = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        derivs[0] = u.ln();
        let mut term = 1.0 / u;
        for m in 1..=d {
            derivs[m] = term;
            term *= -(m as f64) / u;
        }
        self.compose(&derivs)
    }

    pub fn powi(self, k: i32) -> Jet {
        match k {
            0 => Jet::constant(1.0),
            1 => self,
            2 => self * self,
            _ if k < 0 => self.powi(-k).recip(),
            _ => {
                let half = self.powi(k / 2);
                if k % 2 == 0 {
                    half * half
                } else {
                    half * half * self
                }
            }
        }
    }

    fn zip(self, rhs: Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let dirs = self.dirs.max(rhs.dirs);
        let mut out = Jet::constant(0.0);
        out.dirs = dirs;
        for s in 0..1usize << dirs {
            out.c[s] = f(self.c[s], rhs.c[s]);
        }
        out
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Jet {
        let mut out = self;
        for v in out.c[..1 << self.dirs].iter_mut() {
            *v = f(*v);
        }
        out
    }
}

impl Default for Jet {
    fn default() -> Self {
        Jet::constant(0.0)
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dirs", &self.dirs)
            .field("coeffs", &&self.c[..1 << self.dirs])
            .finish()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let dirs = self.dirs.max(rhs.dirs);
        let mut out = Jet::constant(0.0);
        out.dirs = dirs;
        for s in 0..1usize << dirs {
            let mut acc = 0.0;
            let mut a = s;
            loop {
                acc += self.c[a] * rhs.c[s ^ a];
                if a == 0 {
                    break;
                }
                a = (a - 1) & s;
            }
            out.c[s] = acc;
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        if rhs.dirs == 0 {
            return self * (1.0 / rhs.value());
        }
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|v| -v)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.map(|v| v * rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.map(|v| v / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip() * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::constant(0.0), |a, b| a + b)
    }
}

/// Arithmetic shared by `f64` and [`Jet`], so the small dense linear algebra
/// can run on either.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// The primal (zeroth-order) part.
    fn primal(&self) -> f64;
    fn sqrt(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn primal(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl Scalar for Jet {
    fn from_f64(v: f64) -> Self {
        Jet::constant(v)
    }
    fn primal(&self) -> f64 {
        self.value()
    }
    fn sqrt(self) -> Self {
        Jet::sqrt(self)
    }
}

/// Sum of `a_i * b_i`.
pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    a.iter().zip(b).map(|(&u, &v)| u * v).sum()
}

pub fn constants(v: &[f64]) -> Vec<Jet> {
    v.iter().map(|&c| Jet::constant(c)).collect()
}

/// Highest direction count over a slice of jets.
pub fn max_dirs(v: &[Jet]) -> usize {
    v.iter().map(Jet::dirs).max().unwrap_or(0)
}
