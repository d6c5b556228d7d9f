//! Small dense square matrices over [`Scalar`], with LU factorization.
//!
//! Dimensions here are tiny (n <= 8), so everything is row-major `Vec`
//! storage and plain loops. Pivoting decisions look only at primal values,
//! which keeps the factorization of a jet-valued matrix differentiable.

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};

/// Condition-number guard applied to every inversion and solve.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![S::from_f64(0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| S::from_f64(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Matrix<T> {
        Matrix { n: self.n, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn primal(&self) -> Matrix<f64> {
        self.map(|v| v.primal())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|i| {
                let mut acc = S::from_f64(0.0);
                for (j, &vj) in v.iter().enumerate() {
                    acc = acc + self[(i, j)] * vj;
                }
                acc
            })
            .collect()
    }

    /// `u^T A v`.
    pub fn bilinear(&self, u: &[S], v: &[S]) -> S {
        let av = self.mul_vec(v);
        let mut acc = S::from_f64(0.0);
        for (a, b) in u.iter().zip(&av) {
            acc = acc + *a * *b;
        }
        acc
    }

    pub fn lu(&self) -> Result<Lu<S>> {
        let n = self.n;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.data.iter().map(|v| v.primal().abs()).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Singular);
        }
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].primal().abs();
            for i in k + 1..n {
                let v = a[(i, k)].primal().abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= scale * 1e-20 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                for j in k + 1..n {
                    let t = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * t;
                }
            }
        }
        Ok(Lu { lu: a, perm })
    }

    /// Solves `A x = b`, rejecting ill-conditioned systems.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        let lu = self.lu()?;
        guard_condition(&self.primal(), None)?;
        Ok(lu.solve(b))
    }

    pub fn inverse(&self) -> Result<Matrix<S>> {
        let inv = self.lu()?.inverse();
        guard_condition(&self.primal(), Some(&inv.primal()))?;
        Ok(inv)
    }

    /// Inverse, or a NaN matrix when the factorization fails. Used inside
    /// field evaluations, which report non-finite values downstream.
    pub fn inverse_or_nan(&self) -> Matrix<S> {
        self.lu()
            .map(|lu| lu.inverse())
            .unwrap_or_else(|_| Matrix::from_fn(self.n, |_, _| S::from_f64(f64::NAN)))
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }
}

impl Matrix<f64> {
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Matrix<f64>) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_fn(self.n, self.n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]));
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn is_positive_definite(&self) -> bool {
        self.symmetric_eigenvalues().first().is_some_and(|&l| l > 0.0)
    }

    pub fn to_jets(&self) -> Matrix<Jet> {
        self.map(Jet::constant)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

pub struct Lu<S> {
    lu: Matrix<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> Lu<S> {
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.n;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] = x[i] - self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] = x[i] - self.lu[(i, k)] * x[k];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<S> {
        let n = self.lu.n;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![S::from_f64(0.0); n];
        for j in 0..n {
            e[j] = S::from_f64(1.0);
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
            e[j] = S::from_f64(0.0);
        }
        inv
    }
}

fn guard_condition(a: &Matrix<f64>, inv: Option<&Matrix<f64>>) -> Result<()> {
    let inv_norm = match inv {
        Some(m) => m.norm1(),
        None => a.lu()?.inverse().norm1(),
    };
    let cond = a.norm1() * inv_norm;
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::IllConditioned { cond, limit: CONDITION_LIMIT });
    }
    Ok(())
}

/// Least squares `min |A t - b|` via the normal equations, `A` given as rows.
/// Returns the solution and the Euclidean norm of the misfit.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rows.first().map_or(0, Vec::len);
    let mut ata = Matrix::<f64>::zeros(m);
    let mut atb = vec![0.0; m];
    for (row, &b) in rows.iter().zip(rhs) {
        for i in 0..m {
            atb[i] += row[i] * b;
            for j in 0..m {
                ata[(i, j)] += row[i] * row[j];
            }
        }
    }
    let sol = match ata.solve(&atb) {
        Ok(s) => s,
        Err(Error::Singular) | Err(Error::IllConditioned { .. }) => return Err(Error::RankDeficient),
        Err(e) => return Err(e),
    };
    let misfit = rows
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let r: f64 = row.iter().zip(&sol).map(|(a, t)| a * t).sum::<f64>() - b;
            r * r
        })
        .sum::<f64>()
        .sqrt();
    Ok((sol, misfit))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
