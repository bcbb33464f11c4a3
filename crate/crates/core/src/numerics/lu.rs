//! LU factorisation with partial pivoting over the real and complex fields.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{Mat, NumericsError};

/// Relative pivot threshold below which a factorised matrix is declared singular.
pub const PIVOT_REL_TOL: f64 = 1e-13;

/// Scalar field the LU routines operate on.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);

    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// In-place LU factors of a square matrix: `P M = L U` with unit-diagonal `L`.
#[derive(Clone, Debug)]
pub struct LuFactor<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    odd_swaps: bool,
    min_pivot: f64,
    scale: f64,
}

impl<T: Scalar> LuFactor<T> {
    /// Factorises a row-major `n × n` matrix. Never fails; singularity is
    /// reported by [`LuFactor::solve`].
    pub fn new(n: usize, mut lu: Vec<T>) -> Self {
        assert_eq!(lu.len(), n * n, "LU input must be square");
        let scale = (0..n)
            .map(|i| {
                lu[i * n..(i + 1) * n]
                    .iter()
                    .map(|v| v.modulus())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd_swaps = false;
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].modulus()))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            min_pivot = min_pivot.min(pmax);
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd_swaps = !odd_swaps;
            }
            let pivot = lu[k * n + k];
            if pivot.modulus() == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f.modulus() == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] = lu[i * n + j] - f * u;
                }
            }
        }
        if n == 0 {
            min_pivot = 0.0;
        }
        Self {
            n,
            lu,
            perm,
            odd_swaps,
            min_pivot,
            scale,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.n == 0 || self.min_pivot < PIVOT_REL_TOL * self.scale || self.scale == 0.0
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn det(&self) -> T {
        let mut d = if self.odd_swaps { -T::ONE } else { T::ONE };
        for k in 0..self.n {
            d = d * self.lu[k * self.n + k];
        }
        d
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, NumericsError> {
        let n = self.n;
        if b.len() != n {
            return Err(NumericsError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        if self.is_singular() {
            return Err(NumericsError::Singular);
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Solves `M x = b` for real square `M`.
pub fn solve(m: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    LuFactor::new(m.rows(), m.as_slice().to_vec()).solve(b)
}

/// Determinant via LU; no singularity threshold is applied.
pub fn det(m: &Mat) -> f64 {
    assert!(m.is_square());
    LuFactor::new(m.rows(), m.as_slice().to_vec()).det()
}

/// Dense complex square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self, NumericsError> {
        if data.len() != n * n {
            return Err(NumericsError::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self { n, data })
    }

    /// `a·I + b·M` for a real matrix `M`.
    pub fn shifted(shift: Complex64, scale: f64, m: &Mat) -> Result<Self, NumericsError> {
        if !m.is_square() {
            return Err(NumericsError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        let mut data: Vec<Complex64> = m
            .as_slice()
            .iter()
            .map(|&v| Complex64::new(scale * v, 0.0))
            .collect();
        for i in 0..n {
            data[i * n + i] += shift;
        }
        Self::new(n, data)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|z| z.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Solves `M x = b` over the complex field with partial pivoting.
pub fn complex_solve(m: &CMat, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
    if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    LuFactor::new(m.n, m.data.clone()).solve(b)
}
