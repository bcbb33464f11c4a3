//! Small dense linear algebra: Jacobi symmetric eigensolver, Lyapunov-based
//! Hurwitz test, spectral norm, square SVD and real/complex LU solves.
//!
//! Everything here is sized for desk-scale problems (n ≤ 50) and works on
//! row-major [`Mat`] values. All routines are pure functions.

mod eig;
mod lu;
mod lyap;
mod mat;
mod svd;

pub use eig::{max_eig, sym_eig, SymEig};
pub use lu::{complex_solve, det, solve, CMat, LuFactor, Scalar, PIVOT_REL_TOL};
pub use lyap::{hurwitz_verdict, is_hurwitz, solve_lyapunov, spectral_norm, HurwitzTest};
pub use mat::Mat;
pub use svd::{svd, Svd};

/// Default absolute tolerance for hybrid comparisons.
pub const TOL_ABS: f64 = 1e-10;
/// Default relative tolerance for hybrid comparisons.
pub const TOL_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(
        "Lyapunov equation is singular (eigenvalue pair sums to zero); boundary / not Hurwitz"
    )]
    SingularLyapunov,
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("Jacobi iteration did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// `|a − b| ≤ TOL_ABS + TOL_REL·max(|a|, |b|)`
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL_ABS + TOL_REL * a.abs().max(b.abs())
}

/// `AᵀD + DA` for diagonal `D = diag(d)`.
pub fn lyapunov_form(a: &Mat, d: &[f64]) -> Mat {
    assert!(a.is_square() && a.rows() == d.len());
    let n = d.len();
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[(j, i)] * d[j] + d[i] * a[(i, j)];
        }
    }
    m
}
