use super::eig::sym_eig;
use super::lu::LuFactor;
use super::{Mat, NumericsError};

/// Outcome of the Lyapunov-equation Hurwitz test.
#[derive(Clone, Debug)]
pub struct HurwitzTest {
    pub hurwitz: bool,
    /// Solution of `AᵀP + PA = −I`.
    pub p: Mat,
    /// Smallest eigenvalue of `P`.
    pub p_min_eig: f64,
}

/// Solves the continuous Lyapunov equation `AᵀP + PA = −Q` through its
/// `n²`-dimensional Kronecker form.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() || !q.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let n = a.rows();
    let nn = n * n;
    // Unknown P[i][j] lives at i*n + j; row i*n + j is entry (i, j) of AᵀP + PA.
    let mut k = vec![0.0; nn * nn];
    for i in 0..n {
        for j in 0..n {
            let row = (i * n + j) * nn;
            for l in 0..n {
                k[row + l * n + j] += a[(l, i)];
                k[row + i * n + l] += a[(l, j)];
            }
        }
    }
    let rhs: Vec<f64> = (0..nn).map(|idx| -q[(idx / n, idx % n)]).collect();
    let lu = LuFactor::new(nn, k);
    let x = lu.solve(&rhs).map_err(|e| match e {
        NumericsError::Singular => NumericsError::SingularLyapunov,
        other => other,
    })?;
    Mat::from_vec(n, n, x)
}

/// Hurwitz test: `A` is Hurwitz iff `AᵀP + PA = −I` has a solution with `P ≻ 0`.
///
/// A singular Kronecker system (an eigenvalue pair summing to zero) is
/// reported as [`NumericsError::SingularLyapunov`]; such a matrix is on the
/// stability boundary or beyond.
pub fn is_hurwitz(a: &Mat) -> Result<HurwitzTest, NumericsError> {
    let p = solve_lyapunov(a, &Mat::identity(a.rows()))?;
    let p = p.symmetric_part();
    if !p.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let p_min_eig = sym_eig(&p)?.min();
    Ok(HurwitzTest {
        hurwitz: p_min_eig > 0.0,
        p,
        p_min_eig,
    })
}

/// Convenience wrapper collapsing the boundary case to `false`.
pub fn hurwitz_verdict(a: &Mat) -> Result<bool, NumericsError> {
    match is_hurwitz(a) {
        Ok(t) => Ok(t.hurwitz),
        Err(NumericsError::SingularLyapunov) => Ok(false),
        Err(e) => Err(e),
    }
}

/// `‖E‖₂ = √λmax(EᵀE)`.
pub fn spectral_norm(e: &Mat) -> Result<f64, NumericsError> {
    if !e.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let gram = &e.transpose() * e;
    Ok(sym_eig(&gram)?.max().max(0.0).sqrt())
}
