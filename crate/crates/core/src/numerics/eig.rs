//! Symmetric eigendecomposition by the cyclic Jacobi method.

use super::{Mat, NumericsError};

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_REL_TOL: f64 = 1e-12;
const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Eigendecomposition `A = Q Λ Qᵀ` of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEig {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `eigenvalues`.
    pub eigenvectors: Mat,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    pub fn reconstruct(&self) -> Mat {
        let q = &self.eigenvectors;
        let lambda = Mat::from_diag(&self.eigenvalues);
        &(q * &lambda) * &q.transpose()
    }
}

pub(crate) fn check_symmetric(a: &Mat) -> Result<(), NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let tol = SYMMETRY_REL_TOL * a.norm_inf();
    let n = a.rows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if worst > tol {
        return Err(NumericsError::NotSymmetric { asymmetry: worst });
    }
    Ok(())
}

/// Eigenvalues and eigenvectors of a symmetric matrix.
///
/// Cyclic row-by-row Jacobi rotations until the off-diagonal Frobenius norm
/// falls below `1e-12·‖A‖F`. The input is symmetrised before rotating so
/// that asymmetry within tolerance does not leak into the result.
pub fn sym_eig(a: &Mat) -> Result<SymEig, NumericsError> {
    check_symmetric(a)?;
    let n = a.rows();
    let mut m = a.symmetric_part();
    let mut v = Mat::identity(n);
    let threshold = OFF_DIAG_REL_TOL * m.norm_fro();

    let off_norm = |m: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&m) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(NumericsError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s, t);
            }
        }
        converged = off_norm(&m) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, col)] = v[(r, src)];
        }
    }
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Applies the rotation annihilating `m[(p, q)]` and accumulates it into `v`.
fn rotate(m: &mut Mat, v: &mut Mat, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = m.rows();
    let apq = m[(p, q)];
    let tau = s / (1.0 + c);
    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        m[(r, p)] = new_rp;
        m[(p, r)] = new_rp;
        m[(r, q)] = new_rq;
        m[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp - s * (vrq + tau * vrp);
        v[(r, q)] = vrq + s * (vrp - tau * vrq);
    }
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eig(a: &Mat) -> Result<f64, NumericsError> {
    Ok(sym_eig(a)?.max())
}
