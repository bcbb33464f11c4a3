use super::eig::sym_eig;
use super::{Mat, NumericsError};

/// Singular value decomposition `S = U Σ Vᵀ` of a square matrix.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Left singular vectors as columns.
    pub u: Mat,
    /// Right singular vectors as columns.
    pub v: Mat,
}

impl Svd {
    pub fn reconstruct(&self) -> Mat {
        &(&self.u * &Mat::from_diag(&self.sigma)) * &self.v.transpose()
    }

    pub fn left(&self, k: usize) -> Vec<f64> {
        self.u.column(k)
    }

    pub fn right(&self, k: usize) -> Vec<f64> {
        self.v.column(k)
    }
}

/// SVD of a square matrix from the eigendecompositions of `SᵀS` and `SSᵀ`.
///
/// Right vectors come from `SᵀS`. For nonzero singular values the left
/// vectors are `S vᵢ / σᵢ`, which fixes the sign pairing; the remaining left
/// vectors are taken from the null space of `SSᵀ` and re-orthonormalised.
pub fn svd(s: &Mat) -> Result<Svd, NumericsError> {
    if !s.is_square() {
        return Err(NumericsError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    if !s.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let n = s.rows();
    let st = s.transpose();
    let right = sym_eig(&(&st * s))?;

    // σᵢ = ‖S vᵢ‖ is more accurate than √λᵢ for small singular values.
    let mut triples: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..n)
        .map(|k| {
            let v = right.eigenvectors.column(k);
            let sv = s.mul_vec(&v);
            (norm2(&sv), v, sv)
        })
        .collect();
    triples.sort_by(|a, b| b.0.total_cmp(&a.0));

    let sigma_max = triples.first().map_or(0.0, |t| t.0);
    let cutoff = 1e-13 * sigma_max.max(f64::MIN_POSITIVE);

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut v = Mat::zeros(n, n);
    for (k, (sk, vk, svk)) in triples.iter().enumerate() {
        for r in 0..n {
            v[(r, k)] = vk[r];
        }
        if *sk > cutoff {
            u_cols.push(svk.iter().map(|x| x / sk).collect());
            sigma.push(*sk);
        } else {
            sigma.push(if *sk > 0.0 { *sk } else { 0.0 });
        }
    }

    if u_cols.len() < n {
        // Complete U from the eigenvectors of SSᵀ with the smallest eigenvalues.
        let left = sym_eig(&(s * &st))?;
        for k in 0..n {
            if u_cols.len() == n {
                break;
            }
            let mut cand = left.eigenvectors.column(k);
            for _ in 0..2 {
                for u in &u_cols {
                    let d = dot(&cand, u);
                    cand.iter_mut().zip(u).for_each(|(c, ui)| *c -= d * ui);
                }
            }
            let nc = norm2(&cand);
            if nc > 1e-8 {
                u_cols.push(cand.iter().map(|x| x / nc).collect());
            }
        }
    }

    let mut u = Mat::zeros(n, n);
    for (k, col) in u_cols.iter().enumerate() {
        for r in 0..n {
            u[(r, k)] = col[r];
        }
    }
    Ok(Svd { sigma, u, v })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
