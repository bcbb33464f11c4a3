//! Brute-force diagonal-stability oracle for small general matrices.
//!
//! It never looks at rank-1 structure. "No" answers come from necessary
//! conditions (every principal submatrix of a diagonally stable matrix is
//! diagonally stable, hence Hurwitz); "yes" answers carry a witness `d`
//! with `λmax(AᵀD + DA) < −1e-10`.

use rand::Rng;
use serde::Serialize;

use super::lyapunov_max_eig;
use crate::numerics::{hurwitz_verdict, Mat, NumericsError};

const WITNESS_TOL: f64 = -1e-10;
/// Subsets are enumerated exhaustively up to this size.
const MAX_EXHAUSTIVE_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleVerdict {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub verdict: OracleVerdict,
    pub witness: Option<Vec<f64>>,
    /// Which necessary condition failed, for "no" verdicts.
    pub reason: Option<String>,
}

impl OracleResult {
    fn no(reason: String) -> Self {
        Self {
            verdict: OracleVerdict::No,
            witness: None,
            reason: Some(reason),
        }
    }

    fn yes(witness: Option<Vec<f64>>) -> Self {
        Self {
            verdict: OracleVerdict::Yes,
            witness,
            reason: None,
        }
    }
}

/// Exact 2×2 characterisation: `a₁₁ < 0`, `a₂₂ < 0`, `det A > 0`.
fn two_by_two_stable(a11: f64, a12: f64, a21: f64, a22: f64) -> bool {
    a11 < 0.0 && a22 < 0.0 && a11 * a22 - a12 * a21 > 0.0
}

/// `D = diag(1, t)` maximising the determinant margin of `AᵀD + DA`.
fn two_by_two_witness(a: &Mat) -> Option<Vec<f64>> {
    let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let t = if a21 != 0.0 {
        (2.0 * a11 * a22 - a12 * a21) / (a21 * a21)
    } else {
        a12 * a12 / (2.0 * a11 * a22) + 1.0
    };
    let d = vec![1.0, t];
    match lyapunov_max_eig(a, &d) {
        Ok(l) if t > 0.0 && l < WITNESS_TOL => Some(d),
        _ => None,
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn necessity_failure(a: &Mat) -> Result<Option<String>, NumericsError> {
    let n = a.rows();
    if let Some(i) = (0..n).find(|&i| a[(i, i)] >= 0.0) {
        return Ok(Some(format!("diagonal entry {i} is not negative")));
    }
    for s in subsets(n, 2) {
        let (i, j) = (s[0], s[1]);
        if !two_by_two_stable(a[(i, i)], a[(i, j)], a[(j, i)], a[(j, j)]) {
            return Ok(Some(format!(
                "principal submatrix {s:?} fails the 2x2 test"
            )));
        }
    }
    let sizes: Vec<usize> = if n <= MAX_EXHAUSTIVE_N {
        (3..=n).collect()
    } else {
        vec![n]
    };
    for k in sizes {
        let sets = if k == n {
            vec![(0..n).collect()]
        } else {
            subsets(n, k)
        };
        for s in sets {
            if !hurwitz_verdict(&a.principal_submatrix(&s))? {
                return Ok(Some(format!("principal submatrix {s:?} is not Hurwitz")));
            }
        }
    }
    Ok(None)
}

/// Scale-free objective: `λmax(AᵀD + DA) / maxᵢ dᵢ` with `d = exp(z)`.
fn objective(a: &Mat, z: &[f64]) -> Result<(f64, Vec<f64>), NumericsError> {
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d: Vec<f64> = z.iter().map(|zi| (zi - zmax).exp()).collect();
    Ok((lyapunov_max_eig(a, &d)?, d))
}

/// Decides diagonal stability of a small square matrix by sign tests
/// (`N ≤ 2`), necessary-condition screening and a seeded search for a
/// diagonal witness (`N ≥ 3`). `budget` bounds the number of candidate
/// evaluations in the search.
pub fn oracle_diagstab<R: Rng + ?Sized>(
    a: &Mat,
    budget: usize,
    rng: &mut R,
) -> Result<OracleResult, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let n = a.rows();
    match n {
        0 => return Ok(OracleResult::yes(Some(vec![]))),
        1 => {
            return Ok(if a[(0, 0)] < 0.0 {
                OracleResult::yes(Some(vec![1.0]))
            } else {
                OracleResult::no("scalar entry is not negative".into())
            })
        }
        2 => {
            return Ok(
                if two_by_two_stable(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]) {
                    OracleResult::yes(two_by_two_witness(a))
                } else {
                    OracleResult::no("2x2 test fails".into())
                },
            )
        }
        _ => {}
    }

    if let Some(reason) = necessity_failure(a)? {
        return Ok(OracleResult::no(reason));
    }

    let mut evals = 0usize;
    let mut best_z = vec![0.0; n];
    let (mut best_f, mut best_d) = objective(a, &best_z)?;
    evals += 1;

    // Coarse log grid with d₀ = 1 when it fits in a quarter of the budget.
    let levels: Vec<f64> = (-4..=4)
        .map(|k| k as f64 * 0.5 * std::f64::consts::LN_10)
        .collect();
    let grid_size = levels.len().pow((n - 1) as u32);
    if grid_size <= budget / 4 {
        let mut z = vec![0.0; n];
        for idx in 0..grid_size {
            let mut rem = idx;
            for zi in z.iter_mut().skip(1) {
                *zi = levels[rem % levels.len()];
                rem /= levels.len();
            }
            let (f, d) = objective(a, &z)?;
            evals += 1;
            if f < best_f {
                best_f = f;
                best_d = d;
                best_z.clone_from(&z);
            }
        }
    }

    // Random log-uniform samples over six decades.
    let n_random = budget.saturating_sub(evals) / 2;
    for _ in 0..n_random {
        if best_f < WITNESS_TOL {
            break;
        }
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-7.0..7.0)).collect();
        let (f, d) = objective(a, &z)?;
        evals += 1;
        if f < best_f {
            best_f = f;
            best_d = d;
            best_z = z;
        }
    }

    // Compass search from the best point.
    let mut step = 1.0;
    while best_f >= WITNESS_TOL && evals < budget && step > 1e-7 {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                if evals >= budget {
                    break;
                }
                let mut z = best_z.clone();
                z[i] += dir * step;
                let (f, d) = objective(a, &z)?;
                evals += 1;
                if f < best_f {
                    best_f = f;
                    best_d = d;
                    best_z = z;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    Ok(if best_f < WITNESS_TOL {
        OracleResult::yes(Some(best_d))
    } else {
        OracleResult {
            verdict: OracleVerdict::Unknown,
            witness: None,
            reason: None,
        }
    })
}
