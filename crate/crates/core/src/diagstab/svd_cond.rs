use serde::Serialize;

use super::{lyapunov_max_eig, DiagStabError};
use crate::numerics::{svd, Mat};

const GAP_REL_TOL: f64 = 1e-10;
const ZERO_ENTRY_TOL: f64 = 1e-12;

/// Dominant-mode sufficient condition for diagonal stability of `−Δ + S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvdCondition {
    pub applicable: bool,
    pub satisfied: bool,
    /// The condition was evaluated on `Sᵀ` (left vector positive instead of right).
    pub transposed: bool,
    pub sigma1: f64,
    pub rho: f64,
    /// `σ₂`
    pub lhs: f64,
    /// `ρ·(1 − σ₁ Σᵢ [u₁ᵢ v₁ᵢ]₊ / δᵢ)`
    pub rhs: f64,
    /// Diagonal certificate for `−Δ + S` when satisfied.
    pub certificate_d: Option<Vec<f64>>,
    /// `λmax(AᵀD + DA)` for the attached certificate.
    pub certificate_max_eig: Option<f64>,
    pub reason: Option<String>,
}

struct Oriented {
    sigma1: f64,
    sigma2: f64,
    u1: Vec<f64>,
    v1: Vec<f64>,
}

fn dominant_mode(s: &Mat) -> Result<Result<Oriented, String>, DiagStabError> {
    let d = svd(s)?;
    let sigma1 = d.sigma[0];
    let sigma2 = d.sigma.get(1).copied().unwrap_or(0.0);
    if sigma1.is_nan() || sigma1 <= 0.0 || sigma1 - sigma2 <= GAP_REL_TOL * sigma1 {
        return Ok(Err("largest singular value is not strictly dominant".into()));
    }
    let mut u1 = d.left(0);
    let mut v1 = d.right(0);
    if v1.iter().sum::<f64>() < 0.0 {
        u1.iter_mut().for_each(|x| *x = -*x);
        v1.iter_mut().for_each(|x| *x = -*x);
    }
    if v1.iter().any(|&v| v <= ZERO_ENTRY_TOL) {
        return Ok(Err("dominant right singular vector is not positive".into()));
    }
    if u1.iter().any(|&u| u.abs() <= ZERO_ENTRY_TOL) {
        return Ok(Err("dominant left singular vector has a zero entry".into()));
    }
    Ok(Ok(Oriented {
        sigma1,
        sigma2,
        u1,
        v1,
    }))
}

/// Evaluates `σ₂ < ρ(1 − σ₁ Σᵢ [u₁ᵢv₁ᵢ]₊/δᵢ)` with
/// `ρ = minᵢ δᵢ(v₁ᵢ/|u₁ᵢ|) / maxᵢ(v₁ᵢ/|u₁ᵢ|)`.
///
/// If the dominant pair of `S` does not have the required sign structure the
/// transpose is tried instead (diagonal stability of `A` and `Aᵀ` coincide).
/// Inapplicability is reported in the result, not as an error.
pub fn svd_condition(delta: &[f64], s: &Mat) -> Result<SvdCondition, DiagStabError> {
    if !s.is_square() || s.rows() != delta.len() {
        return Err(DiagStabError::DimensionMismatch(format!(
            "S is {}x{} but delta has {} entries",
            s.rows(),
            s.cols(),
            delta.len()
        )));
    }
    if delta.is_empty() {
        return Err(DiagStabError::Empty);
    }
    if delta.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(DiagStabError::InvalidDelta);
    }

    let (mode, transposed) = match dominant_mode(s)? {
        Ok(m) => (m, false),
        Err(direct_reason) => match dominant_mode(&s.transpose())? {
            Ok(m) => (m, true),
            Err(_) => {
                return Ok(SvdCondition {
                    applicable: false,
                    satisfied: false,
                    transposed: false,
                    sigma1: f64::NAN,
                    rho: f64::NAN,
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    certificate_d: None,
                    certificate_max_eig: None,
                    reason: Some(direct_reason),
                })
            }
        },
    };

    let w: Vec<f64> = mode
        .v1
        .iter()
        .zip(&mode.u1)
        .map(|(v, u)| v / u.abs())
        .collect();
    let min_wd = w
        .iter()
        .zip(delta)
        .map(|(w, d)| w * d)
        .fold(f64::INFINITY, f64::min);
    let max_w = w.iter().copied().fold(0.0, f64::max);
    let rho = min_wd / max_w;
    let coupling: f64 = mode
        .u1
        .iter()
        .zip(&mode.v1)
        .zip(delta)
        .map(|((u, v), d)| (u * v).max(0.0) / d)
        .sum();
    let mu = 1.0 - mode.sigma1 * coupling;
    let rhs = rho * mu;
    let satisfied = mu > 0.0 && mode.sigma2 < rhs;

    let (certificate_d, certificate_max_eig) = if satisfied {
        // Rank-1 certificate on (σ₁u₁, v₁); inverted when working on Sᵀ.
        let d: Vec<f64> = w
            .iter()
            .map(|wi| {
                let di = wi / mode.sigma1;
                if transposed {
                    1.0 / di
                } else {
                    di
                }
            })
            .collect();
        let mut a = s.clone();
        for (i, di) in delta.iter().enumerate() {
            a[(i, i)] -= di;
        }
        let lmax = lyapunov_max_eig(&a, &d)?;
        (Some(d), Some(lmax))
    } else {
        (None, None)
    };

    Ok(SvdCondition {
        applicable: true,
        satisfied,
        transposed,
        sigma1: mode.sigma1,
        rho,
        lhs: mode.sigma2,
        rhs,
        certificate_d,
        certificate_max_eig,
        reason: None,
    })
}
