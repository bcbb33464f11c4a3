use super::{certificate, DiagStabError, Rank1System};
use crate::numerics::{spectral_norm, Mat};

/// Below this `‖E‖₂` the perturbation direction is considered zero.
const DEGENERATE_E_NORM: f64 = 1e-13;

/// `A = −Δ + xyᵀ + σE` with `E` as supplied by the caller (not normalised).
#[derive(Debug, Clone)]
pub struct PerturbedSystem {
    pub base: Rank1System,
    pub sigma: f64,
    pub e_matrix: Mat,
}

impl PerturbedSystem {
    pub fn new(base: Rank1System, sigma: f64, e_matrix: Mat) -> Result<Self, DiagStabError> {
        if !e_matrix.is_square() || e_matrix.rows() != base.dim() {
            return Err(DiagStabError::DimensionMismatch(format!(
                "E is {}x{} but the system has {} states",
                e_matrix.rows(),
                e_matrix.cols(),
                base.dim()
            )));
        }
        Ok(Self {
            base,
            sigma,
            e_matrix,
        })
    }

    pub fn matrix(&self) -> Mat {
        &self.base.matrix() + &self.e_matrix.scale(self.sigma)
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self {
            sigma,
            ..self.clone()
        }
    }
}

/// Largest `|σ|` for which `A₁ + σE` is guaranteed diagonally stable with
/// the rank-1 certificate `D` of `A₁`:
/// `σ_max = µ · minᵢ(dᵢδᵢ) / maxᵢ(dᵢ) / ‖E‖₂`.
pub fn perturbation_bound(psys: &PerturbedSystem) -> Result<f64, DiagStabError> {
    let e_norm = spectral_norm(&psys.e_matrix)?;
    if e_norm < DEGENERATE_E_NORM {
        return Err(DiagStabError::DegenerateE);
    }
    let report = certificate(&psys.base)?;
    let d = report.certificate_d.expect("certificate always attaches D");
    let min_dd = d
        .iter()
        .zip(psys.base.delta())
        .map(|(d, delta)| d * delta)
        .fold(f64::INFINITY, f64::min);
    let max_d = d.iter().copied().fold(0.0, f64::max);
    Ok(report.margin_mu * min_dd / max_d / e_norm)
}
