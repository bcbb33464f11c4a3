//! Diagonal stability of `A = −Δ + x yᵀ` with `Δ ≻ 0` diagonal and `y ≥ 0`.
//!
//! `A` is diagonally stable exactly when `Σᵢ [xᵢyᵢ]₊ / δᵢ < 1`. When `x` has
//! no zero entries and `y > 0`, `D = diag(yᵢ/|xᵢ|)` is an explicit
//! certificate with `AᵀD + DA ⪯ −2µΔD`, where `µ = 1 − Σᵢ [xᵢyᵢ]₊ / δᵢ`.
//! The same certificate yields a robustness radius for `A + σE`, and a
//! dominant-singular-mode condition for general interconnections `−Δ + S`.

mod oracle;
mod perturb;
mod svd_cond;

pub use oracle::{oracle_diagstab, OracleResult, OracleVerdict};
pub use perturb::{perturbation_bound, PerturbedSystem};
pub use svd_cond::{svd_condition, SvdCondition};

use serde::Serialize;

use crate::numerics::{lyapunov_form, max_eig, Mat, NumericsError};

/// Values of the rank-1 condition within this distance of 1 are treated as
/// the (non-certifiable) boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagStabError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("system must have at least one state")]
    Empty,
    #[error("delta entries must be positive and finite")]
    InvalidDelta,
    #[error("y entries must be nonnegative and finite")]
    InvalidY,
    #[error("x entries must be finite")]
    InvalidX,
    #[error("certificate hypotheses violated: {0}")]
    HypothesisViolated(String),
    #[error("system is not diagonally stable (condition value {condition})")]
    NotDiagonallyStable { condition: f64 },
    #[error("perturbation direction has (numerically) zero norm")]
    DegenerateE,
    #[error("certificate check failed: slack {slack:e} exceeds tolerance {tol:e}")]
    CertificateCheckFailed { slack: f64, tol: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The matrix `−diag(delta) + x yᵀ`, kept in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1System {
    delta: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Rank1System {
    pub fn new(delta: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> Result<Self, DiagStabError> {
        if delta.is_empty() {
            return Err(DiagStabError::Empty);
        }
        if x.len() != delta.len() || y.len() != delta.len() {
            return Err(DiagStabError::DimensionMismatch(format!(
                "delta has {} entries, x has {}, y has {}",
                delta.len(),
                x.len(),
                y.len()
            )));
        }
        if delta.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(DiagStabError::InvalidDelta);
        }
        if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DiagStabError::InvalidY);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DiagStabError::InvalidX);
        }
        Ok(Self { delta, x, y })
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `x̂ = Δ⁻¹x`
    pub fn x_hat(&self) -> Vec<f64> {
        self.x.iter().zip(&self.delta).map(|(x, d)| x / d).collect()
    }

    pub fn matrix(&self) -> Mat {
        let mut a = Mat::outer(&self.x, &self.y);
        for (i, d) in self.delta.iter().enumerate() {
            a[(i, i)] -= d;
        }
        a
    }

    /// `Σᵢ [xᵢyᵢ]₊ / δᵢ`
    pub fn condition_value(&self) -> f64 {
        self.delta
            .iter()
            .zip(self.x.iter().zip(&self.y))
            .map(|(d, (x, y))| (x * y).max(0.0) / d)
            .sum()
    }

    /// `Σᵢ x̂ᵢyᵢ`; the matrix is Hurwitz iff this is below one.
    pub fn hurwitz_value(&self) -> f64 {
        self.delta
            .iter()
            .zip(self.x.iter().zip(&self.y))
            .map(|(d, (x, y))| x * y / d)
            .sum()
    }
}

/// Verdict, margin and (optionally) certificate for a rank-1 system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagStabReport {
    pub stable: bool,
    /// Condition value within [`BOUNDARY_TOL`] of one.
    pub boundary: bool,
    pub condition: f64,
    pub margin_mu: f64,
    pub certificate_d: Option<Vec<f64>>,
    /// `λmax(AᵀD + DA + 2µΔD)` for the attached certificate.
    pub slack: Option<f64>,
}

/// Necessary and sufficient rank-1 test; verdict and margin only.
pub fn check_rank1(sys: &Rank1System) -> DiagStabReport {
    let condition = sys.condition_value();
    DiagStabReport {
        stable: condition < 1.0 - BOUNDARY_TOL,
        boundary: (condition - 1.0).abs() <= BOUNDARY_TOL,
        condition,
        margin_mu: 1.0 - condition,
        certificate_d: None,
        slack: None,
    }
}

/// `dᵢ = yᵢ / |xᵢ|`, defined when every `xᵢ ≠ 0` and every `yᵢ > 0`.
pub fn certificate_weights(sys: &Rank1System) -> Result<Vec<f64>, DiagStabError> {
    if let Some(i) = sys.x.iter().position(|&x| x == 0.0) {
        return Err(DiagStabError::HypothesisViolated(format!("x[{i}] is zero")));
    }
    if let Some(i) = sys.y.iter().position(|&y| y <= 0.0) {
        return Err(DiagStabError::HypothesisViolated(format!(
            "y[{i}] is not positive"
        )));
    }
    Ok(sys.y.iter().zip(&sys.x).map(|(y, x)| y / x.abs()).collect())
}

/// Verdict plus the explicit diagonal certificate and its verified slack.
pub fn certificate(sys: &Rank1System) -> Result<DiagStabReport, DiagStabError> {
    let mut report = check_rank1(sys);
    let d = certificate_weights(sys)?;
    if !report.stable {
        return Err(DiagStabError::NotDiagonallyStable {
            condition: report.condition,
        });
    }
    let a = sys.matrix();
    let mut m = lyapunov_form(&a, &d);
    for i in 0..sys.dim() {
        m[(i, i)] += 2.0 * report.margin_mu * sys.delta[i] * d[i];
    }
    let slack = max_eig(&m)?;
    let tol = 1e-9 * a.norm_inf();
    if slack > tol {
        return Err(DiagStabError::CertificateCheckFailed { slack, tol });
    }
    report.certificate_d = Some(d);
    report.slack = Some(slack);
    Ok(report)
}

/// `λmax(AᵀD + DA)` for `D = diag(d)`.
pub fn lyapunov_max_eig(a: &Mat, d: &[f64]) -> Result<f64, NumericsError> {
    max_eig(&lyapunov_form(a, d))
}
