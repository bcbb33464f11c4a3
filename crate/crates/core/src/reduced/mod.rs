//! Slow time-scale AGC dynamics `τ̃η̇ = B(φ(η) − ΔPᴸ)` with
//! `B = −I + (1/β)(β̄ − b)1ᵀ`, plus the tuning analytics built on it.

mod phi;
mod studies;

pub use phi::{PhiMap, PhiUnit};
pub use studies::{
    hinf_ii, margin_study, sensitivity, sensitivity_closed_form, sweep_peak, MarginStudy, SweepPeak,
};

use crate::agc::NetworkSpec;
use crate::diagstab::{certificate, check_rank1, lyapunov_max_eig, DiagStabReport, Rank1System};
use crate::numerics::{Mat, NumericsError};

/// Largest admissible `λmax(BᵀD + DB)` for a Lyapunov weight to be accepted.
const CERT_TOL: f64 = -1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReducedError {
    #[error("invalid reduced model: {0}")]
    InvalidModel(String),
    #[error("target {target} is outside the open capacity interval ({lo}, {hi})")]
    TargetInfeasible { target: f64, lo: f64, hi: f64 },
    #[error("area {area}: {source}")]
    AreaInfeasible {
        area: usize,
        #[source]
        source: Box<ReducedError>,
    },
    #[error("sensitivity study needs equal AGC time constants")]
    NonUniformTau,
    #[error("no diagonal Lyapunov weight found for B")]
    NoCertificate,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub beta_k: Vec<f64>,
    pub beta: f64,
    pub bias_b: Vec<f64>,
    /// `τₖ / minⱼ τⱼ`
    pub tau_tilde: Vec<f64>,
    /// `minⱼ τⱼ` in seconds; one unit of reduced time.
    pub tau_scale: f64,
    pub b_matrix: Mat,
    pub phi: Vec<PhiMap>,
    pub load_dev: Vec<f64>,
}

/// `−I + (1/β)(β̄ − b)1ᵀ`
pub fn coupling_matrix(beta_k: &[f64], bias_b: &[f64]) -> Mat {
    let beta: f64 = beta_k.iter().sum();
    let x: Vec<f64> = beta_k
        .iter()
        .zip(bias_b)
        .map(|(bk, b)| (bk - b) / beta)
        .collect();
    let mut m = Mat::outer(&x, &vec![1.0; x.len()]);
    for i in 0..x.len() {
        m[(i, i)] -= 1.0;
    }
    m
}

impl ReducedModel {
    /// Builds a model from raw parameters; `agc_tc` are the unnormalised
    /// time constants.
    pub fn from_parts(
        beta_k: Vec<f64>,
        bias_b: Vec<f64>,
        agc_tc: Vec<f64>,
        phi: Vec<PhiMap>,
        load_dev: Vec<f64>,
    ) -> Result<Self, ReducedError> {
        let n = beta_k.len();
        if n == 0 {
            return Err(ReducedError::InvalidModel(
                "at least one area is required".into(),
            ));
        }
        if [bias_b.len(), agc_tc.len(), phi.len(), load_dev.len()]
            .iter()
            .any(|&m| m != n)
        {
            return Err(ReducedError::InvalidModel(
                "per-area vectors differ in length".into(),
            ));
        }
        let positive = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x > 0.0);
        if !positive(&beta_k) || !positive(&bias_b) || !positive(&agc_tc) {
            return Err(ReducedError::InvalidModel(
                "beta, bias and time constants must be positive".into(),
            ));
        }
        if load_dev.iter().any(|v| !v.is_finite()) {
            return Err(ReducedError::InvalidModel("non-finite load step".into()));
        }
        let tau_scale = agc_tc.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            beta: beta_k.iter().sum(),
            b_matrix: coupling_matrix(&beta_k, &bias_b),
            tau_tilde: agc_tc.iter().map(|t| t / tau_scale).collect(),
            tau_scale,
            beta_k,
            bias_b,
            phi,
            load_dev,
        })
    }

    /// Unsaturated model (`φ = id`) with equal time constants `tau`.
    pub fn linear(beta_k: Vec<f64>, bias_b: Vec<f64>, tau: f64) -> Result<Self, ReducedError> {
        let n = beta_k.len();
        Self::from_parts(
            beta_k,
            bias_b,
            vec![tau; n],
            vec![PhiMap::identity(); n],
            vec![0.0; n],
        )
    }

    pub fn dim(&self) -> usize {
        self.beta_k.len()
    }

    /// `x = (β̄ − b)/β`, the rank-1 factor of `B + I`.
    pub fn coupling_vector(&self) -> Vec<f64> {
        self.beta_k
            .iter()
            .zip(&self.bias_b)
            .map(|(bk, b)| (bk - b) / self.beta)
            .collect()
    }

    pub fn rank1(&self) -> Rank1System {
        Rank1System::new(
            vec![1.0; self.dim()],
            self.coupling_vector(),
            vec![1.0; self.dim()],
        )
        .expect("model parameters are validated")
    }

    pub fn phi_eval(&self, k: usize, eta_k: f64) -> f64 {
        self.phi[k].eval(eta_k)
    }

    pub fn phi_invert(&self, k: usize, target: f64) -> Result<f64, ReducedError> {
        self.phi[k].invert(target)
    }

    pub fn phi_vec(&self, eta: &[f64]) -> Vec<f64> {
        self.phi.iter().zip(eta).map(|(p, e)| p.eval(*e)).collect()
    }

    /// `B(φ(η) − ΔPᴸ)`, i.e. minus the steady-state ACE.
    fn drive(&self, eta: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = self
            .phi_vec(eta)
            .iter()
            .zip(&self.load_dev)
            .map(|(p, l)| p - l)
            .collect();
        self.b_matrix.mul_vec(&z)
    }
}

/// Reduced model of a validated network.
pub fn build_reduced(net: &NetworkSpec) -> ReducedModel {
    ReducedModel::from_parts(
        net.betas(),
        net.areas.iter().map(|a| a.bias_b).collect(),
        net.areas.iter().map(|a| a.agc_tc).collect(),
        net.areas.iter().map(PhiMap::from_area).collect(),
        net.load_devs(),
    )
    .expect("validated network yields a valid reduced model")
}

/// `η̇ = τ̃⁻¹B(φ(η) − ΔPᴸ)` in reduced time units.
pub fn reduced_rhs(model: &ReducedModel, eta: &[f64]) -> Vec<f64> {
    model
        .drive(eta)
        .iter()
        .zip(&model.tau_tilde)
        .map(|(v, t)| v / t)
        .collect()
}

/// Rank-1 diagonal-stability verdict for `B` (`Δ = I`, `y = 1`).
pub fn reduced_is_stable(model: &ReducedModel) -> DiagStabReport {
    check_rank1(&model.rank1())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub eta_bar: Vec<f64>,
    pub preimage_intervals: Vec<(f64, f64)>,
}

/// Unique `η̄` with `φₖ(η̄ₖ) = ΔPᴸₖ` in every area.
pub fn equilibrium(model: &ReducedModel) -> Result<EquilibriumResult, ReducedError> {
    let eta_bar = model
        .phi
        .iter()
        .zip(&model.load_dev)
        .enumerate()
        .map(|(area, (p, &l))| {
            p.invert(l).map_err(|e| ReducedError::AreaInfeasible {
                area,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EquilibriumResult {
        eta_bar,
        preimage_intervals: model.phi.iter().map(PhiMap::preimage_interval).collect(),
    })
}

/// Diagonal `d` with `BᵀD + DB ≺ 0`. Tries the rank-1 certificate, then
/// `d = β/βₖ`, then a block-triangular weight that discounts the areas with
/// `bₖ ≠ βₖ` against the decoupled ones.
pub fn lyapunov_weights(model: &ReducedModel) -> Result<Vec<f64>, ReducedError> {
    let b = &model.b_matrix;
    let accept = |d: &[f64]| matches!(lyapunov_max_eig(b, d), Ok(l) if l < CERT_TOL);

    if let Ok(r) = certificate(&model.rank1()) {
        let d = r.certificate_d.expect("certificate attaches weights");
        if accept(&d) {
            return Ok(d);
        }
    }
    let d: Vec<f64> = model.beta_k.iter().map(|bk| model.beta / bk).collect();
    if accept(&d) {
        return Ok(d);
    }
    let x = model.coupling_vector();
    let mut eps = 1.0;
    for _ in 0..60 {
        let d: Vec<f64> = x
            .iter()
            .map(|&xi| if xi == 0.0 { 1.0 } else { eps / xi.abs() })
            .collect();
        if accept(&d) {
            return Ok(d);
        }
        eps *= 0.5;
    }
    Err(ReducedError::NoCertificate)
}

/// `V(η) = Σₖ dₖτ̃ₖ ∫_{η̄ₖ}^{ηₖ} (φₖ(ξ) − φₖ(η̄ₖ)) dξ` and its derivative
/// along the reduced vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovFn {
    pub weights: Vec<f64>,
    pub eta_bar: Vec<f64>,
}

impl LyapunovFn {
    pub fn new(model: &ReducedModel, weights: Vec<f64>) -> Result<Self, ReducedError> {
        if weights.len() != model.dim() || weights.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(ReducedError::InvalidModel(
                "Lyapunov weights must be positive".into(),
            ));
        }
        Ok(Self {
            weights,
            eta_bar: equilibrium(model)?.eta_bar,
        })
    }

    pub fn value(&self, model: &ReducedModel, eta: &[f64]) -> f64 {
        (0..model.dim())
            .map(|k| {
                self.weights[k]
                    * model.tau_tilde[k]
                    * model.phi[k].integral_from(self.eta_bar[k], eta[k])
            })
            .sum()
    }

    /// `(φ(η) − φ(η̄))ᵀ D B (φ(η) − ΔPᴸ)`
    pub fn decrease(&self, model: &ReducedModel, eta: &[f64]) -> f64 {
        let drive = model.drive(eta);
        (0..model.dim())
            .map(|k| {
                let dphi = model.phi[k].eval(eta[k]) - model.phi[k].eval(self.eta_bar[k]);
                dphi * self.weights[k] * drive[k]
            })
            .sum()
    }
}

pub fn lyapunov_v(model: &ReducedModel, d: &[f64], eta: &[f64]) -> Result<f64, ReducedError> {
    Ok(LyapunovFn::new(model, d.to_vec())?.value(model, eta))
}

pub fn lyapunov_decrease(
    model: &ReducedModel,
    d: &[f64],
    eta: &[f64],
) -> Result<f64, ReducedError> {
    Ok(LyapunovFn::new(model, d.to_vec())?.decrease(model, eta))
}

/// Steady-state deviations implied by setpoint changes `Δu` (per area).
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyDeviations {
    pub freq_dev: f64,
    pub ni_dev: Vec<f64>,
    pub ace: Vec<f64>,
}

/// `Δf = (1/β)Σ(Δuⱼ − ΔPᴸⱼ)`,
/// `ΔNIₖ = ((β − βₖ)/β)(Δuₖ − ΔPᴸₖ) − (βₖ/β)Σ_{j≠k}(Δuⱼ − ΔPᴸⱼ)` and
/// `ACEₖ = ΔNIₖ + bₖΔf`.
pub fn steady_deviations(model: &ReducedModel, du: &[f64]) -> SteadyDeviations {
    let imb: Vec<f64> = du.iter().zip(&model.load_dev).map(|(u, l)| u - l).collect();
    let total: f64 = imb.iter().sum();
    let freq_dev = total / model.beta;
    let ni_dev: Vec<f64> = model
        .beta_k
        .iter()
        .zip(&imb)
        .map(|(bk, e)| ((model.beta - bk) / model.beta) * e - (bk / model.beta) * (total - e))
        .collect();
    let ace = ni_dev
        .iter()
        .zip(&model.bias_b)
        .map(|(ni, b)| ni + b * freq_dev)
        .collect();
    SteadyDeviations {
        freq_dev,
        ni_dev,
        ace,
    }
}

/// `−B(φ(η) − ΔPᴸ)`
pub fn steady_ace(model: &ReducedModel, eta: &[f64]) -> Vec<f64> {
    model.drive(eta).into_iter().map(|v| -v).collect()
}
