use num_complex::Complex64;

use super::{ReducedError, ReducedModel};
use crate::numerics::{complex_solve, sym_eig, CMat, Mat};

const UNIFORM_TAU_TOL: f64 = 1e-12;
/// Sweep resolution and span (decades either side of `1/τ′`).
const POINTS_PER_DECADE: usize = 400;
const SWEEP_DECADES: i32 = 4;
const GOLDEN_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct MarginStudy {
    pub kappa: f64,
    /// `Q = β·diag(1/βₖ) − (1 − κ)11ᵀ`
    pub q: Mat,
    pub q_min_eig: f64,
    /// `(β / minₖ βₖ)·min(κ, 1)`, reported for comparison only.
    pub printed_bound: f64,
}

/// Smallest eigenvalue of the decrease matrix for uniform biasing `b = κβ̄`
/// with weights `dₖ = β/βₖ`.
pub fn margin_study(model: &ReducedModel, kappa: f64) -> Result<MarginStudy, ReducedError> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(ReducedError::InvalidModel("kappa must be positive".into()));
    }
    let n = model.dim();
    let mut q = Mat::outer(&vec![1.0; n], &vec![1.0; n]).scale(kappa - 1.0);
    for (k, bk) in model.beta_k.iter().enumerate() {
        q[(k, k)] += model.beta / bk;
    }
    let q_min_eig = sym_eig(&q)?.min();
    let min_beta = model.beta_k.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MarginStudy {
        kappa,
        q,
        q_min_eig,
        printed_bound: model.beta / min_beta * kappa.min(1.0),
    })
}

/// Common time constant `τ′` in seconds.
fn uniform_tau(model: &ReducedModel) -> Result<f64, ReducedError> {
    let t0 = model.tau_tilde[0];
    if model
        .tau_tilde
        .iter()
        .any(|t| (t - t0).abs() > UNIFORM_TAU_TOL * t0)
    {
        return Err(ReducedError::NonUniformTau);
    }
    Ok(model.tau_scale * t0)
}

fn check_index(model: &ReducedModel, i: usize) -> Result<(), ReducedError> {
    if i < model.dim() {
        Ok(())
    } else {
        Err(ReducedError::InvalidModel(format!(
            "area index {i} out of range for {} areas",
            model.dim()
        )))
    }
}

/// `Sᵢⱼ(jω) = eᵢᵀ·τ′s·(τ′sI − B)⁻¹·B·eⱼ` from a complex linear solve
/// (saturation ignored, `ω` in rad/s).
pub fn sensitivity(
    model: &ReducedModel,
    i: usize,
    j: usize,
    omega: f64,
) -> Result<Complex64, ReducedError> {
    check_index(model, i)?;
    check_index(model, j)?;
    let tau = uniform_tau(model)?;
    let p = Complex64::new(0.0, omega * tau);
    let m = CMat::shifted(p, -1.0, &model.b_matrix)?;
    let rhs: Vec<Complex64> = model
        .b_matrix
        .column(j)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    Ok(p * complex_solve(&m, &rhs)?[i])
}

/// `Sᵢⱼ = −(p/(p+1))·[δᵢⱼ − ((βᵢ − bᵢ)/β)·p/(p + Σb/β)]` with `p = jωτ′`.
pub fn sensitivity_closed_form(
    model: &ReducedModel,
    i: usize,
    j: usize,
    omega: f64,
) -> Result<Complex64, ReducedError> {
    check_index(model, i)?;
    check_index(model, j)?;
    let tau = uniform_tau(model)?;
    let p = Complex64::new(0.0, omega * tau);
    let xi = (model.beta_k[i] - model.bias_b[i]) / model.beta;
    let sb = model.bias_b.iter().sum::<f64>() / model.beta;
    let kron = if i == j { 1.0 } else { 0.0 };
    Ok(-(p / (p + 1.0)) * (kron - xi * p / (p + sb)))
}

/// Peak gain `|1 − (βᵢ − bᵢ)/β|` of the diagonal sensitivity as given by the
/// closed-form expression; holds when no other area dominates the bias sum.
pub fn hinf_ii(model: &ReducedModel, i: usize) -> Result<f64, ReducedError> {
    check_index(model, i)?;
    uniform_tau(model)?;
    Ok((1.0 - (model.beta_k[i] - model.bias_b[i]) / model.beta).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPeak {
    pub peak: f64,
    pub omega: f64,
}

/// Largest `|Sᵢⱼ(jω)|` over `ω ∈ [1e-4, 1e4]/τ′`: log grid, then
/// golden-section refinement around the best grid point.
pub fn sweep_peak(model: &ReducedModel, i: usize, j: usize) -> Result<SweepPeak, ReducedError> {
    let tau = uniform_tau(model)?;
    let gain = |log_w: f64| -> Result<f64, ReducedError> {
        Ok(sensitivity(model, i, j, 10f64.powf(log_w) / tau)?.norm())
    };
    let n_pts = 2 * SWEEP_DECADES as usize * POINTS_PER_DECADE + 1;
    let step = 1.0 / POINTS_PER_DECADE as f64;
    let lo = -(SWEEP_DECADES as f64);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for k in 0..n_pts {
        let g = gain(lo + k as f64 * step)?;
        if g > best.0 {
            best = (g, k);
        }
    }
    let mut a = lo + best.1.saturating_sub(1) as f64 * step;
    let mut b = lo + (best.1 + 1).min(n_pts - 1) as f64 * step;
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (gain(c)?, gain(d)?);
    for _ in 0..GOLDEN_ITERS {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = gain(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = gain(d)?;
        }
    }
    let (g_ref, w_ref) = if gc > gd { (gc, c) } else { (gd, d) };
    let (peak, log_w) = if g_ref >= best.0 {
        (g_ref, w_ref)
    } else {
        (best.0, lo + best.1 as f64 * step)
    };
    Ok(SweepPeak {
        peak,
        omega: 10f64.powf(log_w) / tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::PhiMap;

    fn lin(beta: &[f64], b: &[f64], tau: f64) -> ReducedModel {
        ReducedModel::linear(beta.to_vec(), b.to_vec(), tau).unwrap()
    }

    #[test]
    fn margin_single_area_and_symmetric_pair() {
        for kappa in [0.2, 0.5, 1.0] {
            let s = margin_study(&lin(&[3.0], &[3.0 * kappa], 1.0), kappa).unwrap();
            assert!((s.q_min_eig - kappa).abs() < 1e-14);
        }
        let s = margin_study(&lin(&[1.0, 1.0], &[0.5, 0.5], 1.0), 0.5).unwrap();
        assert!((s.q[(0, 0)] - 1.5).abs() < 1e-15 && (s.q[(0, 1)] + 0.5).abs() < 1e-15);
        assert!((s.q_min_eig - 1.0).abs() < 1e-13);
    }

    #[test]
    fn printed_bound_fails_for_heterogeneous_areas() {
        let s = margin_study(&lin(&[1.0, 3.0], &[0.5, 1.5], 1.0), 0.5).unwrap();
        assert!((s.q_min_eig - 0.7426).abs() < 1e-3);
        assert_eq!(s.printed_bound, 2.0);
        assert!(s.q_min_eig < s.printed_bound);
    }

    #[test]
    fn dc_zero_and_agreement() {
        let m = lin(&[1.0, 1.0, 2.0], &[2.0, 1.0, 2.0], 40.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(sensitivity(&m, i, j, 0.0).unwrap().norm(), 0.0);
                for w in [1e-4, 3e-3, 0.025, 1.0, 50.0] {
                    let a = sensitivity(&m, i, j, w).unwrap();
                    let b = sensitivity_closed_form(&m, i, j, w).unwrap();
                    assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-300), "{i}{j} {w}");
                }
            }
        }
    }

    #[test]
    fn worked_example_peak() {
        let m = lin(&[1.0, 1.0, 2.0], &[2.0, 1.0, 2.0], 40.0);
        assert!((hinf_ii(&m, 0).unwrap() - 1.25).abs() < 1e-15);
        let p = sweep_peak(&m, 0, 0).unwrap();
        assert!((p.peak - 1.25).abs() < 0.0125);
    }

    #[test]
    fn flat_bias_peak_is_one() {
        let m = lin(&[2.0, 3.0], &[2.0, 3.0], 10.0);
        assert_eq!(hinf_ii(&m, 1).unwrap(), 1.0);
        assert!((sweep_peak(&m, 1, 1).unwrap().peak - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_peak_is_not_universal() {
        // Area 0 underbiased, area 1 heavily overbiased.
        let m = lin(&[1.0, 1.0], &[0.5, 10.0], 1.0);
        let formula = hinf_ii(&m, 0).unwrap();
        let swept = sweep_peak(&m, 0, 0).unwrap();
        assert!((formula - 0.75).abs() < 1e-15);
        assert!(swept.peak > 0.89 && swept.peak < 0.9);
    }

    #[test]
    fn non_uniform_tau_rejected() {
        let m = ReducedModel::from_parts(
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![30.0, 60.0],
            vec![PhiMap::identity(); 2],
            vec![0.0; 2],
        )
        .unwrap();
        assert_eq!(sensitivity(&m, 0, 0, 1.0), Err(ReducedError::NonUniformTau));
        assert_eq!(hinf_ii(&m, 0), Err(ReducedError::NonUniformTau));
    }
}
