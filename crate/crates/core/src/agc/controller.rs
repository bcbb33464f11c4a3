use serde::Serialize;

use super::{AreaSpec, NetworkSpec};

/// Area control error from absolute measurements:
/// `ACEₖ = (NIₖ − NI*ₖ) + bₖ(fₖ − f*ₖ)`.
pub fn ace(net: &NetworkSpec, meas_f: &[f64], meas_ni: &[f64]) -> Vec<f64> {
    net.areas
        .iter()
        .zip(&net.sched_ni)
        .zip(meas_f.iter().zip(meas_ni))
        .map(|((a, ni_star), (f, ni))| (ni - ni_star) + a.bias_b * (f - a.sched_freq))
        .collect()
}

/// `ACEₖ = ΔNIₖ + bₖΔfₖ` from deviations.
pub fn ace_from_deviations(net: &NetworkSpec, df: &[f64], dni: &[f64]) -> Vec<f64> {
    net.areas
        .iter()
        .zip(df.iter().zip(dni))
        .map(|(a, (f, ni))| ni + a.bias_b * f)
        .collect()
}

/// `η̇ₖ = −ACEₖ / τₖ`
pub fn agc_rhs(net: &NetworkSpec, _eta: &[f64], ace: &[f64]) -> Vec<f64> {
    net.areas
        .iter()
        .zip(ace)
        .map(|(a, e)| -e / a.agc_tc)
        .collect()
}

/// Setpoints `uₖᵢ = sat(u*ₖᵢ + αₖᵢηₖ)` for AGC units, `u*ₖᵢ` otherwise.
pub fn allocate(area: &AreaSpec, eta_k: f64) -> Vec<f64> {
    area.generators
        .iter()
        .map(|g| {
            if g.in_agc {
                (g.base_setpoint + g.participation * eta_k).clamp(g.lower, g.upper)
            } else {
                g.base_setpoint
            }
        })
        .collect()
}

/// Total setpoint change `Σᵢ(uₖᵢ − u*ₖᵢ)` commanded by `ηₖ`.
pub fn area_setpoint_change(area: &AreaSpec, eta_k: f64) -> f64 {
    allocate(area, eta_k)
        .iter()
        .zip(&area.generators)
        .map(|(u, g)| u - g.base_setpoint)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaFeasibility {
    pub feasible: bool,
    pub load_dev: f64,
    pub capacity_lo: f64,
    pub capacity_hi: f64,
}

/// Whether each area's load step lies strictly inside its regulation capacity.
pub fn check_feasibility(net: &NetworkSpec) -> Vec<AreaFeasibility> {
    net.areas
        .iter()
        .map(|a| {
            let (lo, hi) = a.capacity();
            AreaFeasibility {
                feasible: lo < a.load_dev && a.load_dev < hi,
                load_dev: a.load_dev,
                capacity_lo: lo,
                capacity_hi: hi,
            }
        })
        .collect()
}
