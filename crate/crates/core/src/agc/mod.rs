//! Multi-area power system plant with decentralised AGC.
//!
//! Each area carries an aggregate swing equation, one first-order
//! turbine-governor per generator with droop, DC-linearised tie lines and
//! first-order measurement lags on frequency and net interchange. The plant
//! is linear for fixed setpoints; saturation in the AGC allocation is the
//! only nonlinearity of the closed loop.

mod controller;
mod plant;

pub use controller::{
    ace, ace_from_deviations, agc_rhs, allocate, area_setpoint_change, check_feasibility,
    AreaFeasibility,
};
pub(crate) use plant::plant_rhs_flat;
pub use plant::{
    net_interchange, plant_equilibrium, plant_rhs, plant_state_matrix, PlantState, StateLayout,
    SteadyState,
};

use crate::numerics::NumericsError;

/// Relative tolerance on participation sums and schedule balance.
const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgcError {
    #[error("invalid network: {0}")]
    InvalidSpec(String),
    #[error("tie-line graph is not connected")]
    Disconnected,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("steady-state network equations are singular (disconnected tie graph?)")]
    SingularNetwork,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    /// Droop `R` in Hz per pu.
    pub droop_r: f64,
    /// Turbine-governor time constant, seconds.
    pub turbine_tc: f64,
    /// Economic dispatch setpoint `u*`, pu.
    pub base_setpoint: f64,
    pub lower: f64,
    pub upper: f64,
    pub participation: f64,
    pub in_agc: bool,
}

impl GeneratorSpec {
    /// Setpoint offset range `(lower − u*, upper − u*)`.
    pub fn offset_range(&self) -> (f64, f64) {
        (
            self.lower - self.base_setpoint,
            self.upper - self.base_setpoint,
        )
    }

    /// Contributes to the AGC response (in AGC with nonzero participation).
    pub fn regulates(&self) -> bool {
        self.in_agc && self.participation > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaSpec {
    pub name: String,
    pub inertia_m: f64,
    /// Load damping `D`, pu per Hz.
    pub load_damping: f64,
    pub generators: Vec<GeneratorSpec>,
    /// Frequency bias `b`, pu per Hz.
    pub bias_b: f64,
    /// AGC integral time constant `τ`, seconds.
    pub agc_tc: f64,
    /// Scheduled frequency `f*`, Hz.
    pub sched_freq: f64,
    /// Net load step `ΔPᴸ`, pu.
    pub load_dev: f64,
}

impl AreaSpec {
    /// Frequency characteristic `β = D + Σᵢ 1/Rᵢ`.
    pub fn beta(&self) -> f64 {
        self.load_damping + self.generators.iter().map(|g| 1.0 / g.droop_r).sum::<f64>()
    }

    /// Closure of the regulation capacity set: `(Σ(u̲ − u*), Σ(ū − u*))`
    /// over regulating units.
    pub fn capacity(&self) -> (f64, f64) {
        self.generators
            .iter()
            .filter(|g| g.regulates())
            .map(GeneratorSpec::offset_range)
            .fold((0.0, 0.0), |(lo, hi), (l, h)| (lo + l, hi + h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TieLine {
    pub from: usize,
    pub to: usize,
    /// Synchronising coefficient, pu per rad.
    pub stiffness_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub areas: Vec<AreaSpec>,
    pub ties: Vec<TieLine>,
    /// Scheduled net interchange `NI*` per area, pu.
    pub sched_ni: Vec<f64>,
    /// Measurement filter time constant, seconds.
    pub meas_filter_tc: f64,
}

impl NetworkSpec {
    /// Merges parallel tie lines and validates.
    pub fn new(
        areas: Vec<AreaSpec>,
        ties: Vec<TieLine>,
        sched_ni: Vec<f64>,
        meas_filter_tc: f64,
    ) -> Result<Self, AgcError> {
        let mut net = Self {
            areas,
            ties: Vec::new(),
            sched_ni,
            meas_filter_tc,
        };
        for t in ties {
            let key = (t.from.min(t.to), t.from.max(t.to));
            match net
                .ties
                .iter_mut()
                .find(|e| (e.from.min(e.to), e.from.max(e.to)) == key)
            {
                Some(existing) => existing.stiffness_t += t.stiffness_t,
                None => net.ties.push(t),
            }
        }
        net.validate()?;
        Ok(net)
    }

    pub fn n_areas(&self) -> usize {
        self.areas.len()
    }

    pub fn n_generators(&self) -> usize {
        self.areas.iter().map(|a| a.generators.len()).sum()
    }

    /// Index of the first generator of each area in the flattened generator list.
    pub fn generator_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.areas.len() + 1);
        let mut acc = 0;
        for a in &self.areas {
            off.push(acc);
            acc += a.generators.len();
        }
        off.push(acc);
        off
    }

    pub fn betas(&self) -> Vec<f64> {
        self.areas.iter().map(AreaSpec::beta).collect()
    }

    pub fn load_devs(&self) -> Vec<f64> {
        self.areas.iter().map(|a| a.load_dev).collect()
    }

    /// Dispatch setpoints `u*` for every generator, flattened.
    pub fn base_setpoints(&self) -> Vec<f64> {
        self.areas
            .iter()
            .flat_map(|a| a.generators.iter().map(|g| g.base_setpoint))
            .collect()
    }

    /// Copy with every load step set to zero.
    pub fn without_disturbance(&self) -> Self {
        let mut net = self.clone();
        net.areas.iter_mut().for_each(|a| a.load_dev = 0.0);
        net
    }

    pub fn is_connected(&self) -> bool {
        let n = self.areas.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(k) = stack.pop() {
            for t in &self.ties {
                let other = if t.from == k {
                    t.to
                } else if t.to == k {
                    t.from
                } else {
                    continue;
                };
                if other < n && !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Smallest physical time constant of the plant (swing, turbine, filter).
    pub fn fastest_time_constant(&self) -> f64 {
        self.areas
            .iter()
            .flat_map(|a| {
                let swing = a.inertia_m / a.beta();
                std::iter::once(swing).chain(a.generators.iter().map(|g| g.turbine_tc))
            })
            .fold(self.meas_filter_tc, f64::min)
    }

    /// Largest physical time constant of the plant (swing, turbine, filter).
    pub fn slowest_time_constant(&self) -> f64 {
        self.areas
            .iter()
            .flat_map(|a| {
                let swing = a.inertia_m / a.beta();
                std::iter::once(swing).chain(a.generators.iter().map(|g| g.turbine_tc))
            })
            .fold(self.meas_filter_tc, f64::max)
    }

    pub fn validate(&self) -> Result<(), AgcError> {
        let bad = |msg: String| Err(AgcError::InvalidSpec(msg));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let n = self.areas.len();
        if n == 0 {
            return bad("at least one area is required".into());
        }
        if !pos(self.meas_filter_tc) {
            return bad("meas_filter_tc must be positive".into());
        }
        for (k, a) in self.areas.iter().enumerate() {
            if a.generators.is_empty() {
                return bad(format!("area {k} has no generators"));
            }
            if !pos(a.inertia_m) || !pos(a.load_damping) || !pos(a.bias_b) || !pos(a.agc_tc) {
                return bad(format!(
                    "area {k}: inertia, damping, bias and AGC time constant must be positive"
                ));
            }
            if !a.sched_freq.is_finite() || !a.load_dev.is_finite() {
                return bad(format!("area {k}: non-finite schedule or load step"));
            }
            let mut alpha_sum = 0.0;
            let mut any_agc = false;
            for (i, g) in a.generators.iter().enumerate() {
                if !pos(g.droop_r) || !pos(g.turbine_tc) {
                    return bad(format!(
                        "area {k} generator {i}: droop and turbine tc must be positive"
                    ));
                }
                if !(g.lower <= g.base_setpoint && g.base_setpoint <= g.upper)
                    || !g.lower.is_finite()
                    || !g.upper.is_finite()
                {
                    return bad(format!(
                        "area {k} generator {i}: need lower <= base <= upper"
                    ));
                }
                if !(g.participation.is_finite() && g.participation >= 0.0) {
                    return bad(format!(
                        "area {k} generator {i}: participation must be >= 0"
                    ));
                }
                if g.in_agc {
                    any_agc = true;
                    alpha_sum += g.participation;
                } else if g.participation != 0.0
                    || g.lower != g.base_setpoint
                    || g.upper != g.base_setpoint
                {
                    return bad(format!(
                        "area {k} generator {i}: units outside AGC need zero participation and lower = base = upper"
                    ));
                }
            }
            if any_agc && (alpha_sum - 1.0).abs() > SUM_TOL {
                return bad(format!(
                    "area {k}: AGC participations sum to {alpha_sum}, not 1"
                ));
            }
        }
        for t in &self.ties {
            if t.from >= n || t.to >= n || t.from == t.to {
                return bad(format!("tie {}-{} references invalid areas", t.from, t.to));
            }
            if !pos(t.stiffness_t) {
                return bad(format!("tie {}-{} needs positive stiffness", t.from, t.to));
            }
        }
        for (a, ta) in self.ties.iter().enumerate() {
            for tb in &self.ties[a + 1..] {
                if (ta.from.min(ta.to), ta.from.max(ta.to))
                    == (tb.from.min(tb.to), tb.from.max(tb.to))
                {
                    return bad(format!(
                        "parallel ties between {} and {} must be merged",
                        ta.from, ta.to
                    ));
                }
            }
        }
        if self.sched_ni.len() != n {
            return Err(AgcError::DimensionMismatch(format!(
                "{} net interchange schedules for {n} areas",
                self.sched_ni.len()
            )));
        }
        let total: f64 = self.sched_ni.iter().sum();
        let scale: f64 = self.sched_ni.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if !total.is_finite() || total.abs() > SUM_TOL * scale {
            return bad(format!("net interchange schedules sum to {total}, not 0"));
        }
        if !self.is_connected() {
            return Err(AgcError::Disconnected);
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::testnet::*;
    use super::*;

    #[test]
    fn parallel_ties_are_merged() {
        let net = NetworkSpec::new(
            vec![area(0.0, 1.0), area(0.0, 1.0)],
            vec![
                TieLine {
                    from: 0,
                    to: 1,
                    stiffness_t: 1.0,
                },
                TieLine {
                    from: 1,
                    to: 0,
                    stiffness_t: 0.5,
                },
            ],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        assert_eq!(net.ties.len(), 1);
        assert_eq!(net.ties[0].stiffness_t, 1.5);
    }

    #[test]
    fn disconnected_network_rejected() {
        let r = NetworkSpec::new(
            vec![area(0.0, 1.0), area(0.0, 1.0)],
            vec![],
            vec![0.0, 0.0],
            1.0,
        );
        assert_eq!(r, Err(AgcError::Disconnected));
    }

    #[test]
    fn schedules_must_balance() {
        let r = NetworkSpec::new(
            vec![area(0.0, 1.0), area(0.0, 1.0)],
            vec![TieLine {
                from: 0,
                to: 1,
                stiffness_t: 1.0,
            }],
            vec![0.1, 0.0],
            1.0,
        );
        assert!(matches!(r, Err(AgcError::InvalidSpec(_))));
    }

    #[test]
    fn participation_must_sum_to_one() {
        let mut a = area(0.0, 1.0);
        a.generators[0].participation = 0.5;
        let r = NetworkSpec::new(vec![a], vec![], vec![0.0], 1.0);
        assert!(matches!(r, Err(AgcError::InvalidSpec(_))));
    }

    #[test]
    fn non_agc_units_are_pinned() {
        let mut a = area(0.0, 1.0);
        a.generators.push(GeneratorSpec {
            in_agc: false,
            participation: 0.0,
            ..generator(0.0, -0.1, 0.1)
        });
        let r = NetworkSpec::new(vec![a], vec![], vec![0.0], 1.0);
        assert!(matches!(r, Err(AgcError::InvalidSpec(_))));
    }

    #[test]
    fn beta_and_capacity() {
        let a = area(0.0, 1.0);
        assert!((a.beta() - 41.0).abs() < 1e-12);
        assert_eq!(a.capacity(), (-2.0, 2.0));
    }
}
