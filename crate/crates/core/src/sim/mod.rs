//! Fixed-step simulation of the full closed loop and of the reduced AGC
//! model, plus trace comparison.

mod rk4;
mod runs;
mod trace;

pub use rk4::{integrate, step_count, OdeSystem, Rk4};
pub use runs::{burn_in_time, run_full, run_reduced, FullLoop, ReducedLoop};
pub use trace::{compare_traces, SimTrace, TraceGap};

use crate::agc::{AgcError, NetworkSpec};
use crate::reduced::ReducedError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("state became non-finite at t = {time} s")]
    NonFiniteState { time: f64 },
    #[error("traces have no overlapping time range")]
    EmptyOverlap,
    #[error("unknown trace column {0:?}")]
    UnknownColumn(String),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Agc(#[from] AgcError),
    #[error(transparent)]
    Reduced(#[from] ReducedError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Step size, seconds.
    pub dt: f64,
    /// Final time, seconds.
    pub horizon: f64,
    /// Record every `record_stride`-th step (and the final one).
    pub record_stride: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 2000.0,
            record_stride: 100,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::InvalidConfig("dt must be positive".into()));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(SimError::InvalidConfig(
                "horizon must be at least dt".into(),
            ));
        }
        if self.record_stride == 0 {
            return Err(SimError::InvalidConfig(
                "record_stride must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Also requires `dt ≤ 0.1 ×` the fastest plant time constant.
    pub fn validate_for(&self, net: &NetworkSpec) -> Result<(), SimError> {
        self.validate()?;
        let limit = 0.1 * net.fastest_time_constant();
        if self.dt > limit {
            return Err(SimError::InvalidConfig(format!(
                "dt = {} exceeds 0.1 x fastest plant time constant ({limit})",
                self.dt
            )));
        }
        Ok(())
    }
}
