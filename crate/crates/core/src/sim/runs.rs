use log::{debug, warn};

use super::{integrate, step_count, OdeSystem, SimConfig, SimError, SimTrace};
use crate::agc::{
    allocate, check_feasibility, net_interchange, plant_rhs_flat, NetworkSpec, PlantState,
    StateLayout,
};
use crate::reduced::{reduced_rhs, steady_ace, ReducedModel};

/// Plant, AGC integrators and saturated allocation as one ODE.
#[derive(Debug, Clone)]
pub struct FullLoop<'a> {
    net: &'a NetworkSpec,
    layout: StateLayout,
}

impl<'a> FullLoop<'a> {
    pub fn new(net: &'a NetworkSpec) -> Self {
        Self {
            net,
            layout: StateLayout::of(net),
        }
    }

    /// Absolute generator setpoints commanded by the AGC states in `y`.
    pub fn setpoints(&self, y: &[f64]) -> Vec<f64> {
        self.net
            .areas
            .iter()
            .enumerate()
            .flat_map(|(k, a)| allocate(a, y[self.layout.eta(k)]))
            .collect()
    }

    /// ACE seen by the controller (filtered measurements, deviation form).
    pub fn measured_ace(&self, y: &[f64]) -> Vec<f64> {
        self.net
            .areas
            .iter()
            .enumerate()
            .map(|(k, a)| y[self.layout.meas_ni(k)] + a.bias_b * y[self.layout.meas_freq(k)])
            .collect()
    }
}

impl OdeSystem for FullLoop<'_> {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let u = self.setpoints(y);
        plant_rhs_flat(self.net, self.layout, y, &u, dy);
        for (k, (a, e)) in self.net.areas.iter().zip(self.measured_ace(y)).enumerate() {
            dy[self.layout.eta(k)] = -e / a.agc_tc;
        }
    }
}

/// Ten times the slowest plant time constant.
pub fn burn_in_time(net: &NetworkSpec) -> f64 {
    10.0 * net.slowest_time_constant()
}

fn full_columns(net: &NetworkSpec) -> Vec<String> {
    let n = net.n_areas();
    let mut names = Vec::new();
    for prefix in ["df", "dni", "ace", "eta", "du"] {
        names.extend((0..n).map(|k| format!("{prefix}_{k}")));
    }
    for prefix in ["u", "p"] {
        for (k, a) in net.areas.iter().enumerate() {
            names.extend((0..a.generators.len()).map(|i| format!("{prefix}_{k}_{i}")));
        }
    }
    names
}

/// Closed-loop simulation from `init` (deviation coordinates; `η` included).
/// Infeasible load steps are logged and simulated as is.
pub fn run_full(
    net: &NetworkSpec,
    cfg: &SimConfig,
    init: &PlantState,
) -> Result<SimTrace, SimError> {
    net.validate()?;
    cfg.validate_for(net)?;
    for (k, f) in check_feasibility(net).iter().enumerate() {
        if !f.feasible {
            warn!(
                "area {k}: load step {} outside regulation capacity ({}, {}); AGC will saturate",
                f.load_dev, f.capacity_lo, f.capacity_hi
            );
        }
    }
    let sys = FullLoop::new(net);
    let layout = sys.layout;
    let mut y = init.to_flat();
    if y.len() != layout.len() {
        return Err(crate::agc::AgcError::DimensionMismatch(
            "initial state does not match the network".into(),
        )
        .into());
    }
    let n = layout.n_areas;
    let base = net.base_setpoints();
    let mut trace = SimTrace::new(full_columns(net));
    let n_steps = step_count(cfg.dt, cfg.horizon);
    debug!("full simulation: {n_steps} steps of {} s", cfg.dt);
    let mut row = Vec::with_capacity(trace.names.len());
    integrate(&sys, &mut y, cfg.dt, n_steps, |k, t, y| {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFiniteState { time: t });
        }
        if k % cfg.record_stride != 0 && k != n_steps {
            return Ok(());
        }
        let angle = &y[layout.angle(0)..layout.angle(0) + n];
        let u = sys.setpoints(y);
        row.clear();
        row.extend((0..n).map(|k| y[layout.freq(k)]));
        row.extend(net_interchange(net, angle));
        row.extend(sys.measured_ace(y));
        row.extend((0..n).map(|k| y[layout.eta(k)]));
        let offsets = net.generator_offsets();
        row.extend((0..n).map(|k| {
            (offsets[k]..offsets[k + 1])
                .map(|g| u[g] - base[g])
                .sum::<f64>()
        }));
        row.extend_from_slice(&u);
        row.extend((0..layout.n_gens).map(|g| y[layout.power(g)]));
        trace.push(t, &row);
        Ok(())
    })?;
    Ok(trace)
}

/// Reduced AGC model integrated in seconds: `η̇ = B(φ(η) − ΔPᴸ) / τₖ`.
#[derive(Debug, Clone)]
pub struct ReducedLoop<'a> {
    model: &'a ReducedModel,
}

impl<'a> ReducedLoop<'a> {
    pub fn new(model: &'a ReducedModel) -> Self {
        Self { model }
    }
}

impl OdeSystem for ReducedLoop<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        for (d, r) in dy.iter_mut().zip(reduced_rhs(self.model, y)) {
            *d = r / self.model.tau_scale;
        }
    }
}

/// Reduced simulation recording `eta_k`, `phi_k` and the implied `ace_k`.
pub fn run_reduced(
    model: &ReducedModel,
    cfg: &SimConfig,
    eta0: &[f64],
) -> Result<SimTrace, SimError> {
    cfg.validate()?;
    let n = model.dim();
    if eta0.len() != n {
        return Err(crate::agc::AgcError::DimensionMismatch(format!(
            "{} initial AGC states for {n} areas",
            eta0.len()
        ))
        .into());
    }
    let mut names = Vec::new();
    for prefix in ["eta", "phi", "ace"] {
        names.extend((0..n).map(|k| format!("{prefix}_{k}")));
    }
    let mut trace = SimTrace::new(names);
    let sys = ReducedLoop::new(model);
    let mut y = eta0.to_vec();
    let n_steps = step_count(cfg.dt, cfg.horizon);
    let mut row = Vec::with_capacity(3 * n);
    integrate(&sys, &mut y, cfg.dt, n_steps, |k, t, y| {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFiniteState { time: t });
        }
        if k % cfg.record_stride != 0 && k != n_steps {
            return Ok(());
        }
        row.clear();
        row.extend_from_slice(y);
        row.extend(model.phi_vec(y));
        row.extend(steady_ace(model, y));
        trace.push(t, &row);
        Ok(())
    })?;
    Ok(trace)
}
