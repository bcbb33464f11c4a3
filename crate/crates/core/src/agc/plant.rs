use std::f64::consts::TAU;

use super::{AgcError, NetworkSpec};
use crate::numerics::{solve, Mat, NumericsError};

/// Offsets of each block in the flat state vector
/// `[Δf (N) | θ (N) | p (G) | filtered Δf (N) | filtered ΔNI (N) | η (N)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n_areas: usize,
    pub n_gens: usize,
}

impl StateLayout {
    pub fn of(net: &NetworkSpec) -> Self {
        Self {
            n_areas: net.n_areas(),
            n_gens: net.n_generators(),
        }
    }

    pub fn freq(&self, k: usize) -> usize {
        k
    }

    pub fn angle(&self, k: usize) -> usize {
        self.n_areas + k
    }

    pub fn power(&self, g: usize) -> usize {
        2 * self.n_areas + g
    }

    pub fn meas_freq(&self, k: usize) -> usize {
        2 * self.n_areas + self.n_gens + k
    }

    pub fn meas_ni(&self, k: usize) -> usize {
        3 * self.n_areas + self.n_gens + k
    }

    pub fn eta(&self, k: usize) -> usize {
        4 * self.n_areas + self.n_gens + k
    }

    /// Length of the plant part (everything except η).
    pub fn plant_len(&self) -> usize {
        4 * self.n_areas + self.n_gens
    }

    pub fn len(&self) -> usize {
        5 * self.n_areas + self.n_gens
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Plant states that evolve: all but the grounded angle of area 0.
    pub fn dynamic_plant_indices(&self) -> Vec<usize> {
        (0..self.plant_len())
            .filter(|&i| i != self.angle(0))
            .collect()
    }
}

/// Closed-loop state. Angles are relative to area 0 and `p` stores the
/// deviation of mechanical power from the dispatch setpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub freq_dev: Vec<f64>,
    pub angle: Vec<f64>,
    pub mech_power: Vec<f64>,
    pub meas_freq: Vec<f64>,
    pub meas_ni: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PlantState {
    pub fn zeros(net: &NetworkSpec) -> Self {
        let n = net.n_areas();
        Self {
            freq_dev: vec![0.0; n],
            angle: vec![0.0; n],
            mech_power: vec![0.0; net.n_generators()],
            meas_freq: vec![0.0; n],
            meas_ni: vec![0.0; n],
            eta: vec![0.0; n],
        }
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout {
            n_areas: self.freq_dev.len(),
            n_gens: self.mech_power.len(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.layout().len());
        v.extend_from_slice(&self.freq_dev);
        v.extend_from_slice(&self.angle);
        v.extend_from_slice(&self.mech_power);
        v.extend_from_slice(&self.meas_freq);
        v.extend_from_slice(&self.meas_ni);
        v.extend_from_slice(&self.eta);
        v
    }

    pub fn from_flat(layout: StateLayout, v: &[f64]) -> Result<Self, AgcError> {
        if v.len() != layout.len() {
            return Err(AgcError::DimensionMismatch(format!(
                "state vector has {} entries, expected {}",
                v.len(),
                layout.len()
            )));
        }
        let n = layout.n_areas;
        let g = layout.n_gens;
        let mut it = v.iter().copied();
        let mut take = |m: usize| it.by_ref().take(m).collect::<Vec<_>>();
        Ok(Self {
            freq_dev: take(n),
            angle: take(n),
            mech_power: take(g),
            meas_freq: take(n),
            meas_ni: take(n),
            eta: take(n),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    fn check(&self, net: &NetworkSpec) -> Result<(), AgcError> {
        let want = StateLayout::of(net);
        let n = want.n_areas;
        let dims_ok = self.freq_dev.len() == n
            && self.angle.len() == n
            && self.mech_power.len() == want.n_gens
            && self.meas_freq.len() == n
            && self.meas_ni.len() == n
            && self.eta.len() == n;
        if dims_ok {
            Ok(())
        } else {
            Err(AgcError::DimensionMismatch(format!(
                "state does not match a network with {n} areas and {} generators",
                want.n_gens
            )))
        }
    }
}

/// Net interchange deviation per area, `ΔNIₖ = Σⱼ Tₖⱼ(θₖ − θⱼ)` (export positive).
pub fn net_interchange(net: &NetworkSpec, angle: &[f64]) -> Vec<f64> {
    let mut ni = vec![0.0; net.n_areas()];
    for t in &net.ties {
        let flow = t.stiffness_t * (angle[t.from] - angle[t.to]);
        ni[t.from] += flow;
        ni[t.to] -= flow;
    }
    ni
}

/// Writes the derivative of the plant part of a flat state (η untouched).
pub(crate) fn plant_rhs_flat(
    net: &NetworkSpec,
    layout: StateLayout,
    y: &[f64],
    u: &[f64],
    dy: &mut [f64],
) {
    let n = layout.n_areas;
    let angle = &y[layout.angle(0)..layout.angle(0) + n];
    let ni = net_interchange(net, angle);
    let f0 = y[layout.freq(0)];
    let mut g = 0;
    for (k, area) in net.areas.iter().enumerate() {
        let df = y[layout.freq(k)];
        let mut p_sum = 0.0;
        for gen in &area.generators {
            let p = y[layout.power(g)];
            p_sum += p;
            dy[layout.power(g)] =
                (-p + (u[g] - gen.base_setpoint) - df / gen.droop_r) / gen.turbine_tc;
            g += 1;
        }
        dy[layout.freq(k)] =
            (p_sum - area.load_damping * df - ni[k] - area.load_dev) / area.inertia_m;
        dy[layout.angle(k)] = if k == 0 { 0.0 } else { TAU * (df - f0) };
        dy[layout.meas_freq(k)] = (df - y[layout.meas_freq(k)]) / net.meas_filter_tc;
        dy[layout.meas_ni(k)] = (ni[k] - y[layout.meas_ni(k)]) / net.meas_filter_tc;
    }
}

/// Plant vector field for fixed absolute setpoints `u` (one per generator).
/// The returned η-derivative is zero; see [`super::agc_rhs`].
pub fn plant_rhs(net: &NetworkSpec, state: &PlantState, u: &[f64]) -> Result<PlantState, AgcError> {
    state.check(net)?;
    let layout = StateLayout::of(net);
    if u.len() != layout.n_gens {
        return Err(AgcError::DimensionMismatch(format!(
            "{} setpoints for {} generators",
            u.len(),
            layout.n_gens
        )));
    }
    let y = state.to_flat();
    let mut dy = vec![0.0; layout.len()];
    plant_rhs_flat(net, layout, &y, u, &mut dy);
    PlantState::from_flat(layout, &dy)
}

/// State matrix of the plant for fixed setpoints, over
/// [`StateLayout::dynamic_plant_indices`] (returned alongside).
pub fn plant_state_matrix(net: &NetworkSpec) -> (Mat, Vec<usize>) {
    let layout = StateLayout::of(net);
    let idx = layout.dynamic_plant_indices();
    let quiet = net.without_disturbance();
    let u = net.base_setpoints();
    let mut a = Mat::zeros(idx.len(), idx.len());
    let mut y = vec![0.0; layout.len()];
    let mut dy = vec![0.0; layout.len()];
    for (c, &j) in idx.iter().enumerate() {
        y[j] = 1.0;
        plant_rhs_flat(&quiet, layout, &y, &u, &mut dy);
        y[j] = 0.0;
        for (r, &i) in idx.iter().enumerate() {
            a[(r, c)] = dy[i];
        }
    }
    (a, idx)
}

/// Steady state of the plant for fixed setpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub freq_dev: Vec<f64>,
    pub angle: Vec<f64>,
    pub mech_power: Vec<f64>,
    pub ni_dev: Vec<f64>,
}

impl SteadyState {
    /// Full state at this equilibrium with settled filters and the given η.
    pub fn to_plant_state(&self, eta: Vec<f64>) -> PlantState {
        PlantState {
            freq_dev: self.freq_dev.clone(),
            angle: self.angle.clone(),
            mech_power: self.mech_power.clone(),
            meas_freq: self.freq_dev.clone(),
            meas_ni: self.ni_dev.clone(),
            eta,
        }
    }
}

/// Solves the linear steady-state equations of the plant for absolute setpoints `u`.
pub fn plant_equilibrium(net: &NetworkSpec, u: &[f64]) -> Result<SteadyState, AgcError> {
    let layout = StateLayout::of(net);
    if u.len() != layout.n_gens {
        return Err(AgcError::DimensionMismatch(format!(
            "{} setpoints for {} generators",
            u.len(),
            layout.n_gens
        )));
    }
    let n = layout.n_areas;
    // Frequencies, free angles and powers; the filters settle trivially.
    let unknowns: Vec<usize> = (0..n)
        .map(|k| layout.freq(k))
        .chain((1..n).map(|k| layout.angle(k)))
        .chain((0..layout.n_gens).map(|g| layout.power(g)))
        .collect();
    let (a_full, idx) = plant_state_matrix(net);
    let pos = |i: usize| idx.iter().position(|&j| j == i).expect("dynamic index");
    let sel: Vec<usize> = unknowns.iter().map(|&i| pos(i)).collect();
    let a = a_full.principal_submatrix(&sel);

    let mut c = vec![0.0; layout.len()];
    plant_rhs_flat(net, layout, &vec![0.0; layout.len()], u, &mut c);
    let rhs: Vec<f64> = unknowns.iter().map(|&i| -c[i]).collect();
    let z = solve(&a, &rhs).map_err(|e| match e {
        NumericsError::Singular => AgcError::SingularNetwork,
        other => other.into(),
    })?;

    let mut angle = vec![0.0; n];
    angle[1..].copy_from_slice(&z[n..2 * n - 1]);
    let ni_dev = net_interchange(net, &angle);
    Ok(SteadyState {
        freq_dev: z[..n].to_vec(),
        angle,
        mech_power: z[2 * n - 1..].to_vec(),
        ni_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testnet::*;
    use super::super::{AreaSpec, TieLine};
    use super::*;
    use crate::numerics::is_hurwitz;

    #[test]
    fn origin_is_an_equilibrium() {
        let net = chain(&[0.0, 0.0, 0.0]);
        let d = plant_rhs(&net, &PlantState::zeros(&net), &net.base_setpoints()).unwrap();
        assert!(d.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_area_step() {
        let net = chain(&[0.1]);
        let ss = plant_equilibrium(&net, &net.base_setpoints()).unwrap();
        assert!((ss.freq_dev[0] + 0.1 / 41.0).abs() < 1e-14);
    }

    #[test]
    fn two_identical_areas_share_the_step() {
        let net = chain(&[0.1, 0.0]);
        let ss = plant_equilibrium(&net, &net.base_setpoints()).unwrap();
        assert!((ss.ni_dev[0] + 0.05).abs() < 1e-12);
        assert!((ss.ni_dev[1] - 0.05).abs() < 1e-12);
        assert!((ss.freq_dev[0] - ss.freq_dev[1]).abs() < 1e-12);
    }

    #[test]
    fn matching_setpoints_cancel_the_disturbance() {
        let net = chain(&[0.1, -0.05, 0.02]);
        let mut u = net.base_setpoints();
        // Two units per area; push the first unit of each area by ΔPᴸₖ.
        for (k, a) in net.areas.iter().enumerate() {
            u[2 * k] += a.load_dev;
        }
        let ss = plant_equilibrium(&net, &u).unwrap();
        assert!(ss.freq_dev.iter().all(|f| f.abs() < 1e-12));
        assert!(ss.ni_dev.iter().all(|f| f.abs() < 1e-12));
    }

    #[test]
    fn wrong_dimensions() {
        let net = chain(&[0.0, 0.0]);
        assert!(plant_equilibrium(&net, &[0.0]).is_err());
        let mut s = PlantState::zeros(&net);
        s.eta.pop();
        assert!(plant_rhs(&net, &s, &net.base_setpoints()).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let net = chain(&[0.0, 0.0]);
        let mut s = PlantState::zeros(&net);
        s.mech_power[3] = 0.7;
        s.eta[1] = -2.0;
        let back = PlantState::from_flat(s.layout(), &s.to_flat()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn plant_is_hurwitz() {
        let net = chain(&[0.1, 0.0, -0.2]);
        let (a, _) = plant_state_matrix(&net);
        assert!(is_hurwitz(&a).unwrap().hurwitz);
    }

    #[test]
    fn meshed_network_is_hurwitz() {
        let areas: Vec<AreaSpec> = (0..4).map(|_| area(0.0, 10.0)).collect();
        let ties = vec![
            TieLine {
                from: 0,
                to: 1,
                stiffness_t: 1.0,
            },
            TieLine {
                from: 1,
                to: 2,
                stiffness_t: 0.5,
            },
            TieLine {
                from: 2,
                to: 0,
                stiffness_t: 3.0,
            },
            TieLine {
                from: 2,
                to: 3,
                stiffness_t: 0.2,
            },
        ];
        let net = NetworkSpec::new(areas, ties, vec![0.0; 4], 1.0).unwrap();
        let (a, _) = plant_state_matrix(&net);
        assert!(is_hurwitz(&a).unwrap().hurwitz);
    }
}
