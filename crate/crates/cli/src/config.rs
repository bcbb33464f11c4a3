//! JSON documents accepted by the command line.
//!
//! A network document has the top-level keys `areas`, `ties`, `schedules`,
//! `sim` and `studies`; only `areas` is required. Unknown keys anywhere are
//! rejected. Omitted plant parameters take these defaults: inertia 10,
//! load damping 1, turbine time constant 0.5 s, droop 0.05 times the number
//! of units in the area, measurement filter 1 s, bias equal to the area's
//! frequency characteristic.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rank1_agc::agc::{AreaSpec, GeneratorSpec, NetworkSpec, TieLine};
use rank1_agc::numerics::Mat;
use rank1_agc::sim::SimConfig;

use crate::CliError;

const DEFAULT_INERTIA: f64 = 10.0;
const DEFAULT_DAMPING: f64 = 1.0;
const DEFAULT_TURBINE_TC: f64 = 0.5;
const DEFAULT_DROOP_PER_UNIT: f64 = 0.05;
const DEFAULT_FILTER_TC: f64 = 1.0;
const DEFAULT_SCHED_FREQ: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub areas: Vec<AreaDoc>,
    #[serde(default)]
    pub ties: Vec<TieDoc>,
    #[serde(default)]
    pub schedules: SchedulesDoc,
    #[serde(default)]
    pub sim: SimDoc,
    #[serde(default)]
    pub studies: StudiesDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaDoc {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_b: Option<f64>,
    /// AGC integral time constant, seconds.
    pub agc_tc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sched_freq: Option<f64>,
    /// Load step applied at t = 0, pu.
    #[serde(default)]
    pub load_dev: f64,
    pub generators: Vec<GeneratorDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub droop_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turbine_tc: Option<f64>,
    #[serde(default)]
    pub base_setpoint: f64,
    pub lower: f64,
    pub upper: f64,
    /// Defaults to an equal share among the area's AGC units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participation: Option<f64>,
    #[serde(default = "yes")]
    pub in_agc: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TieDoc {
    pub from: usize,
    pub to: usize,
    pub stiffness_t: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulesDoc {
    /// Scheduled net interchange per area; zeros when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net_interchange: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimDoc {
    pub dt: f64,
    pub horizon: f64,
    pub record_stride: usize,
    pub meas_filter_tc: f64,
    /// Reduced-model step in seconds; `0.1·min τ` when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_dt: Option<f64>,
}

impl Default for SimDoc {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            horizon: d.horizon,
            record_stride: d.record_stride,
            meas_filter_tc: DEFAULT_FILTER_TC,
            reduced_dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudiesDoc {
    pub kappas: Vec<f64>,
    /// Threshold on |ACE|, |Δf| and |ΔNI| used for convergence times.
    pub convergence_tol: f64,
    pub bode_decades: f64,
    pub bode_points_per_decade: usize,
}

impl Default for StudiesDoc {
    fn default() -> Self {
        Self {
            kappas: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            convergence_tol: 1e-4,
            bode_decades: 3.0,
            bode_points_per_decade: 50,
        }
    }
}

fn positive(what: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("{what} must be positive, got {v}")))
    }
}

impl ConfigDoc {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: Self = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read(path)?)
    }

    /// Schema checks beyond what the network constructor enforces.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.areas.is_empty() {
            return Err(CliError::Input("at least one area is required".into()));
        }
        for (k, a) in self.areas.iter().enumerate() {
            if a.generators.is_empty() {
                return Err(CliError::Input(format!("area {k} has no generators")));
            }
            if !a.generators.iter().any(|g| g.in_agc) {
                return Err(CliError::Input(format!("area {k} has no AGC units")));
            }
        }
        positive("sim.dt", self.sim.dt)?;
        positive("sim.horizon", self.sim.horizon)?;
        positive("sim.meas_filter_tc", self.sim.meas_filter_tc)?;
        if let Some(dt) = self.sim.reduced_dt {
            positive("sim.reduced_dt", dt)?;
        }
        if self.sim.record_stride == 0 {
            return Err(CliError::Input(
                "sim.record_stride must be at least 1".into(),
            ));
        }
        positive("studies.convergence_tol", self.studies.convergence_tol)?;
        positive("studies.bode_decades", self.studies.bode_decades)?;
        if self.studies.bode_points_per_decade == 0 {
            return Err(CliError::Input(
                "studies.bode_points_per_decade must be at least 1".into(),
            ));
        }
        for &k in &self.studies.kappas {
            positive("studies.kappas entry", k)?;
        }
        Ok(())
    }

    /// Network with every default filled in and validated.
    pub fn network(&self) -> Result<NetworkSpec, CliError> {
        let areas = self.areas.iter().map(area_spec).collect();
        let ties = self
            .ties
            .iter()
            .map(|t| TieLine {
                from: t.from,
                to: t.to,
                stiffness_t: t.stiffness_t,
            })
            .collect();
        let sched = self
            .schedules
            .net_interchange
            .clone()
            .unwrap_or_else(|| vec![0.0; self.areas.len()]);
        Ok(NetworkSpec::new(
            areas,
            ties,
            sched,
            self.sim.meas_filter_tc,
        )?)
    }

    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            horizon: self.sim.horizon,
            record_stride: self.sim.record_stride,
            seed,
        }
    }

    /// Fully explicit document describing `net`.
    pub fn from_network(net: &NetworkSpec, sim: SimDoc, studies: StudiesDoc) -> Self {
        let areas = net
            .areas
            .iter()
            .map(|a| AreaDoc {
                name: a.name.clone(),
                inertia_m: Some(a.inertia_m),
                load_damping: Some(a.load_damping),
                bias_b: Some(a.bias_b),
                agc_tc: a.agc_tc,
                sched_freq: Some(a.sched_freq),
                load_dev: a.load_dev,
                generators: a
                    .generators
                    .iter()
                    .map(|g| GeneratorDoc {
                        droop_r: Some(g.droop_r),
                        turbine_tc: Some(g.turbine_tc),
                        base_setpoint: g.base_setpoint,
                        lower: g.lower,
                        upper: g.upper,
                        participation: Some(g.participation),
                        in_agc: g.in_agc,
                    })
                    .collect(),
            })
            .collect();
        Self {
            areas,
            ties: net
                .ties
                .iter()
                .map(|t| TieDoc {
                    from: t.from,
                    to: t.to,
                    stiffness_t: t.stiffness_t,
                })
                .collect(),
            schedules: SchedulesDoc {
                net_interchange: Some(net.sched_ni.clone()),
            },
            sim: SimDoc {
                meas_filter_tc: net.meas_filter_tc,
                ..sim
            },
            studies,
        }
    }
}

fn area_spec(a: &AreaDoc) -> AreaSpec {
    let units = a.generators.len() as f64;
    let n_agc = a.generators.iter().filter(|g| g.in_agc).count() as f64;
    let generators = a
        .generators
        .iter()
        .map(|g| GeneratorSpec {
            droop_r: g.droop_r.unwrap_or(DEFAULT_DROOP_PER_UNIT * units),
            turbine_tc: g.turbine_tc.unwrap_or(DEFAULT_TURBINE_TC),
            base_setpoint: g.base_setpoint,
            lower: g.lower,
            upper: g.upper,
            participation: g
                .participation
                .unwrap_or(if g.in_agc { 1.0 / n_agc } else { 0.0 }),
            in_agc: g.in_agc,
        })
        .collect();
    let mut spec = AreaSpec {
        name: a.name.clone(),
        inertia_m: a.inertia_m.unwrap_or(DEFAULT_INERTIA),
        load_damping: a.load_damping.unwrap_or(DEFAULT_DAMPING),
        generators,
        bias_b: 0.0,
        agc_tc: a.agc_tc,
        sched_freq: a.sched_freq.unwrap_or(DEFAULT_SCHED_FREQ),
        load_dev: a.load_dev,
    };
    spec.bias_b = a.bias_b.unwrap_or_else(|| spec.beta());
    spec
}

/// Rank-1 system document: `delta`, `x`, `y`, plus the perturbation
/// direction `e` and scan settings for `perturb`, or the matrix `s` for
/// `svd-cond`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub delta: Vec<f64>,
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default)]
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanDoc>,
}

/// Symmetric σ grid `[−limit, limit]`; `limit` defaults to three times the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(default = "default_scan_points")]
    pub points: usize,
}

pub fn default_scan_points() -> usize {
    121
}

impl SystemDoc {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        Ok(serde_json::from_str(&read(path)?)?)
    }
}

pub fn matrix_from_rows(what: &str, rows: &[Vec<f64>]) -> Result<Mat, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(CliError::Input(format!(
            "{what} must be a non-empty rectangular matrix"
        )));
    }
    Mat::from_vec(n, rows[0].len(), rows.concat())
        .map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
