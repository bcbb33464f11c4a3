use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use rank1_agc::agc::{check_feasibility, AreaFeasibility, NetworkSpec, PlantState};
use rank1_agc::diagstab::{
    certificate, certificate_weights, check_rank1, lyapunov_max_eig, oracle_diagstab,
    perturbation_bound, svd_condition, DiagStabReport, OracleResult, PerturbedSystem, Rank1System,
};
use rank1_agc::numerics::{hurwitz_verdict, spectral_norm};
use rank1_agc::reduced::{
    build_reduced, hinf_ii, margin_study as margin_at, sensitivity, steady_deviations, sweep_peak,
    ReducedModel,
};
use rank1_agc::sim::{
    burn_in_time, compare_traces, run_full, run_reduced, SimConfig, SimError, SimTrace, TraceGap,
};

use crate::config::{default_scan_points, matrix_from_rows, ConfigDoc, SystemDoc};
use crate::{
    BodeArgs, CheckArgs, CliError, FileOnly, FileOut, Mode, SimulateArgs, EXIT_OK, EXIT_UNSTABLE,
};

const ORACLE_BUDGET: usize = 20_000;

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })
}

/// Writes `rows` as CSV to `--out` (summary to `out`) or to `out` (summary to `err`).
fn emit_table<S: Serialize>(
    header: &[&str],
    rows: &[Vec<f64>],
    summary: &S,
    dest: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let write = |w: &mut dyn Write| -> Result<(), CliError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(header)?;
        for r in rows {
            wr.write_record(r.iter().map(|v| v.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    };
    match dest {
        Some(p) => {
            write(&mut create(p)?)?;
            write_json(out, summary)
        }
        None => {
            write(out)?;
            serde_json::to_writer(&mut *err, summary).map_err(std::io::Error::from)?;
            writeln!(err)?;
            Ok(())
        }
    }
}

fn rank1_system(doc: &SystemDoc) -> Result<Rank1System, CliError> {
    Rank1System::new(doc.delta.clone(), doc.x.clone(), doc.y.clone())
        .map_err(|e| CliError::Input(format!("invalid rank-1 system: {e}")))
}

#[derive(Debug, Serialize)]
struct CheckReport {
    #[serde(flatten)]
    report: DiagStabReport,
    hurwitz: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleResult>,
}

pub fn check(args: &CheckArgs, seed: u64, out: &mut dyn Write) -> Result<i32, CliError> {
    let doc = match &args.config {
        Some(p) => SystemDoc::load(p)?,
        None => SystemDoc {
            delta: args.delta.clone().unwrap_or_default(),
            x: args.x.clone().unwrap_or_default(),
            y: args.y.clone().unwrap_or_default(),
            e: None,
            s: None,
            scan: None,
        },
    };
    let sys = rank1_system(&doc)?;
    let mut report = check_rank1(&sys);
    if report.stable {
        match certificate(&sys) {
            Ok(r) => report = r,
            Err(e) => info!("no explicit certificate: {e}"),
        }
    }
    let a = sys.matrix();
    let oracle = if args.oracle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Some(oracle_diagstab(&a, ORACLE_BUDGET, &mut rng)?)
    } else {
        None
    };
    let stable = report.stable;
    write_json(
        out,
        &CheckReport {
            report,
            hurwitz: hurwitz_verdict(&a)?,
            oracle,
        },
    )?;
    Ok(if stable { EXIT_OK } else { EXIT_UNSTABLE })
}

#[derive(Debug, Serialize)]
struct PerturbSummary {
    sigma_max: f64,
    e_norm: f64,
    margin_mu: f64,
    certificate_d: Vec<f64>,
    /// Contiguous grid range around σ = 0 on which the certificate holds.
    certified_lo: f64,
    certified_hi: f64,
}

pub fn perturb(args: &FileOut, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let doc = SystemDoc::load(&args.config)?;
    let sys = rank1_system(&doc)?;
    let e = doc
        .e
        .as_deref()
        .ok_or_else(|| CliError::Input("perturb needs a perturbation matrix `e`".into()))?;
    let e = matrix_from_rows("e", e)?;
    let psys = PerturbedSystem::new(sys.clone(), 0.0, e)?;
    let sigma_max = perturbation_bound(&psys)?;
    let d = certificate_weights(&sys)?;
    let margin_mu = check_rank1(&sys).margin_mu;

    let limit = doc
        .scan
        .as_ref()
        .and_then(|s| s.limit)
        .unwrap_or(3.0 * sigma_max);
    let points = doc
        .scan
        .as_ref()
        .map_or(default_scan_points(), |s| s.points)
        .max(3)
        | 1;
    if !(limit.is_finite() && limit > 0.0) {
        return Err(CliError::Input("scan.limit must be positive".into()));
    }
    let sigmas: Vec<f64> = (0..points)
        .map(|i| -limit + 2.0 * limit * i as f64 / (points - 1) as f64)
        .collect();
    let lmax: Vec<f64> = sigmas
        .par_iter()
        .map(|&s| lyapunov_max_eig(&psys.with_sigma(s).matrix(), &d))
        .collect::<Result<_, _>>()?;

    let mid = points / 2;
    let mut lo = mid;
    while lo > 0 && lmax[lo - 1] < 0.0 {
        lo -= 1;
    }
    let mut hi = mid;
    while hi + 1 < points && lmax[hi + 1] < 0.0 {
        hi += 1;
    }
    let rows: Vec<Vec<f64>> = sigmas
        .iter()
        .zip(&lmax)
        .map(|(&s, &l)| {
            vec![
                s,
                l,
                f64::from(u8::from(l < 0.0)),
                f64::from(u8::from(s.abs() < sigma_max)),
            ]
        })
        .collect();
    let summary = PerturbSummary {
        sigma_max,
        e_norm: spectral_norm(&psys.e_matrix)?,
        margin_mu,
        certificate_d: d,
        certified_lo: sigmas[lo],
        certified_hi: sigmas[hi],
    };
    emit_table(
        &["sigma", "lyap_max_eig", "certified", "within_bound"],
        &rows,
        &summary,
        args.out.as_deref(),
        out,
        err,
    )?;
    Ok(EXIT_OK)
}

pub fn svd_cond(args: &FileOnly, out: &mut dyn Write) -> Result<i32, CliError> {
    let doc = SystemDoc::load(&args.config)?;
    let s = doc
        .s
        .as_deref()
        .ok_or_else(|| CliError::Input("svd-cond needs a coupling matrix `s`".into()))?;
    let s = matrix_from_rows("s", s)?;
    let r = svd_condition(&doc.delta, &s)?;
    write_json(out, &r)?;
    Ok(if r.satisfied { EXIT_OK } else { EXIT_UNSTABLE })
}

#[derive(Debug, Serialize)]
struct AreaSummary {
    area: usize,
    final_abs_ace: f64,
    final_abs_freq_dev: f64,
    final_abs_ni_dev: f64,
    /// `Δuₖ − ΔPᴸₖ` at the final time.
    final_setpoint_error: f64,
    /// First recorded time after which |ACE|, |Δf| and |ΔNI| stay below tolerance.
    convergence_time: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    final_time: f64,
    samples: usize,
    areas: Vec<AreaSummary>,
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    feasibility: Vec<AreaFeasibility>,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    full: Option<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduced: Option<RunSummary>,
    /// Gaps between full and reduced AGC states after the burn-in.
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gaps: Option<Vec<TraceGap>>,
}

fn convergence_time(time: &[f64], worst: &[f64], tol: f64) -> Option<f64> {
    match worst.iter().rposition(|&w| w >= tol) {
        None => time.first().copied(),
        Some(i) if i + 1 < time.len() => Some(time[i + 1]),
        Some(_) => None,
    }
}

fn summarize(
    time: &[f64],
    n: usize,
    column: impl Fn(&str, usize) -> Vec<f64>,
    load: &[f64],
    tol: f64,
) -> RunSummary {
    let areas = (0..n)
        .map(|k| {
            let (ace, df, dni, du) = (
                column("ace", k),
                column("df", k),
                column("dni", k),
                column("du", k),
            );
            let worst: Vec<f64> = (0..time.len())
                .map(|r| ace[r].abs().max(df[r].abs()).max(dni[r].abs()))
                .collect();
            let last = time.len() - 1;
            AreaSummary {
                area: k,
                final_abs_ace: ace[last].abs(),
                final_abs_freq_dev: df[last].abs(),
                final_abs_ni_dev: dni[last].abs(),
                final_setpoint_error: du[last] - load[k],
                convergence_time: convergence_time(time, &worst, tol),
            }
        })
        .collect();
    RunSummary {
        final_time: time[time.len() - 1],
        samples: time.len(),
        areas,
    }
}

fn summarize_full(tr: &SimTrace, net: &NetworkSpec, tol: f64) -> RunSummary {
    let col = |p: &str, k: usize| {
        tr.column(&format!("{p}_{k}"))
            .expect("full trace column")
            .to_vec()
    };
    summarize(&tr.time, net.n_areas(), col, &net.load_devs(), tol)
}

/// Reduced traces carry `η`, `φ(η)` and ACE; frequency and interchange
/// come from the steady-state map of `φ(η)`.
fn summarize_reduced(tr: &SimTrace, model: &ReducedModel, tol: f64) -> RunSummary {
    let n = model.dim();
    let phi: Vec<Vec<f64>> = (0..tr.len())
        .map(|r| {
            (0..n)
                .map(|k| tr.column(&format!("phi_{k}")).expect("phi column")[r])
                .collect()
        })
        .collect();
    let steady: Vec<_> = phi.iter().map(|p| steady_deviations(model, p)).collect();
    let col = |p: &str, k: usize| -> Vec<f64> {
        match p {
            "df" => steady.iter().map(|s| s.freq_dev).collect(),
            "dni" => steady.iter().map(|s| s.ni_dev[k]).collect(),
            "du" => phi.iter().map(|v| v[k]).collect(),
            _ => tr
                .column(&format!("{p}_{k}"))
                .expect("reduced column")
                .to_vec(),
        }
    };
    summarize(&tr.time, n, col, &model.load_dev, tol)
}

fn reduced_config(doc: &ConfigDoc, model: &ReducedModel, full: &SimConfig) -> SimConfig {
    let dt = doc.sim.reduced_dt.unwrap_or(0.1 * model.tau_scale);
    let stride = ((full.dt * full.record_stride as f64) / dt)
        .round()
        .max(1.0) as usize;
    SimConfig {
        dt,
        record_stride: stride,
        ..*full
    }
}

pub fn simulate(args: &SimulateArgs, seed: u64, out: &mut dyn Write) -> Result<i32, CliError> {
    let doc = ConfigDoc::load(&args.config)?;
    let net = doc.network()?;
    let feasibility = check_feasibility(&net);
    for (k, f) in feasibility.iter().enumerate() {
        if !f.feasible {
            warn!(
                "area {k}: load step {} outside regulation capacity ({}, {}); running saturated",
                f.load_dev, f.capacity_lo, f.capacity_hi
            );
        }
    }
    let cfg = doc.sim_config(seed);
    let model = build_reduced(&net);
    let rcfg = reduced_config(&doc, &model, &cfg);
    let want_full = args.mode != Mode::Reduced;
    let want_reduced = args.mode != Mode::Full;

    let init = PlantState::zeros(&net);
    let eta0 = vec![0.0; net.n_areas()];
    let (full, reduced) = rayon::join(
        || want_full.then(|| run_full(&net, &cfg, &init)).transpose(),
        || {
            want_reduced
                .then(|| run_reduced(&model, &rcfg, &eta0))
                .transpose()
        },
    );
    let (full, reduced): (Option<SimTrace>, Option<SimTrace>) = (full?, reduced?);

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        for (name, tr) in [("full.csv", &full), ("reduced.csv", &reduced)] {
            if let Some(tr) = tr {
                tr.write_csv(create(&dir.join(name))?)?;
            }
        }
    }

    let tol = doc.studies.convergence_tol;
    let (burn_in, gaps) = match (&full, &reduced) {
        (Some(f), Some(r)) => {
            let t0 = burn_in_time(&net);
            let cols: Vec<String> = (0..net.n_areas()).map(|k| format!("eta_{k}")).collect();
            let names: Vec<&str> = cols.iter().map(String::as_str).collect();
            match compare_traces(&f.slice_from(t0), &r.slice_from(t0), &names) {
                Ok(g) => (Some(t0), Some(g)),
                Err(SimError::EmptyOverlap) => {
                    warn!("horizon ends before the {t0} s burn-in; no gap reported");
                    (None, None)
                }
                Err(e) => return Err(e.into()),
            }
        }
        _ => (None, None),
    };
    let summary = SimulateSummary {
        feasibility,
        tolerance: tol,
        full: full.as_ref().map(|t| summarize_full(t, &net, tol)),
        reduced: reduced.as_ref().map(|t| summarize_reduced(t, &model, tol)),
        burn_in,
        gaps,
    };
    write_json(out, &summary)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct BodeSummary {
    area: usize,
    cross: usize,
    /// Common AGC time constant, seconds.
    tau: f64,
    /// Closed-form peak `|1 − (βᵢ − bᵢ)/β|`; diagonal entries only.
    formula_peak: Option<f64>,
    sweep_peak: f64,
    sweep_peak_omega: f64,
    grid_peak: f64,
}

pub fn bode(args: &BodeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let doc = ConfigDoc::load(&args.config)?;
    let model = build_reduced(&doc.network()?);
    let (i, j) = (args.area, args.cross.unwrap_or(args.area));
    for idx in [i, j] {
        if idx >= model.dim() {
            return Err(CliError::Input(format!(
                "area index {idx} out of range for {} areas",
                model.dim()
            )));
        }
    }
    let peak = sweep_peak(&model, i, j)?;
    let tau = model.tau_scale * model.tau_tilde[0];
    let per_decade = doc.studies.bode_points_per_decade;
    let decades = doc.studies.bode_decades;
    let n = (2.0 * decades * per_decade as f64).round() as usize + 1;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let w = 10f64.powf(-decades + k as f64 / per_decade as f64) / tau;
            let s = sensitivity(&model, i, j, w)?;
            Ok(vec![w, s.norm(), s.arg().to_degrees()])
        })
        .collect::<Result<_, CliError>>()?;
    let summary = BodeSummary {
        area: i,
        cross: j,
        tau,
        formula_peak: if i == j {
            Some(hinf_ii(&model, i)?)
        } else {
            None
        },
        sweep_peak: peak.peak,
        sweep_peak_omega: peak.omega,
        grid_peak: rows.iter().map(|r| r[1]).fold(0.0, f64::max),
    };
    emit_table(
        &["omega", "magnitude", "phase_deg"],
        &rows,
        &summary,
        args.out.as_deref(),
        out,
        err,
    )?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct MarginSummary {
    betas: Vec<f64>,
    /// λmin(Q) is nondecreasing in κ on the grid.
    monotone: bool,
    printed_bound_failures: usize,
}

pub fn margin_study(
    args: &FileOut,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let doc = ConfigDoc::load(&args.config)?;
    let betas = doc.network()?.betas();
    let model = ReducedModel::linear(betas.clone(), betas.clone(), 1.0)?;
    let mut kappas = doc.studies.kappas.clone();
    kappas.sort_by(f64::total_cmp);
    let rows: Vec<Vec<f64>> = kappas
        .par_iter()
        .map(|&k| {
            let s = margin_at(&model, k)?;
            let holds = s.q_min_eig >= s.printed_bound - 1e-12;
            Ok(vec![
                k,
                s.q_min_eig,
                s.printed_bound,
                f64::from(u8::from(holds)),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    let summary = MarginSummary {
        betas,
        monotone: rows.windows(2).all(|w| w[1][1] >= w[0][1] - 1e-12),
        printed_bound_failures: rows.iter().filter(|r| r[3] == 0.0).count(),
    };
    emit_table(
        &["kappa", "q_min_eig", "printed_bound", "printed_bound_holds"],
        &rows,
        &summary,
        args.out.as_deref(),
        out,
        err,
    )?;
    Ok(EXIT_OK)
}

pub fn feasibility(args: &FileOnly, out: &mut dyn Write) -> Result<i32, CliError> {
    let doc = ConfigDoc::load(&args.config)?;
    let f = check_feasibility(&doc.network()?);
    write_json(out, &f)?;
    Ok(if f.iter().all(|a| a.feasible) {
        EXIT_OK
    } else {
        EXIT_UNSTABLE
    })
}
