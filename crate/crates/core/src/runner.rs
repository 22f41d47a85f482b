//! Scenario execution and artifact writing for the command-line tool.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{history_from_terms, RunConfig, Scenario};
use crate::diagnostics::{
    absorbing_entry, attractor_sample, compute_constants, condense, continuous_dependence_check, d_vt, c_vt,
    energy_ledger, forcing_bound_check, invariance_check_hi, lipschitz_chain_check, summarize, weak_form_residuals,
    BoundReport, ConstantsLedger, EntryTimes,
};
use crate::error::{Error, Result};
use crate::history::{metric_rho, HistorySegment, Trajectory};
use crate::integrator::{integrate, SemigroupResult};
use crate::model::{Cutoff, DelayFunctional, Model};
use crate::sampling::{generate_ensemble, random_terms, UniformStream};

/// Failing records kept per equation id in `report.json`.
const MAX_FAILURE_RECORDS: usize = 20;

/// Exit status of a scenario run.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Overflow { .. } => exit::NUMERICAL,
        Error::Io(_) => exit::IO,
        _ => exit::CONFIG,
    }
}

/// Checks executed by `certify`.
#[derive(Clone, Copy, Debug)]
pub struct CertifyPlan {
    pub random_segments: usize,
    pub dependence_pairs: usize,
    pub dependence_horizon: f64,
    pub residual_horizon: f64,
}

impl Default for CertifyPlan {
    fn default() -> Self {
        Self {
            random_segments: 100,
            dependence_pairs: 20,
            dependence_horizon: 5.0,
            residual_horizon: 5.0,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub artifacts: Vec<PathBuf>,
}

/// The configured model (with cutoff when enabled) and its constants ledger.
/// `L_{v,T}` in the ledger is a placeholder until measured.
pub fn prepare(cfg: &RunConfig) -> Result<(Model, ConstantsLedger)> {
    let model = cfg.build_model()?;
    let ledger = ledger_for(cfg, &model, 0.0, cfg.time.horizon)?;
    let model = if cfg.model.cutoff.enabled {
        let radius = cfg.model.cutoff.radius.unwrap_or(ledger.r_hat);
        model.with_cutoff(Some(Cutoff::new(radius)?))
    } else {
        model
    };
    Ok((model, ledger))
}

pub fn ledger_for(cfg: &RunConfig, model: &Model, l_vt: f64, horizon: f64) -> Result<ConstantsLedger> {
    let r = &cfg.radii;
    compute_constants(&model.constants()?, l_vt, horizon, r.alpha, r.epsilon, r.epsilon0, r.lip_radius)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn metadata() -> Value {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({ "generated_unix_time": secs, "tool_version": env!("CARGO_PKG_VERSION") })
}

fn report_document(cfg: &RunConfig, ledger: &ConstantsLedger, records: &[BoundReport], extra: Value) -> (bool, Value) {
    let checks = summarize(records);
    let pass = checks.values().all(|c| c.pass);
    let mut summary = json!({
        "config_hash": config_hash(cfg),
        "scenario": cfg.scenario,
        "constants": ledger,
        "checks": checks,
        "pass": pass,
    });
    if let (Value::Object(s), Value::Object(e)) = (&mut summary, extra) {
        s.extend(e);
    }
    let doc = json!({
        "records": condense(records, MAX_FAILURE_RECORDS),
        "summary": summary,
        "metadata": metadata(),
    });
    (pass, doc)
}

/// Hash of the configuration with the output location removed.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = None;
    c.hash()
}

/// `trajectory.csv`: knots with `eta` (simulated knots only) and `energy_half = ||A^{1/2}u||²`.
pub fn write_trajectory_csv(path: &Path, run: &SemigroupResult, model: &Model) -> Result<()> {
    let traj = &run.trajectory;
    let start = traj.start_index();
    let mut eta = vec![f64::NAN; traj.len()];
    for (i, d) in run.delays.iter().enumerate() {
        eta[start + i] = d.eta;
    }
    let energy: Vec<f64> = traj
        .knots()
        .iter()
        .map(|k| model.spectrum().frac_norm(0.5, &k.state).powi(2))
        .collect();
    let f = BufWriter::new(File::create(path)?);
    traj.write_csv(f, &[("eta", &eta), ("energy_half", &energy)])
}

fn entry_reports(traj: &Trajectory, ledger: &ConstantsLedger, model: &Model) -> Result<(Vec<BoundReport>, Value)> {
    match absorbing_entry(traj, ledger, model.spectrum()) {
        Ok(e) => {
            let v = entry_json(&e);
            Ok((e.reports, v))
        }
        Err(Error::HorizonTooShort { horizon, required }) => {
            let r = BoundReport::new("Eq24", horizon, required, horizon, 0.0)
                .with_context("horizon too short to decide absorbing-ball entry");
            Ok((vec![r], json!({ "horizon_too_short": { "horizon": horizon, "required": required } })))
        }
        Err(e) => Err(e),
    }
}

fn entry_json(e: &EntryTimes) -> Value {
    json!({
        "ball0": e.ball0,
        "ball_alpha": e.ball_alpha,
        "ball_v_alpha": e.ball_v_alpha,
        "required_horizon": e.required_horizon,
    })
}

pub fn run_scenario(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    match cfg.scenario {
        Scenario::Single => run_single(cfg, out),
        Scenario::Ensemble => run_ensemble(cfg, out),
        Scenario::CompareDelay => run_compare_delay(cfg, out),
        Scenario::Certify => run_certify(cfg, out, &CertifyPlan::default()),
    }
}

fn run_single(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (model, ledger) = prepare(cfg)?;
    let run = integrate(&cfg.initial_history()?, &model, &cfg.integrator_config())?;
    let l_vt = run.trajectory.interval_slopes(model.spectrum()).into_iter().fold(0.0, f64::max);
    let ledger = ledger_for(cfg, &model, l_vt, ledger.horizon)?;
    let mut records = energy_ledger(&run.trajectory, &model)?;
    let (entry, entry_v) = entry_reports(&run.trajectory, &ledger, &model)?;
    records.extend(entry);

    let csv = out.join("trajectory.csv");
    write_trajectory_csv(&csv, &run, &model)?;
    let (pass, doc) = report_document(cfg, &ledger, &records, json!({ "entry_times": entry_v }));
    let report = out.join("report.json");
    write_json(&report, &doc)?;
    Ok(Outcome {
        pass,
        artifacts: vec![csv, report],
    })
}

/// The configured random ensemble: `norm_L` up to `ensemble.norm_bound` (default `R̂_α`), `|||φ||| ≤ R⁰`.
pub fn ensemble_members(cfg: &RunConfig, ledger: &ConstantsLedger, model: &Model) -> Result<Vec<HistorySegment>> {
    generate_ensemble(
        model.spectrum(),
        cfg.window_steps(),
        cfg.time.h,
        cfg.ensemble.size,
        cfg.seed,
        cfg.ensemble.norm_bound.unwrap_or(ledger.r_hat),
        ledger.lip_radius,
    )
}

fn run_ensemble(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    use rayon::prelude::*;
    let (model, ledger) = prepare(cfg)?;
    let members = ensemble_members(cfg, &ledger, &model)?;
    let icfg = cfg.integrator_config();
    let dir = out.join("members");
    fs::create_dir_all(&dir)?;

    let per_member: Vec<(Vec<BoundReport>, Value)> = members
        .par_iter()
        .map(|phi| -> Result<(Vec<BoundReport>, Value)> {
            let run = integrate(phi, &model, &icfg)?;
            let mut records = energy_ledger(&run.trajectory, &model)?;
            let (entry, entry_v) = entry_reports(&run.trajectory, &ledger, &model)?;
            records.extend(entry);
            let energy_end = model
                .spectrum()
                .frac_norm(0.5, &run.trajectory.knots()[run.trajectory.len() - 1].state)
                .powi(2);
            Ok((records, json!({ "entry_times": entry_v, "final_energy_half": energy_end })))
        })
        .collect::<Result<_>>()?;

    let mut artifacts = Vec::new();
    let mut all = Vec::new();
    for (i, (records, extra)) in per_member.into_iter().enumerate() {
        let (_, doc) = report_document(cfg, &ledger, &records, extra);
        let p = dir.join(format!("member_{i:03}.json"));
        write_json(&p, &doc)?;
        artifacts.push(p);
        all.extend(records.into_iter().map(|r| {
            let ctx = format!("member {i}");
            r.with_context(ctx)
        }));
    }

    let invariance = invariance_check_hi(&model, &icfg, ledger.lip_radius, &members)?;
    all.push(invariance.report.clone());
    let h = cfg.integrator_config().horizon;
    let snaps: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|f| ((f * h) / cfg.time.h).round() * cfg.time.h)
        .collect();
    let sample = attractor_sample(&model, &icfg, &ledger, &members, &snaps)?;
    let (pass, doc) = report_document(
        cfg,
        &ledger,
        &all,
        json!({
            "members": members.len(),
            "invariance": { "max_seminorm": invariance.max_seminorm, "radius": ledger.lip_radius, "empirical": true },
            "attractor_sample": sample,
            "diameters_nonincreasing": sample.diameters_nonincreasing(),
        }),
    );
    let p = out.join("ensemble.json");
    write_json(&p, &doc)?;
    artifacts.push(p);
    Ok(Outcome { pass, artifacts })
}

/// The state-dependent delay of a comparison and its constant counterpart `η₀ = (η_min + r)/2`.
fn comparison_delays(cfg: &RunConfig) -> (DelayFunctional, DelayFunctional) {
    let r = cfg.delay_window;
    let sdd = match cfg.delay() {
        DelayFunctional::Constant { .. } => DelayFunctional::PointState { eta_min: 0.1 * r, r, c: 1.0 },
        d => d,
    };
    let (lo, hi) = sdd.range();
    (sdd, DelayFunctional::Constant { eta0: 0.5 * (lo + hi) })
}

fn run_compare_delay(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (base, ledger) = prepare(cfg)?;
    let (sdd, constant) = comparison_delays(cfg);
    let build = |delay: DelayFunctional| -> Result<Model> {
        let m = Model::new(
            base.projector().clone(),
            *base.kernel_spec(),
            *base.birth(),
            delay,
            base.damping(),
            base.window(),
        )?;
        Ok(m.with_cutoff(base.cutoff().copied()))
    };
    let (m_sdd, m_const) = (build(sdd)?, build(constant)?);
    let phi = cfg.initial_history()?;
    let icfg = cfg.integrator_config();
    let (r_sdd, r_const) = rayon::join(|| integrate(&phi, &m_sdd, &icfg), || integrate(&phi, &m_const, &icfg));
    let (r_sdd, r_const) = (r_sdd?, r_const?);
    let spectrum = base.spectrum();

    let csv_path = out.join("compare_delay.csv");
    let mut csv = String::from("t,energy_half_sdd,energy_half_const,eta_sdd,eta_const,rho\n");
    let stride = (cfg.window_steps() / 10).max(1);
    let (ts, tc) = (&r_sdd.trajectory, &r_const.trajectory);
    for j in (0..=ts.steps_taken()).step_by(stride) {
        let i = ts.start_index() + j;
        let e = |t: &Trajectory| spectrum.frac_norm(0.5, &t.knots()[i].state).powi(2);
        let rho = metric_rho(&ts.segment_ending_at(i), &tc.segment_ending_at(i), spectrum)?;
        let cells = [ts.time_of(i), e(ts), e(tc), r_sdd.delays[j].eta, r_const.delays[j].eta, rho];
        let row: Vec<String> = cells.iter().map(|v| crate::history::format_number(*v)).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    fs::write(&csv_path, csv)?;

    // Stability constant as a function of L_vT for both delays, over one delay
    // window so that every probe stays finite.
    let probe = [1.0, 10.0, 100.0];
    let probe_horizon = cfg.delay_window;
    let d_of = |m: &Model| -> Result<Vec<f64>> {
        let mc = m.constants()?;
        Ok(probe
            .iter()
            .map(|&l| d_vt(c_vt(mc.l_b, mc.l_bop, l, mc.l_eta), mc.lambda1, probe_horizon))
            .collect())
    };
    let (d_sdd, d_const) = (d_of(&m_sdd)?, d_of(&m_const)?);
    let const_flat = d_const.windows(2).all(|w| w[0].to_bits() == w[1].to_bits());
    let sdd_increasing = d_sdd.windows(2).all(|w| w[1] > w[0]);
    let measured = |t: &Trajectory| t.interval_slopes(spectrum).into_iter().fold(0.0, f64::max);
    let doc = json!({
        "summary": {
            "config_hash": config_hash(cfg),
            "constants": ledger,
            "l_vt_probe": probe,
            "probe_horizon": probe_horizon,
            "d_vt_state_dependent": d_sdd,
            "d_vt_constant": d_const,
            "constant_delay_independent_of_l_vt": const_flat,
            "state_dependent_increasing_in_l_vt": sdd_increasing,
            "measured_l_vt": { "state_dependent": measured(ts), "constant": measured(tc) },
            "delays": { "state_dependent": format!("{sdd:?}"), "constant": format!("{constant:?}") },
            "pass": const_flat && sdd_increasing,
        },
        "metadata": metadata(),
    });
    let json_path = out.join("compare_delay.json");
    write_json(&json_path, &doc)?;
    Ok(Outcome {
        pass: const_flat && sdd_increasing,
        artifacts: vec![csv_path, json_path],
    })
}

/// Random histories affine in `θ` (so sampled sup norms are exact) for the pointwise checks.
fn random_affine(cfg: &RunConfig, rng: &mut UniformStream, m: usize, scale: f64) -> Result<HistorySegment> {
    Ok(history_from_terms(&random_terms(rng), m, cfg.window_steps(), cfg.time.h)?.scaled(scale))
}

/// `a + b` knot by knot.
fn offset(a: &HistorySegment, b: &HistorySegment) -> Result<HistorySegment> {
    let knots = a
        .knots()
        .iter()
        .zip(b.knots())
        .map(|(x, y)| {
            let mut k = x.clone();
            k.state = x.state.sub(&y.state.scaled(-1.0));
            k.derivative = x.derivative.sub(&y.derivative.scaled(-1.0));
            k
        })
        .collect();
    HistorySegment::new(knots, a.step())
}

/// The full battery of checks on one configuration.
pub fn certify(cfg: &RunConfig, plan: &CertifyPlan) -> Result<(Vec<BoundReport>, ConstantsLedger, Value)> {
    let (model, _) = prepare(cfg)?;
    let icfg = cfg.integrator_config();
    let m = model.m();
    let phi = cfg.initial_history()?;

    let run = integrate(&phi, &model, &icfg)?;
    let l_vt = run.trajectory.interval_slopes(model.spectrum()).into_iter().fold(0.0, f64::max);
    let ledger = ledger_for(cfg, &model, l_vt, icfg.horizon)?;
    let mut records = energy_ledger(&run.trajectory, &model)?;
    let (entry, entry_v) = entry_reports(&run.trajectory, &ledger, &model)?;
    records.extend(entry);
    drop(run);

    let mut rng = UniformStream::new(cfg.seed ^ 0x5eed_0001);
    let segments: Vec<HistorySegment> = (0..plan.random_segments)
        .map(|_| {
            let s = rng.uniform(0.1, 3.0);
            random_affine(cfg, &mut rng, m, s)
        })
        .collect::<Result<_>>()?;
    records.extend(forcing_bound_check(&model, &segments)?);
    let pairs: Vec<(HistorySegment, HistorySegment)> = segments
        .iter()
        .map(|u| -> Result<_> {
            let eps = rng.log_uniform(1e-4, 1e-1);
            let dv = random_affine(cfg, &mut rng, m, eps)?;
            Ok((u.clone(), offset(u, &dv)?))
        })
        .collect::<Result<_>>()?;
    records.extend(lipschitz_chain_check(&model, &pairs)?.into_iter().map(|s| s.report));

    let dep_cfg = icfg.with_horizon(plan.dependence_horizon.min(icfg.horizon));
    let dep_cfg = dep_cfg.with_horizon((dep_cfg.horizon / icfg.h).round() * icfg.h);
    let base = ensemble_members(cfg, &ledger, &model)?;
    {
        use rayon::prelude::*;
        let mut dep_inputs = Vec::with_capacity(plan.dependence_pairs);
        for i in 0..plan.dependence_pairs {
            let phi = base[i % base.len()].clone();
            let target = rng.log_uniform(1e-4, 1e-1);
            let dir = random_affine(cfg, &mut rng, m, 1.0)?;
            let rho = metric_rho(&dir.view(), &HistorySegment::zeros(m, dir.steps(), dir.step())?.view(), model.spectrum())?;
            dep_inputs.push((phi, dir.scaled(target / rho)));
        }
        let outcomes: Vec<_> = dep_inputs
            .par_iter()
            .map(|(phi, dir)| continuous_dependence_check(phi, &offset(phi, dir)?, &model, &dep_cfg))
            .collect::<Result<_>>()?;
        for (i, o) in outcomes.into_iter().enumerate() {
            records.extend(o.reports.into_iter().map(|r| r.with_context(format!("pair {i}"))));
        }
    }

    let invariance = invariance_check_hi(&model, &icfg, ledger.lip_radius, &base)?;
    records.push(invariance.report.clone());

    let modes: Vec<usize> = (1..=m.min(3)).collect();
    let rh = (plan.residual_horizon.min(icfg.horizon) / icfg.h).round() * icfg.h;
    let residual = |h: f64| -> Result<Vec<f64>> {
        let mut c = cfg.clone();
        c.time.h = h;
        c.time.horizon = rh;
        c.validate()?;
        let (mm, _) = prepare(&c)?;
        let r = integrate(&c.initial_history()?, &mm, &c.integrator_config())?;
        weak_form_residuals(&r.trajectory, &mm, &modes, |t| (rh - t, -1.0))
    };
    let (coarse, fine) = (residual(icfg.h)?, residual(icfg.h / 2.0)?);
    for (n, j) in modes.iter().enumerate() {
        let ratio = coarse[n] / fine[n];
        let mut r = BoundReport::new("Eq7-residual", rh, 1.9, ratio, 0.0)
            .with_context(format!("mode {j}: residual {:.3e} at h, {:.3e} at h/2", coarse[n], fine[n]));
        if coarse[n] <= 1e-12 {
            r.pass = true;
        }
        records.push(r);
    }

    let extra = json!({
        "entry_times": entry_v,
        "invariance": { "max_seminorm": invariance.max_seminorm, "radius": ledger.lip_radius, "empirical": true },
        "weak_form_residuals": { "h": coarse, "h_half": fine },
    });
    Ok((records, ledger, extra))
}

fn run_certify(cfg: &RunConfig, out: &Path, plan: &CertifyPlan) -> Result<Outcome> {
    let (records, ledger, extra) = certify(cfg, plan)?;
    let (pass, doc) = report_document(cfg, &ledger, &records, extra);
    let p = out.join("report.json");
    write_json(&p, &doc)?;
    Ok(Outcome {
        pass,
        artifacts: vec![p],
    })
}
