use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::history::{metric_rho, HistorySegment};
use crate::integrator::{grid_count, integrate, IntegratorConfig};
use crate::model::Model;

use super::{absorbing_entry, v_alpha_profile, BoundReport, ConstantsLedger, EntryTimes};

/// Slack on the Lipschitz radius in the invariance check.
const INVARIANCE_TOLERANCE: f64 = 1e-3;

fn check_membership(model: &Model, ensemble: &[HistorySegment], radius: f64) -> Result<()> {
    for (i, phi) in ensemble.iter().enumerate() {
        let lip = phi.view().lip_seminorm(model.spectrum());
        if !(lip <= radius) {
            return Err(Error::InvalidArgument(format!(
                "ensemble member {i} has Lipschitz seminorm {lip} > {radius}"
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceOutcome {
    pub sample_times: Vec<f64>,
    /// `|||S_t φ_i|||` at each sample time, one row per member.
    pub seminorms: Vec<Vec<f64>>,
    pub max_seminorm: f64,
    pub report: BoundReport,
}

impl InvarianceOutcome {
    /// The same samples judged against another radius.
    pub fn report_against(&self, radius: f64) -> BoundReport {
        BoundReport::new("Eq32-empirical", self.worst_time(), self.max_seminorm, radius, INVARIANCE_TOLERANCE)
            .with_context("empirical: sampled ensemble, not a proof")
    }

    fn worst_time(&self) -> f64 {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for row in &self.seminorms {
            for (v, t) in row.iter().zip(&self.sample_times) {
                if *v > best.0 {
                    best = (*v, *t);
                }
            }
        }
        best.1
    }
}

/// Runs each member to `config.horizon` and samples `|||S_t φ|||` at every
/// multiple of the delay window.
pub fn invariance_check_hi(
    model: &Model,
    config: &IntegratorConfig,
    radius: f64,
    ensemble: &[HistorySegment],
) -> Result<InvarianceOutcome> {
    check_membership(model, ensemble, radius)?;
    let spectrum = model.spectrum();
    let w = grid_count(model.window(), config.h, "r/h")?;
    let periods = (config.horizon / model.window() + 1e-9).floor() as usize;
    let sample_times: Vec<f64> = (0..=periods).map(|k| k as f64 * model.window()).collect();
    let seminorms: Vec<Vec<f64>> = ensemble
        .par_iter()
        .map(|phi| -> Result<Vec<f64>> {
            let traj = integrate(phi, model, config)?.trajectory;
            Ok((0..=periods)
                .map(|k| traj.segment_ending_at(traj.start_index() + k * w).lip_seminorm(spectrum))
                .collect())
        })
        .collect::<Result<_>>()?;
    let max_seminorm = seminorms.iter().flatten().cloned().fold(0.0, f64::max);
    let mut out = InvarianceOutcome {
        sample_times,
        seminorms,
        max_seminorm,
        report: BoundReport::new("Eq32-empirical", 0.0, 0.0, radius, INVARIANCE_TOLERANCE),
    };
    out.report = out.report_against(radius);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    /// `max_{i,j} ρ(S_t φ_i, S_t φ_j)`.
    pub diameter: f64,
    pub norms_l: Vec<f64>,
    pub v_alpha: Vec<f64>,
    /// `V_α`-size within `R̂_α`.
    pub inside_bv_alpha: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttractorSample {
    pub snapshots: Vec<Snapshot>,
    /// Absorbing-ball entry per member; `None` when the horizon is too short to decide.
    pub entries: Vec<Option<EntryTimes>>,
}

impl AttractorSample {
    /// Whether the ρ-diameters never increase across the snapshots.
    pub fn diameters_nonincreasing(&self) -> bool {
        self.snapshots.windows(2).all(|w| w[1].diameter <= w[0].diameter)
    }
}

struct MemberRun {
    segments: Vec<HistorySegment>,
    v_alpha: Vec<f64>,
    entry: Option<EntryTimes>,
}

/// Ensemble images at `snapshot_times` (grid times in `[0, config.horizon]`).
pub fn attractor_sample(
    model: &Model,
    config: &IntegratorConfig,
    constants: &ConstantsLedger,
    ensemble: &[HistorySegment],
    snapshot_times: &[f64],
) -> Result<AttractorSample> {
    check_membership(model, ensemble, constants.lip_radius)?;
    let spectrum = model.spectrum();
    let mut indices = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        if t > config.horizon + 1e-9 {
            return Err(Error::InvalidArgument(format!("snapshot {t} is past the horizon {}", config.horizon)));
        }
        indices.push(grid_count(t, config.h, "snapshot/h")?);
    }
    let runs: Vec<MemberRun> = ensemble
        .par_iter()
        .map(|phi| -> Result<MemberRun> {
            let traj = integrate(phi, model, config)?.trajectory;
            let profile = v_alpha_profile(&traj, spectrum, constants.alpha);
            let start = traj.start_index();
            let entry = match absorbing_entry(&traj, constants, spectrum) {
                Ok(e) => Some(e),
                Err(Error::HorizonTooShort { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(MemberRun {
                segments: indices
                    .iter()
                    .map(|&n| traj.segment_ending_at(start + n).to_owned())
                    .collect(),
                v_alpha: indices.iter().map(|&n| profile[n]).collect(),
                entry,
            })
        })
        .collect::<Result<_>>()?;

    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    for (s, &t) in snapshot_times.iter().enumerate() {
        let segs: Vec<&HistorySegment> = runs.iter().map(|r| &r.segments[s]).collect();
        let pairs: Vec<(usize, usize)> = (0..segs.len())
            .flat_map(|i| (i + 1..segs.len()).map(move |j| (i, j)))
            .collect();
        let diameter = pairs
            .par_iter()
            .map(|&(i, j)| metric_rho(&segs[i].view(), &segs[j].view(), spectrum))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let v_alpha: Vec<f64> = runs.iter().map(|r| r.v_alpha[s]).collect();
        snapshots.push(Snapshot {
            t,
            diameter,
            norms_l: segs.iter().map(|g| g.view().norm_l(spectrum)).collect(),
            inside_bv_alpha: v_alpha.iter().map(|v| *v <= constants.r_hat).collect(),
            v_alpha,
        });
    }
    Ok(AttractorSample {
        snapshots,
        entries: runs.into_iter().map(|r| r.entry).collect(),
    })
}
