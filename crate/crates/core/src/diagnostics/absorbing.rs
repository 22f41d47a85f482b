use serde::Serialize;

use crate::error::{Error, Result};
use crate::history::{sliding_max, Trajectory};
use crate::spectral::Spectrum;

use super::{BoundReport, ConstantsLedger, ALGEBRAIC_TOLERANCE};

/// First times after which a trajectory stays inside each absorbing ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryTimes {
    /// `||A^{1/2}u||² + ||A^{-1/2}u̇||² ≤ R₀²` from here on.
    pub ball0: Option<f64>,
    /// `||A^α u|| ≤ R_α` from here on, searched from `ball0 + 1`.
    pub ball_alpha: Option<f64>,
    /// `max_θ ||A^{-1/2}u̇_t(θ)|| + max_θ ||A^α u_t(θ)|| ≤ R̂_α` from here on.
    pub ball_v_alpha: Option<f64>,
    pub required_horizon: f64,
    pub reports: Vec<BoundReport>,
}

/// Index from which `values[i] ≤ bound` holds for every `i ≥ from`, if any.
fn permanent_from(values: &[f64], bound: f64, from: usize) -> Option<usize> {
    if from >= values.len() {
        return None;
    }
    match values[from..].iter().rposition(|v| !(*v <= bound)) {
        None => Some(from),
        Some(j) if from + j + 1 < values.len() => Some(from + j + 1),
        Some(_) => None,
    }
}

/// The `V_α`-type size of each segment `u_t`, `t ≥ t0`: sampled sup of
/// `||A^{-1/2} u̇||` plus the knot sup of `||A^α u||` over the window.
pub fn v_alpha_profile(traj: &Trajectory, spectrum: &Spectrum, alpha: f64) -> Vec<f64> {
    let w = traj.window_steps();
    let slopes = sliding_max(&traj.interval_slopes(spectrum), w);
    let strong: Vec<f64> = traj
        .knots()
        .iter()
        .map(|k| spectrum.frac_norm(alpha, &k.state))
        .collect();
    let strong = sliding_max(&strong, w + 1);
    slopes.iter().zip(&strong).map(|(a, b)| a + b).collect()
}

pub fn absorbing_entry(traj: &Trajectory, constants: &ConstantsLedger, spectrum: &Spectrum) -> Result<EntryTimes> {
    let start = traj.start_index();
    let e0 = spectrum.frac_norm(0.5, &traj.knots()[start].state).powi(2);
    let required = 2.0 / constants.lambda1 * (1.0 + e0 / constants.epsilon0).ln();
    let horizon = traj.end_time() - traj.t0();
    if horizon + 1e-12 < required {
        return Err(Error::HorizonTooShort { horizon, required });
    }
    let times: Vec<f64> = (start..traj.len()).map(|i| traj.time_of(i) - traj.t0()).collect();
    let q0: Vec<f64> = (start..traj.len())
        .map(|i| {
            spectrum.frac_norm(0.5, &traj.knots()[i].state).powi(2)
                + spectrum.frac_norm(-0.5, traj.solution_derivative(i)).powi(2)
        })
        .collect();
    let qa: Vec<f64> = (start..traj.len())
        .map(|i| spectrum.frac_norm(constants.alpha, &traj.knots()[i].state))
        .collect();
    let qv = v_alpha_profile(traj, spectrum, constants.alpha);

    let max_from = |v: &[f64], from: Option<usize>| -> f64 {
        v[from.unwrap_or(0).min(v.len() - 1)..].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    let report = |eq: &str, v: &[f64], from: Option<usize>, bound: f64| {
        let idx = from.unwrap_or(0).min(v.len() - 1);
        let mut r = BoundReport::new(eq, times[idx], max_from(v, from), bound, ALGEBRAIC_TOLERANCE);
        if from.is_none() {
            r.pass = false;
            r.context = "no permanent entry before the horizon".into();
        }
        r
    };

    let i0 = permanent_from(&q0, constants.r0_sq, 0);
    let ia = i0.and_then(|i| {
        let lower = times.partition_point(|t| *t < times[i] + 1.0 - 1e-9);
        permanent_from(&qa, constants.r_alpha + ALGEBRAIC_TOLERANCE, lower)
    });
    let iv = permanent_from(&qv, constants.r_hat, 0);
    let reports = vec![
        report("Eq24", &q0, i0, constants.r0_sq),
        report("Eq27", &qa, ia, constants.r_alpha),
        report("Eq28/29", &qv, iv, constants.r_hat),
    ];
    Ok(EntryTimes {
        ball0: i0.map(|i| times[i]),
        ball_alpha: ia.map(|i| times[i]),
        ball_v_alpha: iv.map(|i| times[i]),
        required_horizon: required,
        reports,
    })
}
