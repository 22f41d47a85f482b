use crate::error::{Error, Result};
use crate::history::Trajectory;
use crate::model::Model;

use super::BoundReport;

/// Discretization slack for the energy inequalities at elapsed time `t`.
pub fn energy_tolerance(t: f64) -> f64 {
    1e-3 * (1.0 + t)
}

/// Per-knot energy inequalities along a trajectory:
///
/// * `Eq13`: `(d/dt)||A^{1/2}u||² + ||Au||² ≤ M_b²|Ω|`, with the derivative taken from the knot data;
/// * `Eq14`: `||A^{1/2}u(t)||² + ∫₀ᵗ ||Au||² ≤ ||A^{1/2}φ(0)||² + M_b²|Ω| t` (trapezoid in time);
/// * `Eq30`: `||A^{1/2}u(t)||² ≤ ||A^{1/2}φ(0)||² e^{-λ₁t} + λ₁⁻¹ M_b²|Ω|`;
/// * `Eq23`: `||A^{1/2}u||² + ||A^{-1/2}u̇||² ≤ 3||A^{1/2}φ(0)||² e^{-λ₁t} + (1 + 3λ₁⁻¹) M_b²|Ω|`.
pub fn energy_ledger(traj: &Trajectory, model: &Model) -> Result<Vec<BoundReport>> {
    if traj.truncation() != model.m() {
        return Err(Error::SizeMismatch {
            expected: model.m(),
            got: traj.truncation(),
        });
    }
    let spectrum = model.spectrum();
    let lambda = spectrum.eigenvalues();
    let lambda1 = spectrum.lambda1();
    let fsq = model.birth().bound().powi(2) * spectrum.domain().measure();
    let start = traj.start_index();
    let e0 = spectrum.frac_norm(0.5, &traj.knots()[start].state).powi(2);
    let h = traj.h();

    let mut out = Vec::with_capacity(4 * (traj.len() - start));
    let mut integral = 0.0;
    let mut prev_strong_sq: Option<f64> = None;
    for i in start..traj.len() {
        let t = traj.time_of(i) - traj.t0();
        let tol = energy_tolerance(t);
        let u = traj.knots()[i].state.coefficients();
        let du = traj.solution_derivative(i).coefficients();
        let energy = spectrum.frac_norm(0.5, &traj.knots()[i].state).powi(2);
        let strong_sq = spectrum.frac_norm(1.0, &traj.knots()[i].state).powi(2);
        let weak_rate_sq = spectrum.frac_norm(-0.5, traj.solution_derivative(i)).powi(2);
        let denergy: f64 = 2.0 * (0..u.len()).map(|k| lambda[k] * u[k] * du[k]).sum::<f64>();
        if let Some(p) = prev_strong_sq {
            integral += 0.5 * h * (p + strong_sq);
        }
        prev_strong_sq = Some(strong_sq);
        let decay = (-lambda1 * t).exp();

        out.push(BoundReport::new("Eq13", t, denergy + strong_sq, fsq, tol));
        out.push(BoundReport::new("Eq14", t, energy + integral, e0 + fsq * t, tol));
        out.push(BoundReport::new("Eq30", t, energy, e0 * decay + fsq / lambda1, tol));
        out.push(BoundReport::new(
            "Eq23",
            t,
            energy + weak_rate_sq,
            3.0 * e0 * decay + (1.0 + 3.0 / lambda1) * fsq,
            tol,
        ));
    }
    Ok(out)
}
