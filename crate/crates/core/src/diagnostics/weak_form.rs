use crate::error::{Error, Result};
use crate::history::Trajectory;
use crate::model::Model;

/// Residuals of the weak formulation for test functions `v(t) = θ(t) e_j`,
///
/// ```text
/// -∫₀ᵀ ⟨u, v̇⟩ + ∫₀ᵀ ⟨A^{1/2}u, A^{1/2}v⟩ = ⟨φ(0), v(0)⟩ + ∫₀ᵀ ⟨F(u_t) - d u, v⟩,
/// ```
///
/// one per mode `j` (1-based). `profile(t)` returns `(θ(t), θ'(t))` with `t` measured
/// from the start of the run and must vanish at `T`. Time integrals use the
/// trapezoid rule over the knots; `F` is re-evaluated from the stored segments.
pub fn weak_form_residuals<P>(traj: &Trajectory, model: &Model, modes: &[usize], profile: P) -> Result<Vec<f64>>
where
    P: Fn(f64) -> (f64, f64),
{
    if traj.truncation() != model.m() {
        return Err(Error::SizeMismatch {
            expected: model.m(),
            got: traj.truncation(),
        });
    }
    for &j in modes {
        if j == 0 || j > model.m() {
            return Err(Error::InvalidIndex(j));
        }
    }
    let start = traj.start_index();
    let horizon = traj.end_time() - traj.t0();
    let (theta0, _) = profile(0.0);
    let (theta_end, _) = profile(horizon);
    if theta_end.abs() > 1e-12 * (1.0 + theta0.abs()) {
        return Err(Error::InvalidArgument(format!(
            "test function must vanish at T = {horizon}, got {theta_end}"
        )));
    }
    let lambda = model.spectrum().eigenvalues();
    let d = model.damping();
    let h = traj.h();
    let last = traj.len() - 1;

    let mut lhs = vec![0.0; modes.len()];
    let mut rhs = vec![0.0; modes.len()];
    for i in start..traj.len() {
        let t = traj.time_of(i) - traj.t0();
        let w = if i == start || i == last { 0.5 * h } else { h };
        let (theta, dtheta) = profile(t);
        let forcing = model.forcing(&traj.segment_ending_at(i))?;
        let g = traj.knots()[i].state.coefficients();
        let f = forcing.coefficients.coefficients();
        for (n, &j) in modes.iter().enumerate() {
            let k = j - 1;
            lhs[n] += w * (-g[k] * dtheta + lambda[k] * g[k] * theta);
            rhs[n] += w * (f[k] - d * g[k]) * theta;
        }
    }
    let g0 = traj.knots()[start].state.coefficients();
    Ok(modes
        .iter()
        .enumerate()
        .map(|(n, &j)| (lhs[n] - rhs[n] - g0[j - 1] * theta0).abs())
        .collect())
}

/// Single-mode form of [`weak_form_residuals`].
pub fn weak_form_residual<P>(traj: &Trajectory, model: &Model, mode: usize, profile: P) -> Result<f64>
where
    P: Fn(f64) -> (f64, f64),
{
    Ok(weak_form_residuals(traj, model, &[mode], profile)?[0])
}
