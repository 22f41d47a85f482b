//! Exponential time differencing for the Galerkin system
//!
//! ```text
//! ġ_k + (λ_k + d) g_k = ⟨F(u_t), e_k⟩,   k = 1..m,
//! ```
//!
//! with the delayed argument read from the stored history. Each mode's linear
//! part is propagated exactly; the delay `η(u_t)` is evaluated explicitly from
//! the segment ending at the start of the step.
//!
//! Runs are deterministic and use no absolute times in the arithmetic, so a
//! run of length `t + s` and a run of length `t` restarted from the final
//! segment of a run of length `s` agree bit for bit, provided every delayed
//! read lands at least one step behind the frontier (`η ≥ h`).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{interval_weak_sup, HistorySegment, Trajectory, TrajectoryKnot};
use crate::model::{Forcing, Model};
use crate::spectral::SpectralField;

/// Coefficient magnitude treated as a blow-up.
pub const OVERFLOW_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Etd1,
    Etd2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub h: f64,
    pub horizon: f64,
    pub scheme: Scheme,
}

impl IntegratorConfig {
    pub fn new(h: f64, horizon: f64, scheme: Scheme) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be nonnegative, got {horizon}")));
        }
        Ok(Self { h, horizon, scheme })
    }

    pub fn with_horizon(self, horizon: f64) -> Self {
        Self { horizon, ..self }
    }

    pub fn with_step(self, h: f64) -> Self {
        Self { h, ..self }
    }

    /// `T/h`, which must be an integer.
    pub fn steps(&self) -> Result<usize> {
        grid_count(self.horizon, self.h, "T/h")
    }
}

/// `x / h` as an exact integer count, or a misalignment error.
pub fn grid_count(x: f64, h: f64, what: &str) -> Result<usize> {
    let ratio = x / h;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * n.max(1.0) || n < 0.0 {
        return Err(Error::Misaligned(format!("{what} = {ratio} is not an integer")));
    }
    Ok(n as usize)
}

/// `(1 - e^{-z}) / z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(e^{-z} - 1 + z) / z²`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0 + z * z * z * z / 720.0
    } else {
        ((-z).exp_m1() + z) / (z * z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DelayRecord {
    pub t: f64,
    pub eta: f64,
    pub delayed_time: f64,
    pub cutoff_factor: f64,
}

/// `S_T φ` together with the trajectory that produced it.
#[derive(Clone, Debug)]
pub struct SemigroupResult {
    pub trajectory: Trajectory,
    /// One record per simulated knot, `t0..=T`.
    pub delays: Vec<DelayRecord>,
}

impl SemigroupResult {
    pub fn final_segment(&self) -> HistorySegment {
        self.trajectory.final_segment()
    }
}

/// Sliding maximum of per-interval weak-norm sups, for the cutoff argument.
#[derive(Debug, Default)]
struct WeakSupWindow {
    entries: VecDeque<(usize, f64)>,
}

impl WeakSupWindow {
    fn push(&mut self, index: usize, value: f64) {
        while self.entries.back().is_some_and(|&(_, v)| v <= value) {
            self.entries.pop_back();
        }
        self.entries.push_back((index, value));
    }

    fn max_from(&mut self, first: usize) -> f64 {
        while self.entries.front().is_some_and(|&(i, _)| i < first) {
            self.entries.pop_front();
        }
        self.entries.front().map_or(0.0, |&(_, v)| v)
    }
}

/// Advances one trajectory with a fixed model and configuration.
pub struct Integrator<'m> {
    model: &'m Model,
    scheme: Scheme,
    decay: Vec<f64>,
    phi1_h: Vec<f64>,
    phi2_h: Vec<f64>,
    trajectory: Trajectory,
    delays: Vec<DelayRecord>,
    weak_weights: Vec<f64>,
    weak_window: Option<WeakSupWindow>,
    remaining: usize,
}

impl<'m> Integrator<'m> {
    pub fn new(phi: &HistorySegment, t0: f64, model: &'m Model, config: &IntegratorConfig) -> Result<Self> {
        if phi.truncation() != model.m() {
            return Err(Error::SizeMismatch {
                expected: model.m(),
                got: phi.truncation(),
            });
        }
        let h = config.h;
        if (phi.step() - h).abs() > 1e-12 * h {
            return Err(Error::Misaligned(format!(
                "history knot spacing {} differs from step {h}",
                phi.step()
            )));
        }
        let w = grid_count(model.window(), h, "r/h")?;
        if w != phi.steps() {
            return Err(Error::Misaligned(format!(
                "history holds {} steps but r/h = {w}",
                phi.steps()
            )));
        }
        let remaining = config.steps()?;

        let rates = model.rates();
        let decay = rates.iter().map(|mu| (-mu * h).exp()).collect();
        let phi1_h = rates.iter().map(|mu| h * phi1(mu * h)).collect();
        let phi2_h = rates.iter().map(|mu| h * phi2(mu * h)).collect();

        let trajectory = Trajectory::from_history(phi, t0);
        let weak_weights = model.spectrum().norm_weights(-0.5);
        let weak_window = model.cutoff().map(|_| {
            let mut win = WeakSupWindow::default();
            for i in 0..w.saturating_sub(1) {
                win.push(i, interval_weak_sup(trajectory.knots(), i, h, &weak_weights));
            }
            win
        });
        Ok(Self {
            model,
            scheme: config.scheme,
            decay,
            phi1_h,
            phi2_h,
            trajectory,
            delays: Vec::with_capacity(remaining + 1),
            weak_weights,
            weak_window,
            remaining,
        })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    /// The nonlinearity on the segment ending at knot `n`. With a cutoff, the
    /// weak sup reuses finalized intervals and recomputes only the last one.
    fn forcing_at(&mut self, n: usize) -> Result<Forcing> {
        let w = self.trajectory.window_steps();
        let h = self.trajectory.h();
        let seg = self.trajectory.segment_ending_at(n);
        let model = self.model;
        match (model.cutoff(), self.weak_window.as_mut()) {
            (Some(cutoff), Some(win)) => {
                let strong = model.spectrum().frac_norm(0.5, seg.end_state());
                let norm = if model.damping() == 0.0 {
                    strong
                } else {
                    let fresh = interval_weak_sup(self.trajectory.knots(), n - 1, h, &self.weak_weights);
                    let weak = win.max_from(n - w).max(fresh);
                    strong + model.damping() * weak
                };
                model.forcing_with_norm(&seg, Some((cutoff, norm)))
            }
            _ => model.forcing_unmodified(&seg),
        }
    }

    fn rhs(&self, state: &[f64], forcing: &[f64]) -> SpectralField {
        SpectralField::from_coefficients(
            state
                .iter()
                .zip(forcing)
                .zip(self.model.rates())
                .map(|((g, f), mu)| f - mu * g)
                .collect(),
        )
    }

    /// Evaluates `F` at the frontier, finalizes the frontier derivative and
    /// records the delay.
    fn settle_frontier(&mut self) -> Result<Forcing> {
        let n = self.trajectory.len() - 1;
        let f = self.forcing_at(n)?;
        let deriv = self.rhs(self.trajectory.knots()[n].state.coefficients(), f.coefficients.coefficients());
        let start = self.trajectory.start_index();
        if n == start {
            self.trajectory.set_start_rhs(deriv);
        } else {
            self.trajectory.knot_mut(n).derivative = deriv;
        }
        if let Some(win) = self.weak_window.as_mut() {
            let v = interval_weak_sup(self.trajectory.knots(), n - 1, self.trajectory.h(), &self.weak_weights);
            win.push(n - 1, v);
        }
        let t = self.trajectory.time_of(n);
        self.delays.push(DelayRecord {
            t,
            eta: f.eta,
            delayed_time: t - f.eta,
            cutoff_factor: f.cutoff_factor,
        });
        Ok(f)
    }

    fn check_finite(&self, t: f64, state: &[f64]) -> Result<()> {
        for (k, v) in state.iter().enumerate() {
            if !(v.is_finite() && v.abs() <= OVERFLOW_LIMIT) {
                return Err(Error::Overflow {
                    t,
                    mode: k + 1,
                    value: *v,
                });
            }
        }
        Ok(())
    }

    /// Advances one step and returns the new frontier knot.
    pub fn step(&mut self) -> Result<&TrajectoryKnot> {
        let f_n = self.settle_frontier()?;
        let n = self.trajectory.len() - 1;
        let t_next = self.trajectory.time_of(n + 1);
        let u_n = self.trajectory.knots()[n].state.coefficients();
        let fc = f_n.coefficients.coefficients();
        let predicted: Vec<f64> = (0..u_n.len())
            .map(|k| self.decay[k] * u_n[k] + self.phi1_h[k] * fc[k])
            .collect();
        self.check_finite(t_next, &predicted)?;
        let deriv = self.rhs(&predicted, fc);
        self.trajectory.push(TrajectoryKnot::new(
            t_next,
            SpectralField::from_coefficients(predicted),
            deriv,
        ));

        if self.scheme == Scheme::Etd2 {
            let f_pred = self.forcing_at(n + 1)?;
            let fp = f_pred.coefficients.coefficients();
            let corrected: Vec<f64> = {
                let pred = self.trajectory.knots()[n + 1].state.coefficients();
                (0..pred.len())
                    .map(|k| pred[k] + self.phi2_h[k] * (fp[k] - fc[k]))
                    .collect()
            };
            self.check_finite(t_next, &corrected)?;
            let deriv = self.rhs(&corrected, fp);
            let knot = self.trajectory.knot_mut(n + 1);
            knot.state = SpectralField::from_coefficients(corrected);
            knot.derivative = deriv;
        }
        self.remaining = self.remaining.saturating_sub(1);
        Ok(&self.trajectory.knots()[n + 1])
    }

    pub fn run(mut self) -> Result<SemigroupResult> {
        while self.remaining > 0 {
            self.step()?;
        }
        self.settle_frontier()?;
        Ok(SemigroupResult {
            trajectory: self.trajectory,
            delays: self.delays,
        })
    }
}

/// Runs the Galerkin system from `φ` (last knot at `t = 0`) for `config.horizon`.
pub fn integrate(phi: &HistorySegment, model: &Model, config: &IntegratorConfig) -> Result<SemigroupResult> {
    Integrator::new(phi, 0.0, model, config)?.run()
}

/// `S_t φ`.
pub fn semigroup_apply(phi: &HistorySegment, t: f64, model: &Model, config: &IntegratorConfig) -> Result<HistorySegment> {
    grid_count(t, config.h, "t/h")?;
    if t == 0.0 {
        return Ok(phi.clone());
    }
    Ok(integrate(phi, model, &config.with_horizon(t))?.final_segment())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BirthFunction, DelayFunctional, KernelSpec};
    use crate::spectral::{Domain1D, Projector, QuadratureGrid, Spectrum};
    use std::f64::consts::PI;

    fn model(m: usize, birth: BirthFunction, delay: DelayFunctional, d: f64) -> Model {
        let dom = Domain1D::new(PI).unwrap();
        let p = Projector::new(
            Spectrum::new(dom, m).unwrap(),
            QuadratureGrid::gauss_legendre(&dom, (8 * m + 1).max(65)).unwrap(),
        )
        .unwrap();
        Model::new(p, KernelSpec::new(0.1, 0.1).unwrap(), birth, delay, d, 1.0).unwrap()
    }

    fn point_delay() -> DelayFunctional {
        DelayFunctional::PointState { eta_min: 0.1, r: 1.0, c: 1.0 }
    }

    #[test]
    fn phi_functions_are_continuous_across_branches() {
        for z in [1e-4, 1e-2] {
            let below = z * (1.0 - 1e-12);
            assert!((phi1(below) - phi1(z)).abs() < 1e-14);
            assert!((phi2(below) - phi2(z)).abs() < 1e-13);
        }
        assert_eq!(phi1(0.0), 1.0);
        assert_eq!(phi2(0.0), 0.5);
        assert!((phi1(2.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_decay_is_exact() {
        let m = model(4, BirthFunction::Zero, point_delay(), 0.1);
        let phi = HistorySegment::constant(SpectralField::unit(4, 1, 1.0), 10, 0.1).unwrap();
        let cfg = IntegratorConfig::new(0.1, 3.0, Scheme::Etd1).unwrap();
        let res = integrate(&phi, &m, &cfg).unwrap();
        for (i, k) in res.trajectory.simulated().iter().enumerate() {
            let exact = (-1.1 * i as f64 * 0.1).exp();
            let g = k.state.coefficients()[0];
            assert!((g - exact).abs() <= 1e-13 * exact, "{g} vs {exact}");
        }
    }

    #[test]
    fn zero_history_stays_zero() {
        let m = model(8, BirthFunction::NicholsonClamped { p: 2.0, cap: 50.0 }, point_delay(), 0.1);
        let phi = HistorySegment::zeros(8, 20, 0.05).unwrap();
        let cfg = IntegratorConfig::new(0.05, 2.0, Scheme::Etd2).unwrap();
        let res = integrate(&phi, &m, &cfg).unwrap();
        assert!(res
            .trajectory
            .knots()
            .iter()
            .all(|k| k.state.coefficients().iter().all(|g| *g == 0.0)));
        assert!(res.delays.iter().all(|d| d.eta == 1.0));
    }

    #[test]
    fn misaligned_grids_are_rejected() {
        let m = model(4, BirthFunction::Zero, point_delay(), 0.1);
        let phi = HistorySegment::zeros(4, 10, 0.1).unwrap();
        let bad_t = IntegratorConfig::new(0.1, 1.05, Scheme::Etd1).unwrap();
        assert!(matches!(integrate(&phi, &m, &bad_t), Err(Error::Misaligned(_))));
        let bad_h = IntegratorConfig::new(0.2, 1.0, Scheme::Etd1).unwrap();
        assert!(matches!(integrate(&phi, &m, &bad_h), Err(Error::Misaligned(_))));
        let cfg = IntegratorConfig::new(0.1, 1.0, Scheme::Etd1).unwrap();
        assert!(semigroup_apply(&phi, 0.25, &m, &cfg).is_err());
    }

    #[test]
    fn semigroup_at_zero_is_identity() {
        let m = model(4, BirthFunction::Zero, point_delay(), 0.1);
        let phi = HistorySegment::constant(SpectralField::unit(4, 2, 0.3), 10, 0.1).unwrap();
        let cfg = IntegratorConfig::new(0.1, 1.0, Scheme::Etd1).unwrap();
        assert_eq!(semigroup_apply(&phi, 0.0, &m, &cfg).unwrap(), phi);
    }

    #[test]
    fn overflow_aborts() {
        // A huge constant birth drives coefficients past the guard.
        let m = model(4, BirthFunction::Constant { c: 1e14 }, point_delay(), 0.1);
        let phi = HistorySegment::zeros(4, 10, 0.1).unwrap();
        let cfg = IntegratorConfig::new(0.1, 5.0, Scheme::Etd1).unwrap();
        assert!(matches!(integrate(&phi, &m, &cfg), Err(Error::Overflow { .. })));
    }

    #[test]
    fn delayed_time_stays_in_window() {
        let m = model(8, BirthFunction::NicholsonClamped { p: 2.0, cap: 50.0 }, point_delay(), 0.1);
        let phi = HistorySegment::constant(SpectralField::unit(8, 1, 1.5), 20, 0.05).unwrap();
        let cfg = IntegratorConfig::new(0.05, 4.0, Scheme::Etd2).unwrap();
        let res = integrate(&phi, &m, &cfg).unwrap();
        assert_eq!(res.delays.len(), res.trajectory.simulated().len());
        for d in &res.delays {
            assert!(d.delayed_time >= d.t - 1.0 - 1e-12 && d.delayed_time <= d.t);
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let m = model(8, BirthFunction::NicholsonClamped { p: 2.0, cap: 50.0 }, point_delay(), 0.1);
        let phi = HistorySegment::constant(SpectralField::unit(8, 1, 1.5), 20, 0.05).unwrap();
        let cfg = IntegratorConfig::new(0.05, 2.0, Scheme::Etd1).unwrap();
        let a = integrate(&phi, &m, &cfg).unwrap();
        let b = integrate(&phi, &m, &cfg).unwrap();
        assert_eq!(a.trajectory.knots(), b.trajectory.knots());
    }
}
