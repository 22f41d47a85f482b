use serde::Serialize;

use crate::error::Result;
use crate::history::{sliding_max, HistorySegment};
use crate::integrator::{integrate, IntegratorConfig};
use crate::model::Model;

use super::{c_vt, d_vt, gronwall_factor, worst, BoundReport, ALGEBRAIC_TOLERANCE};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DependenceOutcome {
    /// Measured Lipschitz constant of the second trajectory on `[-r, T]`.
    pub l_vt: f64,
    pub c_vt: f64,
    pub d_vt: f64,
    /// `ρ(φ, ψ)`.
    pub rho0: f64,
    /// `max_t ρ(u_t, v_t)`.
    pub max_rho: f64,
    /// Worst-margin report for each of `Eq20a`, `Eq21` and `Eq20a-rho`.
    pub reports: Vec<BoundReport>,
}

impl DependenceOutcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// Runs `φ` and `ψ` to `config.horizon` and checks, at every knot,
///
/// * `Eq20a`: `||A^{1/2}(u-v)(t)|| + ||A^{-1/2}(u_t-v_t)||_C ≤ e^{-λ₁t}||A^{1/2}(φ-ψ)(0)|| + D_{v,T}||A^{-1/2}(φ-ψ)||_C`;
/// * `Eq21`: `||A^{-1/2}(u_t-v_t)||_C ≤ ||A^{-1/2}(φ-ψ)||_C [1 + C/(C-λ₁)(e^{(C-λ₁)t} - 1)]`;
/// * `Eq20a-rho`: `ρ(u_t, v_t) ≤ D_{v,T} ρ(φ, ψ)`,
///
/// with `L_{v,T}` measured on `v`.
pub fn continuous_dependence_check(
    phi: &HistorySegment,
    psi: &HistorySegment,
    model: &Model,
    config: &IntegratorConfig,
) -> Result<DependenceOutcome> {
    let u = integrate(phi, model, config)?.trajectory;
    let v = integrate(psi, model, config)?.trajectory;
    let spectrum = model.spectrum();
    let lambda1 = spectrum.lambda1();
    let mc = model.constants()?;

    let l_vt = v.interval_slopes(spectrum).into_iter().fold(0.0, f64::max);
    let c = c_vt(mc.l_b, mc.l_bop, l_vt, mc.l_eta);
    let d = d_vt(c, lambda1, config.horizon);

    let weak = sliding_max(&u.interval_weak_distances(&v, spectrum)?, u.window_steps());
    let start = u.start_index();
    let strong: Vec<f64> = (start..u.len())
        .map(|i| spectrum.frac_norm(0.5, &u.knots()[i].state.sub(&v.knots()[i].state)))
        .collect();
    let (weak0, strong0) = (weak[0], strong[0]);
    let rho0 = weak0 + strong0;

    let mut e20a = Vec::with_capacity(strong.len());
    let mut e21 = Vec::with_capacity(strong.len());
    let mut erho = Vec::with_capacity(strong.len());
    let mut max_rho: f64 = 0.0;
    for (j, (w, s)) in weak.iter().zip(&strong).enumerate() {
        let t = u.time_of(start + j) - u.t0();
        let rho = w + s;
        max_rho = max_rho.max(rho);
        e20a.push(BoundReport::new(
            "Eq20a",
            t,
            rho,
            (-lambda1 * t).exp() * strong0 + d * weak0,
            ALGEBRAIC_TOLERANCE,
        ));
        e21.push(BoundReport::new(
            "Eq21",
            t,
            *w,
            weak0 * gronwall_factor(c, lambda1, t),
            ALGEBRAIC_TOLERANCE,
        ));
        erho.push(BoundReport::new("Eq20a-rho", t, rho, d * rho0, ALGEBRAIC_TOLERANCE));
    }
    let reports = [e20a, e21, erho].into_iter().filter_map(worst).collect();
    Ok(DependenceOutcome {
        l_vt,
        c_vt: c,
        d_vt: d,
        rho0,
        max_rho,
        reports,
    })
}
