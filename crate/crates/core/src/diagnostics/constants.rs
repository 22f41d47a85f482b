use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelConstants;

/// Hypothesis constants of a model plus the radii and stability constants derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantsLedger {
    pub l_b: f64,
    pub l_bop: f64,
    pub l_eta: f64,
    pub m_b: f64,
    pub lambda1: f64,
    pub measure: f64,
    pub d: f64,
    pub r: f64,
    pub l_vt: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub epsilon0: f64,
    /// `C_{v,T}`.
    pub c_vt: f64,
    /// `D_{v,T}`.
    pub d_vt: f64,
    /// `R₀²`, the squared radius of the first absorbing ball.
    pub r0_sq: f64,
    pub r0: f64,
    pub r_alpha: f64,
    /// `R̂_α = R₀ + R_α`.
    pub r_hat: f64,
    /// `R⁰`, the Lipschitz radius of the phase space.
    pub lip_radius: f64,
}

impl ConstantsLedger {
    /// `M_b √|Ω|`.
    pub fn forcing_bound(&self) -> f64 {
        self.m_b * self.measure.sqrt()
    }

    /// `M_b² |Ω|`.
    pub fn forcing_bound_sq(&self) -> f64 {
        self.m_b * self.m_b * self.measure
    }
}

/// `L_b L_B (1 + L_{v,T} L_η)`.
pub fn c_vt(l_b: f64, l_bop: f64, l_vt: f64, l_eta: f64) -> f64 {
    l_b * l_bop * (1.0 + l_vt * l_eta)
}

/// `1 + C/(C - λ₁) (e^{(C-λ₁)t} - 1)`, continuous through `C = λ₁`.
pub fn gronwall_factor(c: f64, lambda1: f64, t: f64) -> f64 {
    let x = c - lambda1;
    if x.abs() < 1e-8 {
        let y = x * t;
        1.0 + c * t * (1.0 + y / 2.0 + y * y / 6.0)
    } else {
        1.0 + c / x * (x * t).exp_m1()
    }
}

/// `2 T^{1/2} (1/2)^{1/2} e^{-1/2} C + [1 + C/(C - λ₁)(e^{(C-λ₁)T} - 1)]`.
pub fn d_vt(c: f64, lambda1: f64, horizon: f64) -> f64 {
    2.0 * horizon.sqrt() * 0.5f64.sqrt() * (-0.5f64).exp() * c + gronwall_factor(c, lambda1, horizon)
}

/// Derives `C_{v,T}`, `D_{v,T}` and the absorbing radii. `lip_radius` defaults to
/// `2 R̂_α + M_b √|Ω|`.
pub fn compute_constants(
    model: &ModelConstants,
    l_vt: f64,
    horizon: f64,
    alpha: f64,
    epsilon: f64,
    epsilon0: f64,
    lip_radius: Option<f64>,
) -> Result<ConstantsLedger> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (1/2, 1), got {alpha}")));
    }
    if !(l_vt >= 0.0 && horizon >= 0.0 && epsilon > 0.0 && epsilon0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need L_vT ≥ 0, T ≥ 0 and positive margins; got L_vT={l_vt}, T={horizon}, ε={epsilon}, ε₀={epsilon0}"
        )));
    }
    let lambda1 = model.lambda1;
    let fb = model.m_b * model.measure.sqrt();
    let c = c_vt(model.l_b, model.l_bop, l_vt, model.l_eta);
    let r0_sq = (1.0 + 3.0 / lambda1) * fb * fb + epsilon0;
    let r0 = r0_sq.sqrt();
    let a = alpha - 0.5;
    let r_alpha = a.powf(a) * (fb / lambda1.sqrt() + epsilon) + alpha.powf(alpha) / (1.0 - alpha) * fb;
    let r_hat = r0 + r_alpha;
    Ok(ConstantsLedger {
        l_b: model.l_b,
        l_bop: model.l_bop,
        l_eta: model.l_eta,
        m_b: model.m_b,
        lambda1,
        measure: model.measure,
        d: model.d,
        r: model.r,
        l_vt,
        horizon,
        alpha,
        epsilon,
        epsilon0,
        c_vt: c,
        d_vt: d_vt(c, lambda1, horizon),
        r0_sq,
        r0,
        r_alpha,
        r_hat,
        lip_radius: lip_radius.unwrap_or(2.0 * r_hat + fb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_from_parts() {
        assert_eq!(c_vt(2.0, 1.0, 3.0, 0.5), 5.0);
    }

    #[test]
    fn limit_branch() {
        assert_eq!(gronwall_factor(1.0, 1.0, 1.0), 2.0);
        let at = d_vt(1.0, 1.0, 1.0);
        for off in [-1e-9, 1e-9] {
            assert!((d_vt(1.0 + off, 1.0, 1.0) - at).abs() <= 1e-6 * at);
        }
        // the regular branch agrees just outside the switch
        let below = gronwall_factor(1.0 + 1.01e-8, 1.0, 1.0);
        assert!((below - 2.0).abs() < 1e-7);
    }

    #[test]
    fn alpha_range_enforced() {
        let m = ModelConstants {
            l_b: 1.0,
            l_bop: 1.0,
            l_eta: 0.0,
            m_b: 1.0,
            lambda1: 1.0,
            measure: 1.0,
            d: 0.0,
            r: 1.0,
        };
        for a in [0.5, 1.0, 0.2] {
            assert!(compute_constants(&m, 1.0, 1.0, a, 0.01, 0.01, None).is_err());
        }
        assert!(compute_constants(&m, 1.0, 1.0, 0.75, 0.01, 0.01, None).is_ok());
    }
}
