use serde::Serialize;

use crate::error::Result;
use crate::history::{sup_weak_distance, HistorySegment};
use crate::model::Model;

use super::{c_vt, BoundReport, ALGEBRAIC_TOLERANCE};

/// Slack for the pointwise bound `||F|| ≤ M_b √|Ω|`.
const FORCING_BOUND_TOLERANCE: f64 = 1e-8;

/// `Fbound`: `||P_m F(φ)|| ≤ M_b √|Ω|` for each segment.
pub fn forcing_bound_check(model: &Model, segments: &[HistorySegment]) -> Result<Vec<BoundReport>> {
    let bound = model.birth().bound() * model.spectrum().domain().measure().sqrt();
    segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let f = model.forcing(&s.view())?;
            Ok(BoundReport::new("Fbound", 0.0, f.coefficients.l2_norm(), bound, FORCING_BOUND_TOLERANCE)
                .with_context(format!("segment {i}")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzSample {
    /// `||F(u) - F(v)||`.
    pub difference: f64,
    /// `||A^{-1/2}(u - v)||_C`.
    pub weak_distance: f64,
    /// `|||v|||`.
    pub l_v: f64,
    pub report: BoundReport,
}

/// `Eq19`: `||F(u) - F(v)|| ≤ L_b L_B (1 + |||v||| L_η) ||A^{-1/2}(u - v)||_C` on segment
/// pairs, with `L_B` the bound of the kernel operator at the model's truncation.
pub fn lipschitz_chain_check(model: &Model, pairs: &[(HistorySegment, HistorySegment)]) -> Result<Vec<LipschitzSample>> {
    let spectrum = model.spectrum();
    let l_b = model.birth().lipschitz();
    let l_bop = model.kernel().lb_truncated();
    let l_eta = model.delay().lipschitz();
    pairs
        .iter()
        .enumerate()
        .map(|(i, (u, v))| {
            let fu = model.forcing(&u.view())?;
            let fv = model.forcing(&v.view())?;
            let difference = fu.coefficients.sub(&fv.coefficients).l2_norm();
            let weak_distance = sup_weak_distance(&u.view(), &v.view(), spectrum)?;
            let l_v = v.view().lip_seminorm(spectrum);
            let bound = c_vt(l_b, l_bop, l_v, l_eta) * weak_distance;
            Ok(LipschitzSample {
                difference,
                weak_distance,
                l_v,
                report: BoundReport::new("Eq19", 0.0, difference, bound, ALGEBRAIC_TOLERANCE)
                    .with_context(format!("pair {i}")),
            })
        })
        .collect()
}
