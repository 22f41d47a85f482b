//! Numerical checks of the a priori estimates along computed trajectories.
//!
//! Every check produces [`BoundReport`]s keyed by the equation id of the
//! estimate it certifies. Ensemble-based checks are empirical evidence, not
//! proofs.

mod absorbing;
mod constants;
mod convergence;
mod dependence;
mod energy;
mod ensemble;
mod lipschitz;
mod weak_form;

use std::collections::BTreeMap;

use serde::Serialize;

pub use absorbing::{absorbing_entry, v_alpha_profile, EntryTimes};
pub use constants::{compute_constants, c_vt, d_vt, gronwall_factor, ConstantsLedger};
pub use convergence::{galerkin_convergence, ConvergenceTable};
pub use dependence::{continuous_dependence_check, DependenceOutcome};
pub use energy::{energy_ledger, energy_tolerance};
pub use ensemble::{attractor_sample, invariance_check_hi, AttractorSample, InvarianceOutcome, Snapshot};
pub use lipschitz::{forcing_bound_check, lipschitz_chain_check, LipschitzSample};
pub use weak_form::{weak_form_residual, weak_form_residuals};

/// Slack for algebraic identities and pointwise bounds without time-stepping error.
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub eq: String,
    pub t: f64,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub context: String,
}

impl BoundReport {
    /// `measured ≤ bound` up to `tolerance`.
    pub fn new(eq: &str, t: f64, measured: f64, bound: f64, tolerance: f64) -> Self {
        let margin = bound - measured;
        Self {
            eq: eq.to_string(),
            t,
            measured,
            bound,
            margin,
            pass: margin >= -tolerance && margin.is_finite(),
            tolerance,
            context: String::new(),
        }
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = context.into();
        self
    }
}

/// Aggregate of the reports carrying one equation id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSummary {
    pub count: usize,
    pub failures: usize,
    pub worst_margin: f64,
    pub pass: bool,
}

pub fn summarize(reports: &[BoundReport]) -> BTreeMap<String, CheckSummary> {
    let mut out: BTreeMap<String, CheckSummary> = BTreeMap::new();
    for r in reports {
        let e = out.entry(r.eq.clone()).or_insert(CheckSummary {
            count: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            pass: true,
        });
        e.count += 1;
        if !r.pass {
            e.failures += 1;
            e.pass = false;
        }
        e.worst_margin = e.worst_margin.min(r.margin);
    }
    out
}

/// The worst-margin report of each equation id plus up to `max_failures`
/// failing reports per id, sorted by id then time.
pub fn condense(reports: &[BoundReport], max_failures: usize) -> Vec<BoundReport> {
    let mut by_eq: BTreeMap<&str, Vec<&BoundReport>> = BTreeMap::new();
    for r in reports {
        by_eq.entry(&r.eq).or_default().push(r);
    }
    let mut out = Vec::new();
    for (_, group) in by_eq {
        let worst = group
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("nonempty group");
        let mut kept: Vec<BoundReport> = group
            .iter()
            .filter(|r| !r.pass)
            .take(max_failures)
            .map(|r| (*r).clone())
            .collect();
        if !kept.iter().any(|r| r == *worst) {
            kept.push((*worst).clone());
        }
        kept.sort_by(|a, b| a.t.total_cmp(&b.t));
        out.extend(kept);
    }
    out
}

/// The report with the smallest margin, as representative of a time series.
pub fn worst(reports: Vec<BoundReport>) -> Option<BoundReport> {
    reports.into_iter().min_by(|a, b| a.margin.total_cmp(&b.margin))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_follows_tolerance() {
        assert!(BoundReport::new("X", 0.0, 1.0, 1.0, 0.0).pass);
        assert!(BoundReport::new("X", 0.0, 1.0 + 1e-7, 1.0, 1e-6).pass);
        assert!(!BoundReport::new("X", 0.0, 1.1, 1.0, 1e-6).pass);
        assert!(!BoundReport::new("X", 0.0, f64::NAN, 1.0, 1e-6).pass);
    }

    #[test]
    fn condense_keeps_worst_and_failures() {
        let reports = vec![
            BoundReport::new("A", 0.0, 0.5, 1.0, 0.0),
            BoundReport::new("A", 1.0, 0.9, 1.0, 0.0),
            BoundReport::new("B", 0.0, 2.0, 1.0, 0.0),
            BoundReport::new("B", 1.0, 3.0, 1.0, 0.0),
        ];
        let c = condense(&reports, 10);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].t, 1.0);
        let s = summarize(&reports);
        assert!(s["A"].pass);
        assert_eq!(s["B"].failures, 2);
        assert_eq!(s["B"].worst_margin, -2.0);
    }
}
