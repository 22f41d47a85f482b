//! Checks against values computed independently of the library: closed forms,
//! 50-digit reference constants and convergence orders.

use std::f64::consts::{E, PI};

use sddpde::config::{BirthConfig, DelayConfig, RunConfig};
use sddpde::diagnostics::{attractor_sample, galerkin_convergence};
use sddpde::history::{HistorySegment, Trajectory};
use sddpde::integrator::{integrate, Scheme};
use sddpde::runner::{ensemble_members, prepare};
use sddpde::spectral::SpectralField;

/// Reference values from 50-digit arithmetic (canonical radii, `α = 0.75`, `ε = ε₀ = 0.01`).
const R_ALPHA: f64 = 5.133_243_715_221_898;
const R0_SQ: f64 = 6.812_693_305_402_181;
const R_HAT: f64 = 7.743_357_372_785_910;
const LIP_RADIUS: f64 = 16.790_813_409_918_404;
const L_ETA: f64 = 0.584_567_147_554_496_1;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn canonical_radii_match_high_precision_values() {
    let (_, ledger) = prepare(&RunConfig::canonical()).unwrap();
    assert!(rel(ledger.r_alpha, R_ALPHA) < 1e-13, "{}", ledger.r_alpha);
    assert!(rel(ledger.r0_sq, R0_SQ) < 1e-13, "{}", ledger.r0_sq);
    assert!(rel(ledger.r_hat, R_HAT) < 1e-13, "{}", ledger.r_hat);
    assert!(rel(ledger.lip_radius, LIP_RADIUS) < 1e-13, "{}", ledger.lip_radius);
    assert!(rel(ledger.l_eta, L_ETA) < 1e-13, "{}", ledger.l_eta);
    assert!(rel(ledger.m_b, 2.0 / E) < 1e-15);
    assert_eq!(ledger.l_b, 2.0);
    assert_eq!(ledger.lambda1, 1.0);
}

#[test]
fn kernel_operator_bound_is_frozen() {
    let cfg = RunConfig::canonical();
    let model = cfg.build_model().unwrap();
    let est = model.lb_estimate().unwrap();
    assert!(est.stabilized(1e-3));
    let l_bop = model.constants().unwrap().l_bop;
    assert!((l_bop - 1.858).abs() < 1e-3, "{l_bop}");
}

#[test]
fn constant_birth_forcing_is_projected_constant() {
    let c = 0.7;
    let mut cfg = RunConfig::canonical();
    cfg.model.birth = BirthConfig::Constant { c };
    let model = cfg.build_model().unwrap();
    let phi = cfg.initial_history().unwrap();
    let f = model.forcing(&phi.view()).unwrap();
    for (i, v) in f.coefficients.coefficients().iter().enumerate() {
        let k = (i + 1) as f64;
        let exact = c * (2.0 / PI).sqrt() * (1.0 - (k * PI).cos()) / k;
        assert!((v - exact).abs() < 1e-13, "mode {k}: {v} vs {exact}");
    }
}

/// Max over knots of the coefficient-vector distance to a finer reference run
/// whose knots include every coarse knot.
fn error_against(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    let stride = (coarse.h() / fine.h()).round() as usize;
    coarse
        .simulated()
        .iter()
        .enumerate()
        .map(|(j, k)| {
            let r = &fine.simulated()[j * stride];
            assert!((r.t - k.t).abs() < 1e-9);
            k.state.sub(&r.state).l2_norm()
        })
        .fold(0.0, f64::max)
}

fn constant_delay_run(scheme: Scheme, h: f64) -> Trajectory {
    let mut cfg = RunConfig::canonical();
    cfg.spectral.m = 8;
    cfg.spectral.quad_nodes = Some(129);
    cfg.model.delay = DelayConfig::Constant { eta0: 0.5 };
    cfg.time.h = h;
    cfg.time.horizon = 2.0;
    cfg.time.scheme = scheme;
    cfg.validate().unwrap();
    let model = cfg.build_model().unwrap();
    integrate(&cfg.initial_history().unwrap(), &model, &cfg.integrator_config())
        .unwrap()
        .trajectory
}

#[test]
fn exponential_schemes_reach_their_orders() {
    let reference = constant_delay_run(Scheme::Etd2, 1.0 / 3200.0);
    for (scheme, min_ratio) in [(Scheme::Etd1, 1.9), (Scheme::Etd2, 3.7)] {
        let e1 = error_against(&constant_delay_run(scheme, 0.01), &reference);
        let e2 = error_against(&constant_delay_run(scheme, 0.005), &reference);
        let ratio = e1 / e2;
        assert!(ratio >= min_ratio, "{scheme:?}: errors {e1:.3e}, {e2:.3e}, ratio {ratio:.2}");
    }
}

#[test]
fn constant_birth_galerkin_error_is_the_steady_state_tail() {
    let c = 0.7;
    let mut cfg = RunConfig::canonical();
    cfg.model.birth = BirthConfig::Constant { c };
    cfg.time.horizon = 10.0;
    let table = galerkin_convergence(&cfg, &[8, 16, 32], 257).unwrap();
    let steady = |k: usize| {
        let kf = k as f64;
        c * (2.0 / PI).sqrt() * (1.0 - (kf * PI).cos()) / kf / (kf * kf + cfg.damping)
    };
    for (i, m) in [8usize, 16].iter().enumerate() {
        let tail = ((m + 1)..=32).map(|k| steady(k).powi(2)).sum::<f64>().sqrt();
        assert!(rel(table.errors[i], tail) < 1e-9, "m = {m}: {} vs {tail}", table.errors[i]);
    }
    assert_eq!(table.errors[2], 0.0);
}

#[test]
fn lipschitz_seminorm_dominates_difference_quotients() {
    let mut cfg = RunConfig::canonical();
    cfg.time.horizon = 2.0;
    let model = cfg.build_model().unwrap();
    let run = integrate(&cfg.initial_history().unwrap(), &model, &cfg.integrator_config()).unwrap();
    let seg = run.trajectory.segment_at(2.0).unwrap();
    let spectrum = model.spectrum();
    let lip = seg.lip_seminorm(spectrum);
    let mut rng = sddpde::sampling::UniformStream::new(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let a = -rng.next_f64();
        let b = -rng.next_f64();
        if (a - b).abs() < 1e-6 {
            continue;
        }
        let diff = seg.eval(a).unwrap().sub(&seg.eval(b).unwrap());
        worst = worst.max(spectrum.frac_norm(-0.5, &diff) / (a - b).abs());
    }
    assert!(lip >= worst - 1e-6, "seminorm {lip} < quotient {worst}");
    assert!(worst > 0.5 * lip);
}

#[test]
fn ensemble_sample_ends_inside_the_v_alpha_ball() {
    let cfg = RunConfig::canonical();
    let (model, ledger) = prepare(&cfg).unwrap();
    let members: Vec<HistorySegment> = ensemble_members(&cfg, &ledger, &model).unwrap().into_iter().take(8).collect();
    let sample = attractor_sample(&model, &cfg.integrator_config(), &ledger, &members, &[5.0, 10.0, 20.0]).unwrap();
    let last = sample.snapshots.last().unwrap();
    assert_eq!(last.t, 20.0);
    assert!(last.inside_bv_alpha.iter().all(|b| *b), "{:?}", last.v_alpha);
    assert!(sample.entries.iter().all(|e| e.as_ref().is_some_and(|e| e.ball0.is_some())));
    assert!(sample.snapshots.iter().all(|s| s.diameter.is_finite() && s.diameter >= 0.0));
}

#[test]
fn zero_history_stays_at_the_origin_for_zero_birth() {
    let mut cfg = RunConfig::canonical();
    cfg.model.birth = BirthConfig::Zero;
    cfg.time.horizon = 1.0;
    let model = cfg.build_model().unwrap();
    let phi = HistorySegment::constant(SpectralField::zeros(32), cfg.window_steps(), cfg.time.h).unwrap();
    let run = integrate(&phi, &model, &cfg.integrator_config()).unwrap();
    assert!(run
        .trajectory
        .knots()
        .iter()
        .all(|k| k.state.coefficients().iter().all(|v| *v == 0.0)));
}
