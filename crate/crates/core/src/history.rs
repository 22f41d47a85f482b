//! Dense-in-time storage of Galerkin trajectories and the norms defined on
//! history segments `u_t(θ) = u(t + θ)`, `θ ∈ [-r, 0]`.
//!
//! Between knots the state is the cubic Hermite interpolant of the stored
//! coefficient vectors and their time derivatives, so every segment is C¹ and
//! its Lipschitz seminorm is the sup of the interpolant's slope.
//!
//! Suprema over `θ` are estimated on the knots plus [`SUBSAMPLES`] equispaced
//! points per interval. They are lower bounds for the continuum suprema.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, Spectrum};

/// Sample points per knot interval used for sup estimates.
pub const SUBSAMPLES: usize = 8;

const KNOT_SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryKnot {
    pub t: f64,
    pub state: SpectralField,
    pub derivative: SpectralField,
}

impl TrajectoryKnot {
    pub fn new(t: f64, state: SpectralField, derivative: SpectralField) -> Self {
        Self {
            t,
            state,
            derivative,
        }
    }
}

#[inline]
fn hermite_weights(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    ]
}

#[inline]
fn hermite_slope_weights(s: f64) -> [f64; 4] {
    let s2 = s * s;
    [
        6.0 * s2 - 6.0 * s,
        3.0 * s2 - 4.0 * s + 1.0,
        -6.0 * s2 + 6.0 * s,
        3.0 * s2 - 2.0 * s,
    ]
}

/// Cubic Hermite value at fraction `s` of `[k0, k1]`, coefficient `k`.
#[inline]
fn hermite_at(w: &[f64; 4], h: f64, k0: &TrajectoryKnot, k1: &TrajectoryKnot, k: usize) -> f64 {
    w[0] * k0.state.coefficients()[k]
        + w[1] * h * k0.derivative.coefficients()[k]
        + w[2] * k1.state.coefficients()[k]
        + w[3] * h * k1.derivative.coefficients()[k]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sampled {
    Value,
    Slope,
}

/// Max over the `SUBSAMPLES + 1` sample points of `[a0, a1]` of the weighted
/// norm of the value (or slope) of `a - b`.
fn interval_sup(
    a: (&TrajectoryKnot, &TrajectoryKnot),
    b: Option<(&TrajectoryKnot, &TrajectoryKnot)>,
    h: f64,
    weights: &[f64],
    what: Sampled,
) -> f64 {
    let m = a.0.state.truncation();
    let mut best: f64 = 0.0;
    for j in 0..=SUBSAMPLES {
        let s = j as f64 / SUBSAMPLES as f64;
        let (w, scale) = match what {
            Sampled::Value => (hermite_weights(s), 1.0),
            Sampled::Slope => (hermite_slope_weights(s), 1.0 / h),
        };
        let mut acc = 0.0;
        for k in 0..m {
            let mut v = hermite_at(&w, h, a.0, a.1, k);
            if let Some((b0, b1)) = b {
                v -= hermite_at(&w, h, b0, b1, k);
            }
            v *= scale;
            acc += weights[k] * v * v;
        }
        best = best.max(acc.sqrt());
    }
    best
}

/// Sup of `||A^{-1/2} u||` over the sample points of `[knots[i], knots[i + 1]]`.
pub(crate) fn interval_weak_sup(knots: &[TrajectoryKnot], i: usize, h: f64, weights: &[f64]) -> f64 {
    interval_sup((&knots[i], &knots[i + 1]), None, h, weights, Sampled::Value)
}

/// Borrowed view of `steps + 1` consecutive knots spanning a window of length `steps·h`.
#[derive(Clone, Copy, Debug)]
pub struct Segment<'a> {
    knots: &'a [TrajectoryKnot],
    h: f64,
}

impl<'a> Segment<'a> {
    pub fn new(knots: &'a [TrajectoryKnot], h: f64) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidArgument(
                "a history segment needs at least two knots".into(),
            ));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid knot spacing {h}")));
        }
        Ok(Self { knots, h })
    }

    pub fn knots(&self) -> &'a [TrajectoryKnot] {
        self.knots
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.knots.len() - 1
    }

    /// Window length `r`.
    pub fn window(&self) -> f64 {
        self.steps() as f64 * self.h
    }

    pub fn truncation(&self) -> usize {
        self.knots[0].state.truncation()
    }

    /// `u_t(0)`.
    pub fn end_state(&self) -> &'a SpectralField {
        &self.knots[self.steps()].state
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.steps()].t
    }

    /// Interval index and local fraction for `θ`; `s == 0` marks an exact knot hit.
    fn locate(&self, theta: f64) -> Result<(usize, f64)> {
        let n = self.steps();
        let pos = n as f64 + theta / self.h;
        if !(pos >= -KNOT_SNAP && pos <= n as f64 + KNOT_SNAP) {
            return Err(Error::OutOfWindow {
                theta,
                window: self.window(),
            });
        }
        let nearest = pos.round();
        if (pos - nearest).abs() <= KNOT_SNAP {
            return Ok(((nearest as usize).min(n), 0.0));
        }
        let i = (pos.floor() as usize).min(n - 1);
        Ok((i, pos - i as f64))
    }

    /// `u_t(θ)`.
    pub fn eval(&self, theta: f64) -> Result<SpectralField> {
        let mut out = vec![0.0; self.truncation()];
        self.eval_into(theta, &mut out)?;
        Ok(SpectralField::from_coefficients(out))
    }

    pub(crate) fn eval_into(&self, theta: f64, out: &mut [f64]) -> Result<()> {
        let (i, s) = self.locate(theta)?;
        if s == 0.0 {
            out.copy_from_slice(self.knots[i].state.coefficients());
            return Ok(());
        }
        let w = hermite_weights(s);
        let (k0, k1) = (&self.knots[i], &self.knots[i + 1]);
        for (k, o) in out.iter_mut().enumerate() {
            *o = hermite_at(&w, self.h, k0, k1, k);
        }
        Ok(())
    }

    /// `(d/dθ) u_t(θ)` of the interpolant.
    pub fn slope(&self, theta: f64) -> Result<SpectralField> {
        let (i, s) = self.locate(theta)?;
        if s == 0.0 {
            return Ok(self.knots[i].derivative.clone());
        }
        let w = hermite_slope_weights(s);
        let (k0, k1) = (&self.knots[i], &self.knots[i + 1]);
        let out = (0..self.truncation())
            .map(|k| hermite_at(&w, self.h, k0, k1, k) / self.h)
            .collect();
        Ok(SpectralField::from_coefficients(out))
    }

    fn sup(&self, other: Option<&Segment<'_>>, weights: &[f64], what: Sampled) -> f64 {
        (0..self.steps())
            .map(|i| {
                let a = (&self.knots[i], &self.knots[i + 1]);
                let b = other.map(|o| (&o.knots[i], &o.knots[i + 1]));
                interval_sup(a, b, self.h, weights, what)
            })
            .fold(0.0, f64::max)
    }

    /// `max_θ ||A^{-1/2} u_t(θ)||`.
    pub fn sup_weak_norm(&self, spectrum: &Spectrum) -> f64 {
        self.sup(None, &spectrum.norm_weights(-0.5), Sampled::Value)
    }

    /// `|||u_t|||`, estimated as `max_θ ||A^{-1/2} (d/dθ) u_t(θ)||`.
    pub fn lip_seminorm(&self, spectrum: &Spectrum) -> f64 {
        self.sup(None, &spectrum.norm_weights(-0.5), Sampled::Slope)
    }

    /// Norm of the space of Lipschitz histories: weak sup + Lipschitz seminorm + `||A^{1/2} u_t(0)||`.
    pub fn norm_l(&self, spectrum: &Spectrum) -> f64 {
        self.sup_weak_norm(spectrum)
            + self.lip_seminorm(spectrum)
            + spectrum.frac_norm(0.5, self.end_state())
    }

    /// `||u_t||_{H,d} = ||A^{1/2} u_t(0)|| + d · max_θ ||A^{-1/2} u_t(θ)||`.
    pub fn norm_hd(&self, spectrum: &Spectrum, d: f64) -> f64 {
        let strong = spectrum.frac_norm(0.5, self.end_state());
        if d == 0.0 {
            strong
        } else {
            strong + d * self.sup_weak_norm(spectrum)
        }
    }

    pub fn to_owned(&self) -> HistorySegment {
        HistorySegment {
            knots: self.knots.to_vec(),
            h: self.h,
        }
    }

    fn check_compatible(&self, other: &Segment<'_>) -> Result<()> {
        if self.steps() != other.steps() || self.h != other.h {
            return Err(Error::WindowMismatch {
                left: self.window(),
                right: other.window(),
            });
        }
        if self.truncation() != other.truncation() {
            return Err(Error::SizeMismatch {
                expected: self.truncation(),
                got: other.truncation(),
            });
        }
        Ok(())
    }
}

/// `max_θ ||A^{-1/2}(a - b)(θ)||`.
pub fn sup_weak_distance(a: &Segment<'_>, b: &Segment<'_>, spectrum: &Spectrum) -> Result<f64> {
    a.check_compatible(b)?;
    Ok(a.sup(Some(b), &spectrum.norm_weights(-0.5), Sampled::Value))
}

/// The metric `ρ(a, b) = max_θ ||A^{-1/2}(a - b)(θ)|| + ||A^{1/2}(a(0) - b(0))||`.
pub fn metric_rho(a: &Segment<'_>, b: &Segment<'_>, spectrum: &Spectrum) -> Result<f64> {
    let weak = sup_weak_distance(a, b, spectrum)?;
    let strong = spectrum.frac_norm(0.5, &a.end_state().sub(b.end_state()));
    Ok(weak + strong)
}

/// Owned history segment, used for initial data and for `S_t φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistorySegment {
    knots: Vec<TrajectoryKnot>,
    h: f64,
}

impl HistorySegment {
    pub fn new(knots: Vec<TrajectoryKnot>, h: f64) -> Result<Self> {
        Segment::new(&knots, h)?;
        let m = knots[0].state.truncation();
        if knots
            .iter()
            .any(|k| k.state.truncation() != m || k.derivative.truncation() != m)
        {
            return Err(Error::InvalidArgument(
                "all knots of a segment must share one truncation order".into(),
            ));
        }
        Ok(Self { knots, h })
    }

    /// Samples closed-form coefficient functions `θ ↦ (u(θ), u'(θ))` on the
    /// knot grid `θ_i = (i - steps)·h`.
    pub fn from_fn<F>(steps: usize, h: f64, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> (SpectralField, SpectralField),
    {
        let knots = (0..=steps)
            .map(|i| {
                let theta = (i as f64 - steps as f64) * h;
                let (state, derivative) = f(theta);
                TrajectoryKnot::new(theta, state, derivative)
            })
            .collect();
        Self::new(knots, h)
    }

    pub fn constant(field: SpectralField, steps: usize, h: f64) -> Result<Self> {
        let zero = SpectralField::zeros(field.truncation());
        Self::from_fn(steps, h, |_| (field.clone(), zero.clone()))
    }

    pub fn zeros(m: usize, steps: usize, h: f64) -> Result<Self> {
        Self::constant(SpectralField::zeros(m), steps, h)
    }

    pub fn view(&self) -> Segment<'_> {
        Segment {
            knots: &self.knots,
            h: self.h,
        }
    }

    pub fn knots(&self) -> &[TrajectoryKnot] {
        &self.knots
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn window(&self) -> f64 {
        self.view().window()
    }

    pub fn truncation(&self) -> usize {
        self.knots[0].state.truncation()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            knots: self
                .knots
                .iter()
                .map(|k| TrajectoryKnot::new(k.t, k.state.scaled(factor), k.derivative.scaled(factor)))
                .collect(),
            h: self.h,
        }
    }

    /// Same history expressed with `m` coefficients (zero-padded or truncated).
    pub fn resized(&self, m: usize) -> Self {
        Self {
            knots: self
                .knots
                .iter()
                .map(|k| TrajectoryKnot::new(k.t, k.state.resized(m), k.derivative.resized(m)))
                .collect(),
            h: self.h,
        }
    }
}

/// Knots on a uniform grid, starting with the initial history on `[t0 - r, t0]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    h: f64,
    window_steps: usize,
    t0: f64,
    knots: Vec<TrajectoryKnot>,
    start_rhs: Option<SpectralField>,
}

impl Trajectory {
    /// Trajectory whose first `steps + 1` knots are the initial history, re-timed so that
    /// its last knot sits at `t0`.
    pub fn from_history(phi: &HistorySegment, t0: f64) -> Self {
        let w = phi.steps();
        let knots = phi
            .knots
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let mut k = k.clone();
                k.t = t0 + (i as f64 - w as f64) * phi.h;
                k
            })
            .collect();
        Self {
            h: phi.h,
            window_steps: w,
            t0,
            knots,
            start_rhs: None,
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn window_steps(&self) -> usize {
        self.window_steps
    }

    pub fn window(&self) -> f64 {
        self.window_steps as f64 * self.h
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn truncation(&self) -> usize {
        self.knots[0].state.truncation()
    }

    pub fn knots(&self) -> &[TrajectoryKnot] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Index of the knot at `t0`.
    pub fn start_index(&self) -> usize {
        self.window_steps
    }

    pub fn steps_taken(&self) -> usize {
        self.knots.len() - 1 - self.window_steps
    }

    /// Knots at `t ≥ t0`.
    pub fn simulated(&self) -> &[TrajectoryKnot] {
        &self.knots[self.window_steps..]
    }

    pub fn end_time(&self) -> f64 {
        self.time_of(self.knots.len() - 1)
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.t0 + (index as f64 - self.window_steps as f64) * self.h
    }

    /// Right derivative `u̇(t0+)` of the solution, which generally differs from the
    /// history's left derivative stored on the `t0` knot.
    pub fn start_rhs(&self) -> Option<&SpectralField> {
        self.start_rhs.as_ref()
    }

    pub(crate) fn set_start_rhs(&mut self, rhs: SpectralField) {
        self.start_rhs = Some(rhs);
    }

    /// Time derivative at knot `index`, using the right derivative at `t0`.
    pub fn solution_derivative(&self, index: usize) -> &SpectralField {
        if index == self.window_steps {
            if let Some(r) = &self.start_rhs {
                return r;
            }
        }
        &self.knots[index].derivative
    }

    pub(crate) fn push(&mut self, knot: TrajectoryKnot) {
        self.knots.push(knot);
    }

    pub(crate) fn knot_mut(&mut self, index: usize) -> &mut TrajectoryKnot {
        &mut self.knots[index]
    }

    /// Knot index of grid time `t`.
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let pos = (t - self.t0) / self.h + self.window_steps as f64;
        let idx = pos.round();
        if (pos - idx).abs() > 1e-6 || idx < self.window_steps as f64 || idx >= self.knots.len() as f64
        {
            return Err(Error::Misaligned(format!(
                "time {t} is not a stored grid time in [{}, {}] with step {}",
                self.t0,
                self.end_time(),
                self.h
            )));
        }
        Ok(idx as usize)
    }

    /// The segment `u_t` whose last knot is `index` (requires `index ≥ start_index()`).
    pub fn segment_ending_at(&self, index: usize) -> Segment<'_> {
        Segment {
            knots: &self.knots[index - self.window_steps..=index],
            h: self.h,
        }
    }

    pub fn segment_at(&self, t: f64) -> Result<Segment<'_>> {
        Ok(self.segment_ending_at(self.index_of_time(t)?))
    }

    pub fn final_segment(&self) -> HistorySegment {
        self.segment_ending_at(self.knots.len() - 1).to_owned()
    }

    /// Per-interval sup of `||A^{-1/2}(u - v)||` over the sample points; entry `i`
    /// covers `[knot i, knot i+1]`.
    pub fn interval_weak_distances(&self, other: &Trajectory, spectrum: &Spectrum) -> Result<Vec<f64>> {
        if self.h != other.h || self.knots.len() != other.knots.len() {
            return Err(Error::WindowMismatch {
                left: self.end_time(),
                right: other.end_time(),
            });
        }
        let weights = spectrum.norm_weights(-0.5);
        Ok((0..self.knots.len() - 1)
            .map(|i| {
                interval_sup(
                    (&self.knots[i], &self.knots[i + 1]),
                    Some((&other.knots[i], &other.knots[i + 1])),
                    self.h,
                    &weights,
                    Sampled::Value,
                )
            })
            .collect())
    }

    /// Per-interval sup of `||A^{-1/2} u̇||` of the interpolant.
    pub fn interval_slopes(&self, spectrum: &Spectrum) -> Vec<f64> {
        let weights = spectrum.norm_weights(-0.5);
        (0..self.knots.len() - 1)
            .map(|i| {
                interval_sup(
                    (&self.knots[i], &self.knots[i + 1]),
                    None,
                    self.h,
                    &weights,
                    Sampled::Slope,
                )
            })
            .collect()
    }

    /// `||u_t||_{H,d}` at every knot from the start of the run on, sharing the
    /// per-interval sups between overlapping windows.
    pub fn norm_hd_profile(&self, spectrum: &Spectrum, d: f64) -> Vec<f64> {
        let weights = spectrum.norm_weights(-0.5);
        let w = self.window_steps();
        let sups: Vec<f64> = (0..self.knots.len() - 1)
            .map(|i| interval_weak_sup(&self.knots, i, self.h, &weights))
            .collect();
        let weak = sliding_max(&sups, w);
        (self.start_index()..self.knots.len())
            .map(|i| {
                let strong = spectrum.frac_norm(0.5, &self.knots[i].state);
                if d == 0.0 {
                    strong
                } else {
                    strong + d * weak[i - w]
                }
            })
            .collect()
    }

    /// CSV with columns `t, g_1..g_m, dg_1..dg_m` followed by `extra` columns.
    /// Extra columns hold one value per knot; NaN is written as an empty field.
    pub fn write_csv<W: Write>(&self, mut out: W, extra: &[(&str, &[f64])]) -> Result<()> {
        let m = self.truncation();
        let mut header = vec!["t".to_string()];
        header.extend((1..=m).map(|k| format!("g_{k}")));
        header.extend((1..=m).map(|k| format!("dg_{k}")));
        header.extend(extra.iter().map(|(name, _)| name.to_string()));
        writeln!(out, "{}", header.join(","))?;
        for (i, knot) in self.knots.iter().enumerate() {
            let mut row = String::with_capacity(48 * (2 * m + 1 + extra.len()));
            row.push_str(&format_number(knot.t));
            for v in knot.state.coefficients().iter().chain(knot.derivative.coefficients()) {
                row.push(',');
                row.push_str(&format_number(*v));
            }
            for (_, col) in extra {
                row.push(',');
                if let Some(v) = col.get(i).filter(|v| !v.is_nan()) {
                    row.push_str(&format_number(*v));
                }
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

/// 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// `out[i] = max(values[i..i + width])` for every full window.
pub fn sliding_max(values: &[f64], width: usize) -> Vec<f64> {
    if width == 0 || values.len() < width {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(values.len() - width + 1);
    let mut dq: VecDeque<usize> = VecDeque::new();
    for (i, &v) in values.iter().enumerate() {
        while dq.back().is_some_and(|&j| values[j] <= v) {
            dq.pop_back();
        }
        dq.push_back(i);
        if dq[0] + width <= i {
            dq.pop_front();
        }
        if i + 1 >= width {
            out.push(values[dq[0]]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Domain1D;
    use std::f64::consts::PI;

    fn spectrum(m: usize) -> Spectrum {
        Spectrum::new(Domain1D::new(PI).unwrap(), m).unwrap()
    }

    /// Single-mode segment with closed-form coefficient `g(θ)`.
    fn single_mode<F: Fn(f64) -> (f64, f64)>(m: usize, steps: usize, h: f64, g: F) -> HistorySegment {
        HistorySegment::from_fn(steps, h, |t| {
            let (v, d) = g(t);
            (SpectralField::unit(m, 1, v), SpectralField::unit(m, 1, d))
        })
        .unwrap()
    }

    #[test]
    fn eval_exact_on_linear_data_and_at_knots() {
        let seg = single_mode(3, 10, 0.1, |t| (t, 1.0));
        let v = seg.view().eval(-0.55).unwrap();
        assert!((v.coefficients()[0] + 0.55).abs() < 1e-15);
        let end = seg.view().eval(0.0).unwrap();
        assert_eq!(&end, &seg.knots().last().unwrap().state);
        let first = seg.view().eval(-1.0).unwrap();
        assert_eq!(&first, &seg.knots()[0].state);
    }

    #[test]
    fn eval_rejects_out_of_window() {
        let seg = single_mode(2, 10, 0.1, |t| (t, 1.0));
        assert!(matches!(seg.view().eval(0.01), Err(Error::OutOfWindow { .. })));
        assert!(matches!(seg.view().eval(-1.01), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn eval_reproduces_cubics() {
        let seg = single_mode(1, 16, 1.0 / 16.0, |t| (t * t * t, 3.0 * t * t));
        let mut worst: f64 = 0.0;
        for i in 0..=1000 {
            let theta = -(i as f64) / 1000.0;
            let v = seg.view().eval(theta).unwrap().coefficients()[0];
            worst = worst.max((v - theta.powi(3)).abs());
        }
        assert!(worst <= 1e-13, "{worst}");
    }

    #[test]
    fn interpolation_error_is_fourth_order() {
        let err = |steps: usize| {
            let h = 1.0 / steps as f64;
            let seg = single_mode(1, steps, h, |t| ((3.0 * t).sin(), 3.0 * (3.0 * t).cos()));
            (0..=4000)
                .map(|i| {
                    let th = -(i as f64) / 4000.0;
                    (seg.view().eval(th).unwrap().coefficients()[0] - (3.0 * th).sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(8) / err(16);
        assert!(ratio >= 14.0, "ratio {ratio}");
    }

    #[test]
    fn sup_weak_norm_examples() {
        let s = spectrum(3);
        let zero = HistorySegment::zeros(3, 10, 0.1).unwrap();
        assert_eq!(zero.view().sup_weak_norm(&s), 0.0);
        let c = HistorySegment::constant(SpectralField::unit(3, 1, 2.5), 10, 0.1).unwrap();
        assert!((c.view().sup_weak_norm(&s) - 2.5).abs() < 1e-14);
        let lin = single_mode(3, 10, 0.1, |t| (1.0 + t / 2.0, 0.5));
        assert!((lin.view().sup_weak_norm(&s) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lip_seminorm_examples() {
        let s = spectrum(3);
        let c = HistorySegment::constant(SpectralField::unit(3, 1, 2.5), 10, 0.1).unwrap();
        assert_eq!(c.view().lip_seminorm(&s), 0.0);
        let lin = single_mode(3, 10, 0.1, |t| (t, 1.0));
        assert!((lin.view().lip_seminorm(&s) - 1.0).abs() < 1e-13);
        // A second mode is damped by λ_2^{-1/2} = 1/2.
        let two = HistorySegment::from_fn(10, 0.1, |t| {
            (SpectralField::unit(3, 2, 4.0 * t), SpectralField::unit(3, 2, 4.0))
        })
        .unwrap();
        assert!((two.view().lip_seminorm(&s) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn norm_l_and_hd_examples() {
        let s = spectrum(3);
        let zero = HistorySegment::zeros(3, 10, 0.1).unwrap();
        assert_eq!(zero.view().norm_l(&s), 0.0);
        assert_eq!(zero.view().norm_hd(&s, 0.3), 0.0);
        let c = HistorySegment::constant(SpectralField::unit(3, 1, 1.0), 10, 0.1).unwrap();
        assert!((c.view().norm_l(&s) - 2.0).abs() < 1e-14);
        assert!((c.view().norm_hd(&s, 0.0) - 1.0).abs() < 1e-14);
        assert!((c.view().norm_hd(&s, 0.1) - 1.1).abs() < 1e-14);
        let lin = single_mode(3, 10, 0.1, |t| (1.0 + t / 2.0, 0.5));
        assert!((lin.view().norm_l(&s) - 2.5).abs() < 1e-13);
    }

    #[test]
    fn metric_examples() {
        let s = spectrum(3);
        let a = HistorySegment::constant(SpectralField::unit(3, 1, 0.7), 10, 0.1).unwrap();
        let zero = HistorySegment::zeros(3, 10, 0.1).unwrap();
        assert_eq!(metric_rho(&a.view(), &a.view(), &s).unwrap(), 0.0);
        assert!((metric_rho(&a.view(), &zero.view(), &s).unwrap() - 1.4).abs() < 1e-14);
        let short = HistorySegment::zeros(3, 5, 0.1).unwrap();
        assert!(matches!(
            metric_rho(&a.view(), &short.view(), &s),
            Err(Error::WindowMismatch { .. })
        ));
    }

    #[test]
    fn trajectory_retimes_history_and_slices() {
        let phi = single_mode(2, 4, 0.25, |t| (t, 1.0));
        let traj = Trajectory::from_history(&phi, 3.0);
        assert_eq!(traj.start_index(), 4);
        assert_eq!(traj.knots()[0].t, 2.0);
        assert_eq!(traj.end_time(), 3.0);
        assert_eq!(traj.index_of_time(3.0).unwrap(), 4);
        assert!(traj.index_of_time(3.1).is_err());
        assert_eq!(traj.final_segment().knots()[4].state, phi.knots()[4].state);
    }

    #[test]
    fn norm_hd_profile_matches_per_segment_norm() {
        let s = spectrum(3);
        let phi = single_mode(3, 4, 0.25, |t| (1.0 + t * t, 2.0 * t));
        let mut traj = Trajectory::from_history(&phi, 0.0);
        for n in 1..=9 {
            let t = 0.25 * n as f64;
            let state = SpectralField::from_coefficients(vec![t.cos(), -0.5 * t, 0.1]);
            let deriv = SpectralField::from_coefficients(vec![-t.sin(), -0.5, 0.0]);
            traj.push(TrajectoryKnot::new(t, state, deriv));
        }
        for d in [0.0, 0.1, 2.0] {
            let profile = traj.norm_hd_profile(&s, d);
            assert_eq!(profile.len(), 10);
            for (j, v) in profile.iter().enumerate() {
                let direct = traj.segment_ending_at(traj.start_index() + j).norm_hd(&s, d);
                assert_eq!(v.to_bits(), direct.to_bits());
            }
        }
    }

    #[test]
    fn csv_layout() {
        let phi = single_mode(2, 2, 0.5, |t| (t, 1.0));
        let traj = Trajectory::from_history(&phi, 0.0);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, &[("eta", &[f64::NAN, f64::NAN, 0.25])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,g_1,g_2,dg_1,dg_2,eta");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(','));
        let last: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(last[5].parse::<f64>().unwrap(), 0.25);
        assert_eq!(format_number(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn sliding_max_matches_naive() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        for w in 1..=v.len() {
            let fast = sliding_max(&v, w);
            let naive: Vec<f64> = v.windows(w).map(|s| s.iter().cloned().fold(f64::MIN, f64::max)).collect();
            assert_eq!(fast, naive);
        }
    }
}
