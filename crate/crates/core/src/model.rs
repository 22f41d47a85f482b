//! The delayed nonlinearity `F(u_t)(x) = b([B u(t - η(u_t))](x))` and its constants.
//!
//! `B` is the windowed convolution `[Bv](x) = ∫ v(y) f(x - y) w(y) dy` with a
//! Gaussian `f` and a smooth bump window `w`. It is evaluated on the quadrature
//! grid through an `N_q × m` matrix acting directly on spectral coefficients, so
//! `F(u^m_t)` uses the full `B u^m` rather than its Galerkin projection.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::history::Segment;
use crate::spectral::{Domain1D, Projector, QuadratureGrid, SpectralField, Spectrum};

/// `3√3/8`: the sup of `|d/dx (1 + x²)^{-1}|`.
const RATIONAL_SLOPE: f64 = 0.649_519_052_838_329;

/// Gaussian kernel `f(s) = (4πα)^{-1/2} exp(-s²/(4α))` and bump window on `[δℓ, (1-δ)ℓ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    alpha: f64,
    delta: f64,
    window_scale: f64,
}

impl KernelSpec {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("kernel alpha must be positive, got {alpha}")));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidArgument(format!("window delta must lie in (0, 1/2), got {delta}")));
        }
        Ok(Self {
            alpha,
            delta,
            window_scale: 1.0,
        })
    }

    /// Multiplies the window by `scale` (zero gives the vanishing operator).
    pub fn with_window_scale(mut self, scale: f64) -> Self {
        self.window_scale = scale;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kernel(&self, s: f64) -> f64 {
        (4.0 * PI * self.alpha).powf(-0.5) * (-s * s / (4.0 * self.alpha)).exp()
    }

    pub fn window(&self, y: f64, length: f64) -> f64 {
        let z = (2.0 * y / length - 1.0) / (1.0 - 2.0 * self.delta);
        if z.abs() >= 1.0 {
            return 0.0;
        }
        self.window_scale * (1.0 - 1.0 / (1.0 - z * z)).exp()
    }

    /// Minimum node count for the tensor quadrature to resolve the kernel at truncation `m`.
    pub fn required_nodes(&self, m: usize) -> usize {
        (8 * m).max((16.0 / self.alpha.sqrt()).ceil() as usize)
    }

    pub fn check_resolution(&self, nodes: usize, m: usize) -> Result<()> {
        let need = self.required_nodes(m);
        if nodes < need {
            return Err(Error::Resolution(format!(
                "{nodes} nodes for truncation {m} and alpha {}; need at least {need}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Discretized `B`: its action from coefficients to grid values, the Galerkin
/// matrix `⟨B e_k, e_j⟩`, and the truncated Lipschitz constant.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    m: usize,
    nodes: usize,
    /// `(B e_k)(x_q)`, row-major by node.
    to_grid: Vec<f64>,
    /// `⟨B e_k, e_j⟩`, row-major by `j`.
    galerkin: Vec<f64>,
    lb_truncated: f64,
}

/// Assembles `B` against the first `m` modes on the projector's grid.
pub fn assemble_b(kernel: &KernelSpec, projector: &Projector) -> Result<KernelOperator> {
    let grid = projector.grid();
    let m = projector.m();
    let nq = grid.len();
    kernel.check_resolution(nq, m)?;
    let length = grid.length();
    let x = grid.nodes();
    let wq = grid.weights();

    let window_w: Vec<f64> = x
        .iter()
        .zip(wq)
        .map(|(&y, &w)| kernel.window(y, length) * w)
        .collect();
    let mut to_grid = vec![0.0; nq * m];
    let mut row = vec![0.0; nq];
    for q in 0..nq {
        for (p, r) in row.iter_mut().enumerate() {
            *r = kernel.kernel(x[q] - x[p]) * window_w[p];
        }
        for k in 0..m {
            to_grid[q * m + k] = (0..nq).map(|p| row[p] * projector.mode_at(p, k)).sum();
        }
    }
    let mut galerkin = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..m {
            galerkin[j * m + k] = (0..nq)
                .map(|q| projector.mode_at(q, j) * wq[q] * to_grid[q * m + k])
                .sum();
        }
    }

    // sup ||Bv|| / ||A^{-1/2} v|| over the span = σ_max(W^{1/2} S Λ^{1/2}).
    let lambda_half: Vec<f64> = projector.spectrum().eigenvalues().iter().map(|l| l.sqrt()).collect();
    let gram = DMatrix::from_fn(m, m, |a, b| {
        let s: f64 = (0..nq).map(|q| to_grid[q * m + a] * wq[q] * to_grid[q * m + b]).sum();
        lambda_half[a] * s * lambda_half[b]
    });
    let top = gram
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);

    Ok(KernelOperator {
        m,
        nodes: nq,
        to_grid,
        galerkin,
        lb_truncated: top.max(0.0).sqrt(),
    })
}

impl KernelOperator {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Galerkin matrix entry `⟨B e_k, e_j⟩` (1-based).
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.galerkin[(j - 1) * self.m + (k - 1)]
    }

    /// `P_m B v`.
    pub fn apply(&self, field: &SpectralField) -> SpectralField {
        let g = field.coefficients();
        SpectralField::from_coefficients(
            (0..self.m)
                .map(|j| {
                    self.galerkin[j * self.m..(j + 1) * self.m]
                        .iter()
                        .zip(g)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
        )
    }

    /// `(Bv)(x_q)` for every node.
    pub fn apply_to_grid(&self, coefficients: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.nodes);
        for (q, o) in out.iter_mut().enumerate() {
            *o = self.to_grid[q * self.m..q * self.m + coefficients.len()]
                .iter()
                .zip(coefficients)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// `L_B^{(m)}`: `||Bv|| ≤ L_B^{(m)} ||A^{-1/2} v||` for every `v` in the span of `e_1..e_m`.
    pub fn lb_truncated(&self) -> f64 {
        self.lb_truncated
    }
}

/// Spectral evaluation of `(∫ ||A^{1/2} f(· - x) w(·)||² dx)^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbEstimate {
    /// Value with `2·m_B` modes (reported).
    pub value: f64,
    /// Value with `m_B` modes.
    pub coarse: f64,
    /// `value - coarse`, the refinement indicator.
    pub refinement: f64,
}

impl LbEstimate {
    pub fn stabilized(&self, rel: f64) -> bool {
        self.refinement.abs() <= rel * self.value.abs().max(f64::MIN_POSITIVE)
    }
}

/// Kernel-based bound for the Lipschitz constant of `B`, from the spectral sums
/// `Σ_k λ_k ⟨f(· - x) w, e_k⟩²` with `m_B` and `2 m_B` modes.
pub fn compute_lb(kernel: &KernelSpec, m_b: usize, grid: &QuadratureGrid) -> Result<LbEstimate> {
    if m_b == 0 {
        return Err(Error::InvalidArgument("m_B must be positive".into()));
    }
    let modes = 2 * m_b;
    kernel.check_resolution(grid.len(), modes)?;
    let domain = Domain1D::new(grid.length())?;
    let x = grid.nodes();
    let wq = grid.weights();
    let nq = grid.len();
    let length = grid.length();

    let mut weighted_modes = vec![0.0; modes * nq];
    for k in 0..modes {
        for p in 0..nq {
            weighted_modes[k * nq + p] = domain.mode(k + 1, x[p]) * wq[p] * kernel.window(x[p], length);
        }
    }
    let lambdas: Vec<f64> = (1..=modes).map(|k| domain.lambda(k)).collect();
    let (mut coarse, mut fine) = (0.0, 0.0);
    let mut fx = vec![0.0; nq];
    for q in 0..nq {
        for (p, v) in fx.iter_mut().enumerate() {
            *v = kernel.kernel(x[p] - x[q]);
        }
        let mut partial = 0.0;
        for k in 0..modes {
            let c: f64 = weighted_modes[k * nq..(k + 1) * nq]
                .iter()
                .zip(&fx)
                .map(|(a, b)| a * b)
                .sum();
            partial += lambdas[k] * c * c;
            if k + 1 == m_b {
                coarse += wq[q] * partial;
            }
        }
        fine += wq[q] * partial;
    }
    let (coarse, value) = (coarse.sqrt(), fine.sqrt());
    if value < coarse {
        return Err(Error::Consistency(format!(
            "spectral sum decreased under refinement: {coarse} -> {value}"
        )));
    }
    Ok(LbEstimate {
        value,
        coarse,
        refinement: value - coarse,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BirthFunction {
    /// `p ŵ e^{-ŵ}` with `ŵ = clamp(w, 0, cap)`.
    NicholsonClamped { p: f64, cap: f64 },
    Constant { c: f64 },
    Zero,
}

impl BirthFunction {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            BirthFunction::NicholsonClamped { p, cap } => {
                let w = v.clamp(0.0, cap);
                p * w * (-w).exp()
            }
            BirthFunction::Constant { c } => c,
            BirthFunction::Zero => 0.0,
        }
    }

    /// `L_b`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            BirthFunction::NicholsonClamped { p, .. } => p.abs(),
            _ => 0.0,
        }
    }

    /// `M_b = sup |b|`.
    pub fn bound(&self) -> f64 {
        match *self {
            // attained at w = 1 as long as the cap admits it
            BirthFunction::NicholsonClamped { p, cap } => {
                let w = cap.min(1.0);
                p.abs() * w * (-w).exp()
            }
            BirthFunction::Constant { c } => c.abs(),
            BirthFunction::Zero => 0.0,
        }
    }
}

/// Delay functionals `η: C([-r,0]; ·) → [η_min, r]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DelayFunctional {
    Constant {
        eta0: f64,
    },
    /// `η_min + (r - η_min) / (1 + c ||A^{-1/2} φ(0)||²)`
    PointState { eta_min: f64, r: f64, c: f64 },
    /// As `PointState` with `∫ κ(θ) ||A^{-1/2} φ(θ)|| dθ`, `κ ≡ 1/r`, in place of the point value.
    IntegralState { eta_min: f64, r: f64, c: f64 },
}

impl DelayFunctional {
    pub fn validate(&self, window: f64) -> Result<()> {
        let ok = match *self {
            DelayFunctional::Constant { eta0 } => (0.0..=window).contains(&eta0),
            DelayFunctional::PointState { eta_min, r, c }
            | DelayFunctional::IntegralState { eta_min, r, c } => {
                eta_min >= 0.0 && eta_min <= r && (r - window).abs() <= 1e-12 * window && c >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "delay functional {self:?} is incompatible with window {window}"
            )))
        }
    }

    pub fn eval(&self, segment: &Segment<'_>, spectrum: &Spectrum) -> f64 {
        match *self {
            DelayFunctional::Constant { eta0 } => eta0,
            DelayFunctional::PointState { eta_min, r, c } => {
                let x = spectrum.frac_norm(-0.5, segment.end_state());
                eta_min + (r - eta_min) / (1.0 + c * x * x)
            }
            DelayFunctional::IntegralState { eta_min, r, c } => {
                let weights = spectrum.norm_weights(-0.5);
                let knots = segment.knots();
                let n = knots.len() - 1;
                let h = segment.step();
                let mut acc = 0.0;
                for (i, k) in knots.iter().enumerate() {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    acc += w * crate::spectral::weighted_norm(&weights, k.state.coefficients());
                }
                let x = acc * h / segment.window();
                eta_min + (r - eta_min) / (1.0 + c * x * x)
            }
        }
    }

    /// `L_η`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            DelayFunctional::Constant { .. } => 0.0,
            DelayFunctional::PointState { eta_min, r, c }
            | DelayFunctional::IntegralState { eta_min, r, c } => {
                (r - eta_min) * RATIONAL_SLOPE * c.sqrt()
            }
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match *self {
            DelayFunctional::Constant { eta0 } => (eta0, eta0),
            DelayFunctional::PointState { eta_min, r, .. }
            | DelayFunctional::IntegralState { eta_min, r, .. } => (eta_min, r),
        }
    }
}

fn bump_tail(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`, monotone in between.
pub fn chi(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("cutoff argument must be nonnegative, got {s}")));
    }
    let a = bump_tail(2.0 - s);
    let b = bump_tail(s - 1.0);
    Ok(a / (a + b))
}

/// Cutoff `χ(||φ||_{H,d} / R̂)` applied to the nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub radius: f64,
}

impl Cutoff {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn factor(&self, norm_hd: f64) -> f64 {
        chi(norm_hd / self.radius).unwrap_or(0.0)
    }
}

/// One evaluation of the nonlinearity.
#[derive(Clone, Debug, PartialEq)]
pub struct Forcing {
    pub coefficients: SpectralField,
    pub eta: f64,
    /// Multiplier applied by the cutoff (1 when inactive).
    pub cutoff_factor: f64,
}

/// Hypothesis constants of a model.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ModelConstants {
    pub l_b: f64,
    pub l_bop: f64,
    pub l_eta: f64,
    pub m_b: f64,
    pub lambda1: f64,
    pub measure: f64,
    pub d: f64,
    pub r: f64,
}

/// Number of modes used for the kernel Lipschitz bound.
pub const LB_MODES: usize = 64;

/// The Galerkin right-hand side apart from the linear part.
#[derive(Debug)]
pub struct Model {
    projector: Projector,
    kernel_spec: KernelSpec,
    kernel: KernelOperator,
    birth: BirthFunction,
    delay: DelayFunctional,
    damping: f64,
    window: f64,
    cutoff: Option<Cutoff>,
    rates: Vec<f64>,
    lb: OnceLock<std::result::Result<LbEstimate, String>>,
}

impl Model {
    pub fn new(
        projector: Projector,
        kernel_spec: KernelSpec,
        birth: BirthFunction,
        delay: DelayFunctional,
        damping: f64,
        window: f64,
    ) -> Result<Self> {
        if !(damping.is_finite() && damping >= 0.0) {
            return Err(Error::InvalidArgument(format!("damping must be nonnegative, got {damping}")));
        }
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::InvalidArgument(format!("delay window must be positive, got {window}")));
        }
        delay.validate(window)?;
        let kernel = assemble_b(&kernel_spec, &projector)?;
        let rates = projector.spectrum().eigenvalues().iter().map(|l| l + damping).collect();
        Ok(Self {
            projector,
            kernel_spec,
            kernel,
            birth,
            delay,
            damping,
            window,
            cutoff: None,
            rates,
            lb: OnceLock::new(),
        })
    }

    pub fn with_cutoff(mut self, cutoff: Option<Cutoff>) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.projector.spectrum()
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn kernel_spec(&self) -> &KernelSpec {
        &self.kernel_spec
    }

    pub fn kernel(&self) -> &KernelOperator {
        &self.kernel
    }

    pub fn birth(&self) -> &BirthFunction {
        &self.birth
    }

    pub fn delay(&self) -> &DelayFunctional {
        &self.delay
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn cutoff(&self) -> Option<&Cutoff> {
        self.cutoff.as_ref()
    }

    pub fn m(&self) -> usize {
        self.projector.m()
    }

    /// Per-mode linear rates `λ_k + d`.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Kernel Lipschitz bound with [`LB_MODES`]/`2·LB_MODES` modes, computed once.
    pub fn lb_estimate(&self) -> Result<LbEstimate> {
        self.lb
            .get_or_init(|| {
                let domain = *self.spectrum().domain();
                let nodes = self.kernel_spec.required_nodes(2 * LB_MODES) + 1;
                QuadratureGrid::gauss_legendre(&domain, nodes)
                    .and_then(|g| compute_lb(&self.kernel_spec, LB_MODES, &g))
                    .map_err(|e| e.to_string())
            })
            .clone()
            .map_err(Error::Consistency)
    }

    pub fn constants(&self) -> Result<ModelConstants> {
        Ok(ModelConstants {
            l_b: self.birth.lipschitz(),
            l_bop: self.lb_estimate()?.value.max(self.kernel.lb_truncated()),
            l_eta: self.delay.lipschitz(),
            m_b: self.birth.bound(),
            lambda1: self.spectrum().lambda1(),
            measure: self.spectrum().domain().measure(),
            d: self.damping,
            r: self.window,
        })
    }

    /// `b(w(x_q))` projected onto the first `m` modes.
    pub fn nonlinearity_of_delayed(&self, delayed: &[f64]) -> Result<SpectralField> {
        let nq = self.projector.grid().len();
        let mut grid = vec![0.0; nq];
        self.kernel.apply_to_grid(delayed, &mut grid);
        for v in grid.iter_mut() {
            *v = self.birth.eval(*v);
        }
        self.projector.project(&grid)
    }

    /// `P_m F(u_t)` without cutoff.
    pub fn forcing_unmodified(&self, segment: &Segment<'_>) -> Result<Forcing> {
        if (segment.window() - self.window).abs() > 1e-9 * self.window {
            return Err(Error::WindowMismatch {
                left: segment.window(),
                right: self.window,
            });
        }
        let eta = self.delay.eval(segment, self.spectrum());
        let mut delayed = vec![0.0; segment.truncation()];
        segment.eval_into(-eta, &mut delayed)?;
        let coefficients = if matches!(self.birth, BirthFunction::Zero) {
            SpectralField::zeros(self.m())
        } else {
            self.nonlinearity_of_delayed(&delayed)?
        };
        Ok(Forcing {
            coefficients,
            eta,
            cutoff_factor: 1.0,
        })
    }

    /// `χ(||u_t||_{H,d} / R̂) P_m F(u_t)`.
    pub fn forcing_modified(&self, segment: &Segment<'_>, cutoff: &Cutoff) -> Result<Forcing> {
        let norm = segment.norm_hd(self.spectrum(), self.damping);
        self.forcing_with_norm(segment, Some((cutoff, norm)))
    }

    /// The nonlinearity as configured: modified when a cutoff is set.
    pub fn forcing(&self, segment: &Segment<'_>) -> Result<Forcing> {
        match &self.cutoff {
            Some(c) => self.forcing_modified(segment, c),
            None => self.forcing_unmodified(segment),
        }
    }

    /// As [`Model::forcing_modified`] with a precomputed `||u_t||_{H,d}`.
    pub(crate) fn forcing_with_norm(
        &self,
        segment: &Segment<'_>,
        cutoff: Option<(&Cutoff, f64)>,
    ) -> Result<Forcing> {
        let factor = cutoff.map_or(1.0, |(c, norm)| c.factor(norm));
        if factor == 0.0 {
            let eta = self.delay.eval(segment, self.spectrum());
            return Ok(Forcing {
                coefficients: SpectralField::zeros(self.m()),
                eta,
                cutoff_factor: 0.0,
            });
        }
        let mut f = self.forcing_unmodified(segment)?;
        if factor != 1.0 {
            f.coefficients = f.coefficients.scaled(factor);
        }
        f.cutoff_factor = factor;
        Ok(f)
    }
}

/// `M_b √|Ω|`, the continuum bound on `||F||`.
pub fn forcing_bound(constants: &ModelConstants) -> f64 {
    constants.m_b * constants.measure.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistorySegment;
    use std::f64::consts::E;

    fn projector(m: usize, nodes: usize) -> Projector {
        let d = Domain1D::new(PI).unwrap();
        Projector::new(
            Spectrum::new(d, m).unwrap(),
            QuadratureGrid::gauss_legendre(&d, nodes).unwrap(),
        )
        .unwrap()
    }

    fn canonical_kernel() -> KernelSpec {
        KernelSpec::new(0.1, 0.1).unwrap()
    }

    #[test]
    fn window_is_a_flat_bump() {
        let k = canonical_kernel();
        let l = PI;
        for i in 0..=2000 {
            let y = l * i as f64 / 2000.0;
            let w = k.window(y, l);
            assert!((0.0..=1.0).contains(&w));
        }
        assert!((k.window(l / 2.0, l) - 1.0).abs() < 1e-15);
        for edge in [0.1 * l, 0.9 * l] {
            for off in [-1e-6, 0.0, 1e-6] {
                assert!(k.window(edge + off, l).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn zero_window_gives_zero_operator() {
        let k = canonical_kernel().with_window_scale(0.0);
        let b = assemble_b(&k, &projector(8, 65)).unwrap();
        for j in 1..=8 {
            for kk in 1..=8 {
                assert_eq!(b.entry(j, kk), 0.0);
            }
        }
        assert_eq!(b.lb_truncated(), 0.0);
    }

    #[test]
    fn operator_maps_zero_to_zero() {
        let b = assemble_b(&canonical_kernel(), &projector(8, 65)).unwrap();
        assert_eq!(b.apply(&SpectralField::zeros(8)), SpectralField::zeros(8));
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        assert!(matches!(
            assemble_b(&canonical_kernel(), &projector(8, 60)),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn entries_stable_under_doubling() {
        let k = canonical_kernel();
        let coarse = assemble_b(&k, &projector(8, 129)).unwrap();
        let fine = assemble_b(&k, &projector(8, 258)).unwrap();
        for j in 1..=8 {
            for kk in 1..=8 {
                assert!((coarse.entry(j, kk) - fine.entry(j, kk)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn galerkin_matrix_is_symmetric_when_window_is_symmetric_in_modes() {
        // ⟨B e_k, e_j⟩ is not symmetric in general; check the known parity
        // structure instead: even/odd coupling vanishes for the symmetric bump.
        let b = assemble_b(&canonical_kernel(), &projector(8, 129)).unwrap();
        assert!(b.entry(1, 2).abs() < 1e-12);
        assert!(b.entry(2, 3).abs() < 1e-12);
        assert!(b.entry(1, 1) > 0.0);
    }

    #[test]
    fn birth_values_and_constants() {
        let b = BirthFunction::NicholsonClamped { p: 2.0, cap: 50.0 };
        assert!((b.eval(1.0) - 2.0 / E).abs() < 1e-15);
        assert_eq!(b.eval(0.0), 0.0);
        assert_eq!(b.eval(-5.0), 0.0);
        assert!((b.bound() - 2.0 / E).abs() < 1e-15);
        assert_eq!(b.lipschitz(), 2.0);
        let c = BirthFunction::Constant { c: -0.3 };
        assert_eq!(c.eval(17.0), -0.3);
        assert_eq!((c.bound(), c.lipschitz()), (0.3, 0.0));
        assert_eq!(BirthFunction::Zero.eval(3.0), 0.0);
    }

    #[test]
    fn birth_constants_by_dense_sampling() {
        let b = BirthFunction::NicholsonClamped { p: 2.0, cap: 50.0 };
        let n = 200_001;
        let (lo, hi) = (-100.0, 100.0);
        let step = (hi - lo) / (n - 1) as f64;
        let mut prev = b.eval(lo);
        let (mut sup, mut lip): (f64, f64) = (prev.abs(), 0.0);
        for i in 1..n {
            let w = lo + i as f64 * step;
            let v = b.eval(w);
            sup = sup.max(v.abs());
            lip = lip.max((v - prev).abs() / step);
            prev = v;
        }
        assert!(b.bound() - sup >= -1e-9);
        assert!(b.lipschitz() - lip >= -1e-9);
        assert!(lip > 1.99);
    }

    #[test]
    fn delay_values() {
        let s = Spectrum::new(Domain1D::new(PI).unwrap(), 3).unwrap();
        let zero = HistorySegment::zeros(3, 10, 0.1).unwrap();
        let c = DelayFunctional::Constant { eta0: 0.5 };
        assert_eq!(c.eval(&zero.view(), &s), 0.5);
        let p = DelayFunctional::PointState { eta_min: 0.1, r: 1.0, c: 1.0 };
        assert!((p.eval(&zero.view(), &s) - 1.0).abs() < 1e-15);
        assert!((p.lipschitz() - 0.9 * 3.0 * 3f64.sqrt() / 8.0).abs() < 1e-15);
        let big = HistorySegment::constant(SpectralField::unit(3, 1, 3.0), 10, 0.1).unwrap();
        assert!((p.eval(&big.view(), &s) - (0.1 + 0.9 / 10.0)).abs() < 1e-15);
        let i = DelayFunctional::IntegralState { eta_min: 0.1, r: 1.0, c: 1.0 };
        assert!((i.eval(&big.view(), &s) - (0.1 + 0.9 / 10.0)).abs() < 1e-14);
        assert!(c.validate(1.0).is_ok());
        assert!(DelayFunctional::Constant { eta0: 1.5 }.validate(1.0).is_err());
        assert!(p.validate(2.0).is_err());
    }

    #[test]
    fn rational_slope_constant() {
        assert!((RATIONAL_SLOPE - 3.0 * 3f64.sqrt() / 8.0).abs() < 1e-15);
        // dense 1-D maximization of |d/dx (1 + x²)^{-1}|
        let best = (1..200_000)
            .map(|i| {
                let x = i as f64 * 1e-5;
                2.0 * x / (1.0 + x * x).powi(2)
            })
            .fold(0.0, f64::max);
        assert!((best - RATIONAL_SLOPE).abs() < 1e-9);
    }

    #[test]
    fn chi_plateaus_and_midpoint() {
        assert_eq!(chi(0.5).unwrap(), 1.0);
        assert_eq!(chi(1.0).unwrap(), 1.0);
        assert_eq!(chi(0.0).unwrap(), 1.0);
        assert_eq!(chi(3.0).unwrap(), 0.0);
        assert_eq!(chi(2.0).unwrap(), 0.0);
        assert!((chi(1.5).unwrap() - 0.5).abs() < 1e-15);
        let v = chi(1.5).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert!(chi(-0.1).is_err());
        let mut prev = 1.0;
        for i in 0..=1000 {
            let c = chi(1.0 + i as f64 / 1000.0).unwrap();
            assert!(c <= prev);
            prev = c;
        }
        let fd = |s: f64| (chi(s + 1e-7).unwrap() - chi((s - 1e-7).max(0.0)).unwrap()) / 2e-7;
        assert!(fd(1.0).abs() <= 1e-6);
        assert!(fd(2.0).abs() <= 1e-6);
    }

    #[test]
    fn lb_zero_window_and_homogeneity() {
        let d = Domain1D::new(PI).unwrap();
        let g = QuadratureGrid::gauss_legendre(&d, 257).unwrap();
        let k = canonical_kernel();
        let zero = compute_lb(&k.with_window_scale(0.0), 16, &g).unwrap();
        assert_eq!(zero.value, 0.0);
        let one = compute_lb(&k, 16, &g).unwrap();
        let two = compute_lb(&k.with_window_scale(2.0), 16, &g).unwrap();
        assert!((two.value - 2.0 * one.value).abs() <= 1e-12 * two.value);
        assert!(compute_lb(&k, 64, &g).is_err());
    }
}
