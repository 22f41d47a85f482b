//! Dirichlet Laplacian eigenbasis on a 1-D interval, fractional powers of the
//! operator, Gauss–Legendre quadrature and the Galerkin projection.
//!
//! On `(0, ℓ)` the operator `A = -d²/dx²` with homogeneous Dirichlet conditions
//! has the closed-form eigenpairs
//!
//! ```text
//! λ_k = (kπ/ℓ)²,    e_k(x) = √(2/ℓ) sin(kπx/ℓ),    k = 1, 2, ...
//! ```
//!
//! so every quantity of the form `||A^s u||` is an exact weighted sum over the
//! coefficients of `u` in this basis.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_TRUNCATION: usize = 32;
pub const MAX_TRUNCATION: usize = 256;

/// The interval `(0, ℓ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain1D {
    length: f64,
}

impl Domain1D {
    pub fn new(length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidDomain(length));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `|Ω|`, which for an interval is its length.
    pub fn measure(&self) -> f64 {
        self.length
    }

    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidIndex(k));
        }
        Ok(self.lambda(k))
    }

    pub fn eigenfunction(&self, k: usize, x: f64) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidIndex(k));
        }
        if !(x > 0.0 && x < self.length) {
            return Err(Error::OutsideDomain {
                x,
                length: self.length,
            });
        }
        Ok(self.mode(k, x))
    }

    pub(crate) fn lambda(&self, k: usize) -> f64 {
        let w = k as f64 * PI / self.length;
        w * w
    }

    pub(crate) fn mode(&self, k: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (k as f64 * PI * x / self.length).sin()
    }
}

/// Quadrature nodes and weights on `(0, ℓ)`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    length: f64,
}

impl QuadratureGrid {
    /// Single-panel Gauss–Legendre rule with `n` nodes.
    pub fn gauss_legendre(domain: &Domain1D, n: usize) -> Result<Self> {
        Self::composite_gauss_legendre(domain, 1, n)
    }

    /// `panels` equal sub-intervals, each carrying a `per_panel`-point Gauss–Legendre rule.
    pub fn composite_gauss_legendre(
        domain: &Domain1D,
        panels: usize,
        per_panel: usize,
    ) -> Result<Self> {
        if panels == 0 || per_panel == 0 {
            return Err(Error::InvalidArgument(
                "quadrature needs at least one panel and one node".into(),
            ));
        }
        let (x, w) = legendre_rule(per_panel);
        let width = domain.length() / panels as f64;
        let mut nodes = Vec::with_capacity(panels * per_panel);
        let mut weights = Vec::with_capacity(panels * per_panel);
        for p in 0..panels {
            let left = p as f64 * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(left + 0.5 * width * (xi + 1.0));
                weights.push(0.5 * width * wi);
            }
        }
        Ok(Self {
            nodes,
            weights,
            length: domain.length(),
        })
    }

    /// The default rule for truncation order `m`: `8m + 1` Gauss–Legendre nodes.
    pub fn for_truncation(domain: &Domain1D, m: usize) -> Result<Self> {
        Self::gauss_legendre(domain, 8 * m + 1)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Discrete L² norm of grid values.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt()
    }
}

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1], by Newton iteration
/// on the three-term recurrence.
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Coefficients `g_k = ⟨u, e_k⟩`, `k = 1..m`, of a truncated field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectralField(Vec<f64>);

impl SpectralField {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        Self(coefficients)
    }

    /// Field with a single nonzero coefficient (1-based mode index).
    pub fn unit(m: usize, k: usize, value: f64) -> Self {
        let mut v = vec![0.0; m];
        v[k - 1] = value;
        Self(v)
    }

    pub fn truncation(&self) -> usize {
        self.0.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.0
    }

    /// L² norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|g| factor * g).collect())
    }

    /// Zero-padded or truncated copy with exactly `m` coefficients.
    pub fn resized(&self, m: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(m, 0.0);
        Self(v)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.is_finite())
    }
}

/// Eigenvalues `λ_1..λ_m` for a domain, with fractional powers of `A`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    domain: Domain1D,
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn new(domain: Domain1D, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("truncation order must be positive".into()));
        }
        if m > MAX_TRUNCATION {
            return Err(Error::TruncationTooLarge {
                requested: m,
                max: MAX_TRUNCATION,
            });
        }
        let eigenvalues = (1..=m).map(|k| domain.lambda(k)).collect();
        Ok(Self {
            domain,
            eigenvalues,
        })
    }

    pub fn domain(&self) -> &Domain1D {
        &self.domain
    }

    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `λ_k^{2s}`, the weights of `||A^s u||²`.
    pub fn norm_weights(&self, s: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.powf(2.0 * s)).collect()
    }

    /// Coefficient-wise `g_k ↦ λ_k^s g_k`.
    pub fn frac_apply(&self, s: f64, field: &SpectralField) -> SpectralField {
        self.check_len(field);
        if s == 0.0 {
            return field.clone();
        }
        SpectralField(
            field
                .0
                .iter()
                .zip(&self.eigenvalues)
                .map(|(g, l)| l.powf(s) * g)
                .collect(),
        )
    }

    /// `||A^s u|| = (Σ λ_k^{2s} g_k²)^{1/2}`.
    pub fn frac_norm(&self, s: f64, field: &SpectralField) -> f64 {
        self.check_len(field);
        if s == 0.0 {
            return field.l2_norm();
        }
        field
            .0
            .iter()
            .zip(&self.eigenvalues)
            .map(|(g, l)| l.powf(2.0 * s) * g * g)
            .sum::<f64>()
            .sqrt()
    }

    fn check_len(&self, field: &SpectralField) {
        assert!(
            field.truncation() <= self.m(),
            "field has {} coefficients but the spectrum only {}",
            field.truncation(),
            self.m()
        );
    }
}

/// Weighted Euclidean norm `(Σ w_k c_k²)^{1/2}` over the common prefix.
pub(crate) fn weighted_norm(weights: &[f64], coefficients: &[f64]) -> f64 {
    weights
        .iter()
        .zip(coefficients)
        .map(|(w, c)| w * c * c)
        .sum::<f64>()
        .sqrt()
}

/// Transfer between grid values and spectral coefficients: `P_m` and its adjoint.
#[derive(Clone, Debug)]
pub struct Projector {
    spectrum: Spectrum,
    grid: QuadratureGrid,
    /// `e_k(x_q)`, row-major by node.
    modes: Vec<f64>,
    /// `w_q e_k(x_q)`, row-major by mode.
    weighted: Vec<f64>,
}

impl Projector {
    pub fn new(spectrum: Spectrum, grid: QuadratureGrid) -> Result<Self> {
        let m = spectrum.m();
        let nq = grid.len();
        let domain = *spectrum.domain();
        let mut modes = vec![0.0; nq * m];
        let mut weighted = vec![0.0; nq * m];
        for (q, (&x, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            for k in 0..m {
                let e = domain.mode(k + 1, x);
                modes[q * m + k] = e;
                weighted[k * nq + q] = w * e;
            }
        }
        Ok(Self {
            spectrum,
            grid,
            modes,
            weighted,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.spectrum.m()
    }

    /// `e_k(x_q)` for zero-based mode index `k`.
    pub fn mode_at(&self, q: usize, k: usize) -> f64 {
        self.modes[q * self.m() + k]
    }

    /// `g_k = Σ_q u(x_q) e_k(x_q) w_q` for `k = 1..m`.
    pub fn project(&self, samples: &[f64]) -> Result<SpectralField> {
        self.project_truncated(samples, self.m())
    }

    pub fn project_truncated(&self, samples: &[f64], m: usize) -> Result<SpectralField> {
        if m > self.m() {
            return Err(Error::TruncationTooLarge {
                requested: m,
                max: self.m(),
            });
        }
        let nq = self.grid.len();
        if samples.len() != nq {
            return Err(Error::SizeMismatch {
                expected: nq,
                got: samples.len(),
            });
        }
        let mut out = vec![0.0; m];
        for (k, g) in out.iter_mut().enumerate() {
            let row = &self.weighted[k * nq..(k + 1) * nq];
            *g = row.iter().zip(samples).map(|(a, b)| a * b).sum();
        }
        Ok(SpectralField(out))
    }

    /// Grid values `Σ_k g_k e_k(x_q)`.
    pub fn synthesize(&self, field: &SpectralField) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.grid.len()];
        self.synthesize_into(field.coefficients(), &mut out)?;
        Ok(out)
    }

    pub(crate) fn synthesize_into(&self, coefficients: &[f64], out: &mut [f64]) -> Result<()> {
        let m = self.m();
        if coefficients.len() > m {
            return Err(Error::TruncationTooLarge {
                requested: coefficients.len(),
                max: m,
            });
        }
        for (q, v) in out.iter_mut().enumerate() {
            let row = &self.modes[q * m..q * m + coefficients.len()];
            *v = row.iter().zip(coefficients).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi_domain() -> Domain1D {
        Domain1D::new(PI).unwrap()
    }

    #[test]
    fn eigenvalues_closed_form() {
        let d = pi_domain();
        assert_eq!(d.eigenvalue(3).unwrap(), 9.0);
        assert!((d.eigenvalue(1).unwrap() - 1.0).abs() < 1e-15);
        let d2 = Domain1D::new(2.0 * PI).unwrap();
        assert!((d2.eigenvalue(2).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(d.eigenvalue(0), Err(Error::InvalidIndex(0))));
        let s = Spectrum::new(d, 64).unwrap();
        assert!(s.eigenvalues().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn eigenfunction_values_and_domain_check() {
        let d = pi_domain();
        let v = d.eigenfunction(1, PI / 2.0).unwrap();
        assert!((v - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!(d.eigenfunction(2, PI / 2.0).unwrap().abs() < 1e-15);
        assert!(d.eigenfunction(1, 0.0).is_err());
        assert!(d.eigenfunction(1, PI).is_err());
        assert!(d.eigenfunction(1, -0.3).is_err());
        assert!(Domain1D::new(0.0).is_err());
        assert!(Domain1D::new(f64::NAN).is_err());
    }

    #[test]
    fn quadrature_weights_sum_to_length() {
        let d = Domain1D::new(2.7).unwrap();
        for n in [1, 2, 5, 64, 257, 513, 1025] {
            let g = QuadratureGrid::gauss_legendre(&d, n).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 2.7).abs() <= 1e-12 * 2.7, "n={n}: {total}");
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
            assert!(g.nodes()[0] > 0.0 && *g.nodes().last().unwrap() < 2.7);
            assert!(g.weights().iter().all(|w| *w > 0.0));
        }
        let c = QuadratureGrid::composite_gauss_legendre(&d, 7, 9).unwrap();
        assert_eq!(c.len(), 63);
        assert!((c.weights().iter().sum::<f64>() - 2.7).abs() < 1e-12);
    }

    #[test]
    fn quadrature_is_exact_for_polynomials() {
        // ∫_0^π x^10 dx = π^11 / 11
        let d = pi_domain();
        let g = QuadratureGrid::gauss_legendre(&d, 6).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| x.powi(10)).collect();
        let exact = PI.powi(11) / 11.0;
        assert!((g.integrate(&v) - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn orthonormality_under_quadrature() {
        let d = pi_domain();
        let spec = Spectrum::new(d, 32).unwrap();
        let p = Projector::new(spec, QuadratureGrid::gauss_legendre(&d, 257).unwrap()).unwrap();
        let nq = p.grid().len();
        for j in 0..32 {
            for k in 0..32 {
                let s: f64 = (0..nq)
                    .map(|q| p.mode_at(q, j) * p.mode_at(q, k) * p.grid().weights()[q])
                    .sum();
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((s - expected).abs() <= 1e-10, "({j},{k}) -> {s}");
            }
        }
    }

    #[test]
    fn projection_examples() {
        let d = pi_domain();
        let spec = Spectrum::new(d, 4).unwrap();
        let p = Projector::new(spec, QuadratureGrid::for_truncation(&d, 4).unwrap()).unwrap();
        let sin: Vec<f64> = p.grid().nodes().iter().map(|x| x.sin()).collect();
        let g = p.project(&sin).unwrap();
        assert!((g.coefficients()[0] - (PI / 2.0).sqrt()).abs() < 1e-12);
        assert!(g.coefficients()[1..].iter().all(|c| c.abs() < 1e-12));

        let zero = vec![0.0; p.grid().len()];
        assert_eq!(p.project(&zero).unwrap(), SpectralField::zeros(4));

        let one = vec![1.0; p.grid().len()];
        let g = p.project_truncated(&one, 3).unwrap();
        let c = (2.0 / PI).sqrt();
        let expected = [2.0 * c, 0.0, 2.0 * c / 3.0];
        for (a, b) in g.coefficients().iter().zip(expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(p.project_truncated(&one, 5).is_err());
        assert!(p.project(&one[1..]).is_err());
    }

    #[test]
    fn synthesis_examples() {
        let d = pi_domain();
        let spec = Spectrum::new(d, 3).unwrap();
        // Three nodes: the middle one is π/2.
        let p = Projector::new(spec, QuadratureGrid::gauss_legendre(&d, 3).unwrap()).unwrap();
        let v = p.synthesize(&SpectralField::unit(3, 1, 1.0)).unwrap();
        assert!((v[1] - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!(p
            .synthesize(&SpectralField::zeros(3))
            .unwrap()
            .iter()
            .all(|x| *x == 0.0));
        assert!(p.synthesize(&SpectralField::zeros(4)).is_err());
    }

    #[test]
    fn fractional_powers() {
        let spec = Spectrum::new(pi_domain(), 4).unwrap();
        let g = SpectralField::unit(4, 4, 1.0);
        let r = spec.frac_apply(-0.5, &g);
        assert!((r.coefficients()[3] - 0.25).abs() < 1e-15);
        let h = SpectralField::from_coefficients(vec![0.3, -1.2, 2.0, 0.7]);
        assert_eq!(spec.frac_apply(0.0, &h), h);
        let twice = spec.frac_apply(0.5, &spec.frac_apply(0.5, &h));
        let once = spec.frac_apply(1.0, &h);
        for (a, b) in twice.coefficients().iter().zip(once.coefficients()) {
            assert!((a - b).abs() <= 1e-13 * b.abs());
        }
        assert!((spec.frac_norm(0.5, &SpectralField::unit(4, 1, 1.0)) - 1.0).abs() < 1e-15);
        assert!((spec.frac_norm(-0.5, &SpectralField::unit(4, 2, 1.0)) - 0.5).abs() < 1e-15);
        let n1 = spec.frac_norm(1.0, &h);
        let n2 = spec.frac_apply(1.0, &h).l2_norm();
        assert!((n1 - n2).abs() < 1e-13 * n1);
        assert_eq!(spec.frac_norm(0.0, &h), h.l2_norm());
    }

    #[test]
    fn truncation_limit() {
        assert!(matches!(
            Spectrum::new(pi_domain(), MAX_TRUNCATION + 1),
            Err(Error::TruncationTooLarge { .. })
        ));
        assert!(Spectrum::new(pi_domain(), MAX_TRUNCATION).is_ok());
    }
}
