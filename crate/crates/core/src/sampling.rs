//! Seeded random initial histories.
//!
//! The stream is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`); a
//! uniform variate on `[0, 1)` is `(next_u64 >> 11) · 2⁻⁵³`, and `U(a, b)` is
//! `a + (b - a)·u`. Any implementation of the same generator reproduces the
//! ensembles exactly.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::config::{history_from_terms, ModeTerm};
use crate::error::{Error, Result};
use crate::history::HistorySegment;
use crate::spectral::Spectrum;

/// Modes excited in random histories.
pub const RANDOM_MODES: usize = 4;

pub struct UniformStream(ChaCha8Rng);

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// `10^U(log10 lo, log10 hi)`.
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        10f64.powf(self.uniform(lo.log10(), hi.log10()))
    }
}

/// Affine-in-time terms on modes `1..=RANDOM_MODES`: `a_1 ∈ (0.5, 2)`,
/// `a_k ∈ (-0.5, 0.5)/k` otherwise, slopes in `(-1, 1)`.
pub fn random_terms(rng: &mut UniformStream) -> Vec<ModeTerm> {
    (1..=RANDOM_MODES)
        .map(|k| {
            let value = if k == 1 {
                rng.uniform(0.5, 2.0)
            } else {
                rng.uniform(-0.5, 0.5) / k as f64
            };
            let slope = rng.uniform(-1.0, 1.0);
            ModeTerm { mode: k, value, slope }
        })
        .collect()
}

/// `n` histories with `norm_L = f · norm_bound`, `f ~ U(0.2, 1)`, further shrunk
/// if needed so that `|||φ||| ≤ lip_radius`.
pub fn generate_ensemble(
    spectrum: &Spectrum,
    steps: usize,
    h: f64,
    n: usize,
    seed: u64,
    norm_bound: f64,
    lip_radius: f64,
) -> Result<Vec<HistorySegment>> {
    if spectrum.m() < RANDOM_MODES {
        return Err(Error::InvalidArgument(format!(
            "random histories need at least {RANDOM_MODES} modes, have {}",
            spectrum.m()
        )));
    }
    if !(norm_bound > 0.0 && lip_radius > 0.0) {
        return Err(Error::InvalidArgument("ensemble bounds must be positive".into()));
    }
    let mut rng = UniformStream::new(seed);
    (0..n)
        .map(|_| {
            let raw = history_from_terms(&random_terms(&mut rng), spectrum.m(), steps, h)?;
            let fraction = rng.uniform(0.2, 1.0);
            let view = raw.view();
            let mut scale = fraction * norm_bound / view.norm_l(spectrum);
            let lip = view.lip_seminorm(spectrum) * scale;
            if lip > lip_radius {
                scale *= lip_radius / lip;
            }
            Ok(raw.scaled(scale))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Domain1D;
    use std::f64::consts::PI;

    #[test]
    fn uniform_stream_is_reproducible_and_in_range() {
        let mut a = UniformStream::new(42);
        let mut b = UniformStream::new(42);
        for _ in 0..1000 {
            let x = a.next_f64();
            assert_eq!(x, b.next_f64());
            assert!((0.0..1.0).contains(&x));
        }
        let y = a.log_uniform(1e-4, 1e-1);
        assert!((1e-4..=1e-1).contains(&y));
    }

    #[test]
    fn ensemble_respects_bounds() {
        let s = Spectrum::new(Domain1D::new(PI).unwrap(), 8).unwrap();
        let e1 = generate_ensemble(&s, 20, 0.05, 16, 7, 3.0, 0.5).unwrap();
        let e2 = generate_ensemble(&s, 20, 0.05, 16, 7, 3.0, 0.5).unwrap();
        assert_eq!(e1, e2);
        for phi in &e1 {
            assert!(phi.view().norm_l(&s) <= 3.0 * (1.0 + 1e-12));
            assert!(phi.view().lip_seminorm(&s) <= 0.5 * (1.0 + 1e-12));
        }
        assert!(generate_ensemble(&Spectrum::new(Domain1D::new(PI).unwrap(), 2).unwrap(), 20, 0.05, 1, 0, 1.0, 1.0).is_err());
    }
}
