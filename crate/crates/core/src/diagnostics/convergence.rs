use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::integrator::integrate;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    /// Truncation orders, ascending; the last one is the reference.
    pub m: Vec<usize>,
    /// `e_m = max_t ||u^m(t) - u^{m_ref}(t)||`.
    pub errors: Vec<f64>,
    /// `(m, e_m / e_{2m})` for every `m` whose double is a non-reference entry.
    pub ratios: Vec<(usize, f64)>,
}

/// Self-convergence of the Galerkin scheme in `m` at fixed step and quadrature.
pub fn galerkin_convergence(config: &RunConfig, m_list: &[usize], quad_nodes: usize) -> Result<ConvergenceTable> {
    let mut ms = m_list.to_vec();
    ms.sort_unstable();
    ms.dedup();
    if ms.len() < 2 {
        return Err(Error::InvalidArgument("need at least two truncation orders".into()));
    }
    let m_ref = *ms.last().expect("nonempty");
    let runs: Vec<Vec<Vec<f64>>> = ms
        .par_iter()
        .map(|&m| -> Result<Vec<Vec<f64>>> {
            let model = config.build_model_with(config.projector_with(m, quad_nodes)?)?;
            let phi = config.initial_history_at(m)?;
            let res = integrate(&phi, &model, &config.integrator_config())?;
            Ok(res
                .trajectory
                .simulated()
                .iter()
                .map(|k| k.state.resized(m_ref).into_coefficients())
                .collect())
        })
        .collect::<Result<_>>()?;
    let reference = runs.last().expect("nonempty");
    let errors: Vec<f64> = runs
        .iter()
        .map(|run| {
            run.iter()
                .zip(reference)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                .fold(0.0, f64::max)
        })
        .collect();
    let ratios = ms
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| {
            let j = ms.iter().position(|&n| n == 2 * m)?;
            (j + 1 < ms.len()).then(|| (m, errors[i] / errors[j]))
        })
        .collect();
    Ok(ConvergenceTable { m: ms, errors, ratios })
}
