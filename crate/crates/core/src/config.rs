//! JSON run configuration.
//!
//! One document fully determines a run. Unknown keys are rejected, and every
//! constraint failure names the offending key path.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::history::HistorySegment;
use crate::integrator::{grid_count, IntegratorConfig, Scheme};
use crate::model::{BirthFunction, Cutoff, DelayFunctional, KernelSpec, Model};
use crate::spectral::{Domain1D, Projector, QuadratureGrid, SpectralField, Spectrum, MAX_TRUNCATION};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub m: usize,
    /// Defaults to the smallest admissible count, at least `8m + 1`.
    #[serde(default)]
    pub quad_nodes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
}

fn default_scheme() -> Scheme {
    Scheme::Etd2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub alpha: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum BirthConfig {
    Nicholson {
        p: f64,
        #[serde(rename = "W", default = "default_cap")]
        cap: f64,
    },
    Constant {
        c: f64,
    },
    Zero,
}

fn default_cap() -> f64 {
    50.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayConfig {
    Constant { eta0: f64 },
    PointState { eta_min: f64, c: f64 },
    IntegralState { eta_min: f64, c: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    #[serde(default)]
    pub enabled: bool,
    /// Radius `R̂`; the absorbing-ball radius when absent.
    #[serde(default)]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kernel: KernelConfig,
    pub birth: BirthConfig,
    pub delay: DelayConfig,
    #[serde(default)]
    pub cutoff: CutoffConfig,
}

/// Mode `k` of the initial history, `a_k (1 + s_k θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTerm {
    pub mode: usize,
    pub value: f64,
    #[serde(default)]
    pub slope: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Single,
    Ensemble,
    CompareDelay,
    Certify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_ensemble_size")]
    pub size: usize,
    /// Upper bound on `norm_L` of each member; the absorbing-ball radius when absent.
    #[serde(default)]
    pub norm_bound: Option<f64>,
}

fn default_ensemble_size() -> usize {
    32
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            size: default_ensemble_size(),
            norm_bound: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_margin")]
    pub epsilon: f64,
    #[serde(default = "default_margin")]
    pub epsilon0: f64,
    /// `R⁰`; `2R̂_α + M_b √|Ω|` when absent.
    #[serde(default)]
    pub lip_radius: Option<f64>,
}

fn default_alpha() -> f64 {
    0.75
}

fn default_margin() -> f64 {
    0.01
}

impl Default for RadiiConfig {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            epsilon: default_margin(),
            epsilon0: default_margin(),
            lip_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub domain: DomainConfig,
    pub spectral: SpectralConfig,
    pub time: TimeConfig,
    pub damping: f64,
    pub delay_window: f64,
    pub model: ModelConfig,
    pub initial_history: Vec<ModeTerm>,
    #[serde(default = "default_scenario")]
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub radii: RadiiConfig,
}

fn default_scenario() -> Scenario {
    Scenario::Single
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {v}")))
    }
}

fn nonnegative(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be nonnegative and finite, got {v}")))
    }
}

impl RunConfig {
    /// The reference configuration: Nicholson birth with a state-dependent point delay on `(0, π)`.
    pub fn canonical() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            domain: DomainConfig { length: PI },
            spectral: SpectralConfig {
                m: 32,
                quad_nodes: Some(257),
            },
            time: TimeConfig {
                h: 1e-3,
                horizon: 20.0,
                scheme: Scheme::Etd2,
            },
            damping: 0.1,
            delay_window: 1.0,
            model: ModelConfig {
                kernel: KernelConfig { alpha: 0.1, delta: 0.1 },
                birth: BirthConfig::Nicholson { p: 2.0, cap: 50.0 },
                delay: DelayConfig::PointState { eta_min: 0.1, c: 1.0 },
                cutoff: CutoffConfig::default(),
            },
            initial_history: vec![
                ModeTerm { mode: 1, value: 1.0, slope: 0.5 },
                ModeTerm { mode: 2, value: 0.5, slope: -0.4 },
                ModeTerm { mode: 3, value: 0.25, slope: 0.3 },
            ],
            scenario: Scenario::Single,
            seed: 0,
            output_dir: None,
            ensemble: EnsembleConfig::default(),
            radii: RadiiConfig::default(),
        }
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::config(".", e.to_string()))?;
        Self::from_value(value)
    }

    /// Reads a configuration file and applies `key.path=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::config(".", e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("configuration serializes")
    }

    /// SHA-256 of the key-sorted compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_value()).expect("configuration serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn quad_nodes(&self) -> usize {
        self.spectral.quad_nodes.unwrap_or_else(|| {
            let m = self.spectral.m;
            let need = KernelSpec::new(self.model.kernel.alpha, self.model.kernel.delta)
                .map(|k| k.required_nodes(m))
                .unwrap_or(0);
            (8 * m + 1).max(need)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        positive("domain.length", self.domain.length)?;
        let m = self.spectral.m;
        if m == 0 || m > MAX_TRUNCATION {
            return Err(Error::config("spectral.m", format!("must lie in 1..={MAX_TRUNCATION}, got {m}")));
        }
        positive("time.h", self.time.h)?;
        positive("time.T", self.time.horizon)?;
        nonnegative("damping", self.damping)?;
        positive("delay_window", self.delay_window)?;
        if let Err(e) = grid_count(self.delay_window, self.time.h, "r/h") {
            return Err(Error::config("time.h", format!("delay_window / h must be an integer: {e}")));
        }
        if let Err(e) = grid_count(self.time.horizon, self.time.h, "T/h") {
            return Err(Error::config("time.T", format!("T / h must be an integer: {e}")));
        }
        let k = &self.model.kernel;
        positive("model.kernel.alpha", k.alpha)?;
        if !(k.delta.is_finite() && (0.0..0.5).contains(&k.delta)) {
            return Err(Error::config("model.kernel.delta", format!("must lie in [0, 0.5), got {}", k.delta)));
        }
        let spec = KernelSpec::new(k.alpha, k.delta).map_err(|e| Error::config("model.kernel", e.to_string()))?;
        spec.check_resolution(self.quad_nodes(), m)
            .map_err(|e| Error::config("spectral.quad_nodes", e.to_string()))?;
        match self.model.birth {
            BirthConfig::Nicholson { p, cap } => {
                nonnegative("model.birth.p", p)?;
                positive("model.birth.W", cap)?;
            }
            BirthConfig::Constant { c } => {
                if !c.is_finite() {
                    return Err(Error::config("model.birth.c", "must be finite"));
                }
            }
            BirthConfig::Zero => {}
        }
        match self.model.delay {
            DelayConfig::Constant { eta0 } => {
                if !(eta0.is_finite() && eta0 >= 0.0 && eta0 <= self.delay_window) {
                    return Err(Error::config("model.delay.eta0", format!("must lie in [0, r], got {eta0}")));
                }
            }
            DelayConfig::PointState { eta_min, c } | DelayConfig::IntegralState { eta_min, c } => {
                if !(eta_min.is_finite() && eta_min >= 0.0 && eta_min <= self.delay_window) {
                    return Err(Error::config("model.delay.eta_min", format!("must lie in [0, r], got {eta_min}")));
                }
                nonnegative("model.delay.c", c)?;
            }
        }
        if let Some(r) = self.model.cutoff.radius {
            positive("model.cutoff.radius", r)?;
        }
        for (i, t) in self.initial_history.iter().enumerate() {
            if t.mode == 0 || t.mode > m {
                return Err(Error::config(
                    format!("initial_history[{i}].mode"),
                    format!("must lie in 1..={m}, got {}", t.mode),
                ));
            }
            if !(t.value.is_finite() && t.slope.is_finite()) {
                return Err(Error::config(format!("initial_history[{i}]"), "coefficients must be finite"));
            }
        }
        if self.ensemble.size == 0 {
            return Err(Error::config("ensemble.size", "must be at least 1"));
        }
        if let Some(b) = self.ensemble.norm_bound {
            positive("ensemble.norm_bound", b)?;
        }
        let a = self.radii.alpha;
        if !(a > 0.5 && a < 1.0) {
            return Err(Error::config("radii.alpha", format!("must lie in (1/2, 1), got {a}")));
        }
        positive("radii.epsilon", self.radii.epsilon)?;
        positive("radii.epsilon0", self.radii.epsilon0)?;
        if let Some(r) = self.radii.lip_radius {
            positive("radii.lip_radius", r)?;
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain1D> {
        Domain1D::new(self.domain.length)
    }

    pub fn projector(&self) -> Result<Projector> {
        self.projector_with(self.spectral.m, self.quad_nodes())
    }

    pub fn projector_with(&self, m: usize, nodes: usize) -> Result<Projector> {
        let domain = self.domain()?;
        Projector::new(
            Spectrum::new(domain, m)?,
            QuadratureGrid::gauss_legendre(&domain, nodes)?,
        )
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.model.kernel.alpha, self.model.kernel.delta)
    }

    pub fn birth(&self) -> BirthFunction {
        match self.model.birth {
            BirthConfig::Nicholson { p, cap } => BirthFunction::NicholsonClamped { p, cap },
            BirthConfig::Constant { c } => BirthFunction::Constant { c },
            BirthConfig::Zero => BirthFunction::Zero,
        }
    }

    pub fn delay(&self) -> DelayFunctional {
        let r = self.delay_window;
        match self.model.delay {
            DelayConfig::Constant { eta0 } => DelayFunctional::Constant { eta0 },
            DelayConfig::PointState { eta_min, c } => DelayFunctional::PointState { eta_min, r, c },
            DelayConfig::IntegralState { eta_min, c } => DelayFunctional::IntegralState { eta_min, r, c },
        }
    }

    /// The model without cutoff at the configured truncation.
    pub fn build_model(&self) -> Result<Model> {
        self.build_model_with(self.projector()?)
    }

    pub fn build_model_with(&self, projector: Projector) -> Result<Model> {
        Model::new(
            projector,
            self.kernel_spec()?,
            self.birth(),
            self.delay(),
            self.damping,
            self.delay_window,
        )
    }

    /// The model with the configured cutoff, using `default_radius` when none is set.
    pub fn build_model_with_cutoff(&self, default_radius: f64) -> Result<Model> {
        let model = self.build_model()?;
        if !self.model.cutoff.enabled {
            return Ok(model);
        }
        let radius = self.model.cutoff.radius.unwrap_or(default_radius);
        Ok(model.with_cutoff(Some(Cutoff::new(radius)?)))
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            h: self.time.h,
            horizon: self.time.horizon,
            scheme: self.time.scheme,
        }
    }

    pub fn window_steps(&self) -> usize {
        grid_count(self.delay_window, self.time.h, "r/h").expect("validated")
    }

    /// `φ(θ) = Σ a_k (1 + s_k θ) e_k` on the knot grid, at truncation `m`.
    pub fn initial_history_at(&self, m: usize) -> Result<HistorySegment> {
        history_from_terms(&self.initial_history, m, self.window_steps(), self.time.h)
    }

    pub fn initial_history(&self) -> Result<HistorySegment> {
        self.initial_history_at(self.spectral.m)
    }
}

/// History with coefficients `a_k (1 + s_k θ)`.
pub fn history_from_terms(terms: &[ModeTerm], m: usize, steps: usize, h: f64) -> Result<HistorySegment> {
    for t in terms {
        if t.mode == 0 || t.mode > m {
            return Err(Error::InvalidIndex(t.mode));
        }
    }
    HistorySegment::from_fn(steps, h, |theta| {
        let mut value = SpectralField::zeros(m);
        let mut slope = SpectralField::zeros(m);
        for t in terms {
            value.coefficients_mut()[t.mode - 1] += t.value * (1.0 + t.slope * theta);
            slope.coefficients_mut()[t.mode - 1] += t.value * t.slope;
        }
        (value, slope)
    })
}

/// Sets `key.path=value` in a JSON document. The value is parsed as JSON and
/// falls back to a string; numeric path segments index arrays.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(spec, "override must have the form key.path=value"))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), parsed);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::config(key, format!("`{part}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(key, format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = parsed;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::config(key, format!("`{part}` does not name a field"))),
        };
    }
    Err(Error::config(key, "empty override key"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trips() {
        let c = RunConfig::canonical();
        c.validate().unwrap();
        let back = RunConfig::from_value(c.to_value()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.window_steps(), 1000);
    }

    #[test]
    fn non_integral_window_names_step() {
        let mut v = RunConfig::canonical().to_value();
        apply_override(&mut v, "time.h=0.095238095238095").unwrap();
        match RunConfig::from_value(v) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "time.h"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_reported_with_path() {
        let mut v = RunConfig::canonical().to_value();
        apply_override(&mut v, "time.dt=0.1").unwrap();
        match RunConfig::from_value(v) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "time.dt");
                assert!(message.contains("dt"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overrides_reach_arrays_and_variants() {
        let mut v = RunConfig::canonical().to_value();
        apply_override(&mut v, "initial_history.0.value=2.5").unwrap();
        apply_override(&mut v, r#"model.delay={"variant":"constant","eta0":0.5}"#).unwrap();
        let c = RunConfig::from_value(v).unwrap();
        assert_eq!(c.initial_history[0].value, 2.5);
        assert_eq!(c.model.delay, DelayConfig::Constant { eta0: 0.5 });
        let mut v = RunConfig::canonical().to_value();
        assert!(apply_override(&mut v, "initial_history.9.value=1").is_err());
        assert!(apply_override(&mut v, "no_equals_sign").is_err());
    }

    #[test]
    fn bad_mode_is_rejected() {
        let mut c = RunConfig::canonical();
        c.initial_history[1].mode = 40;
        match c.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "initial_history[1].mode"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn initial_history_is_affine_in_theta() {
        let c = RunConfig::canonical();
        let phi = c.initial_history().unwrap();
        let first = &phi.knots()[0];
        assert!((first.state.coefficients()[0] - 0.5).abs() < 1e-15);
        assert!((first.state.coefficients()[1] - 0.7).abs() < 1e-15);
        assert_eq!(phi.knots()[1000].state.coefficients()[2], 0.25);
        assert_eq!(first.derivative.coefficients()[1], -0.2);
    }
}
