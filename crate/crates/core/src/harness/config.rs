//! Run configuration: JSON with a published schema, unknown keys rejected.

use std::f64::consts::PI;
use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::dynamics::{geometric_times, linear_times};
use crate::error::{Error, Result};
use crate::harness::sweep::{Param, SweepSpec};
use crate::lindblad::{LiouvillianForm, ModelParams};

#[derive(Clone, Debug, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Physical model; required by every command except `capacity`.
    #[serde(default)]
    pub model: Option<ModelParams>,
    #[serde(default = "default_form")]
    pub form: LiouvillianForm,
    /// RNG seed; the command-line flag takes precedence.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub evolve: Option<EvolveSection>,
    #[serde(default)]
    pub retrieval: Option<RetrievalSection>,
    #[serde(default)]
    pub capacity: Option<CapacitySection>,
    #[serde(default)]
    pub wigner: Option<WignerSection>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    /// Re-derive one model parameter before running, so that γ₁τ_n hits a level.
    #[serde(default)]
    pub calibrate: Option<Calibration>,
}

/// Root-finding of `param` on [lo, hi] such that γ₁τ_n = `level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub param: Param,
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

fn default_form() -> LiouvillianForm {
    LiouvillianForm::General
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Write the steady-state density matrix next to the spectrum.
    #[serde(default = "default_true")]
    pub steady_state: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { steady_state: true }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnits {
    /// Times in units of 1/γ₁.
    Absolute,
    /// Times in units of τ_n, the n-th slowest decay time.
    TauN,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeGrid {
    /// t = 0 followed by `points − 1` geometric steps on [start, stop].
    Geometric { start: f64, stop: f64, points: usize, #[serde(default = "absolute")] units: TimeUnits },
    Linear { stop: f64, points: usize, #[serde(default = "absolute")] units: TimeUnits },
    Explicit { values: Vec<f64>, #[serde(default = "absolute")] units: TimeUnits },
}

fn absolute() -> TimeUnits {
    TimeUnits::Absolute
}

impl TimeGrid {
    pub fn units(&self) -> TimeUnits {
        match self {
            TimeGrid::Geometric { units, .. } | TimeGrid::Linear { units, .. } | TimeGrid::Explicit { units, .. } => *units,
        }
    }

    /// Times in 1/γ₁, with `tau_n` supplying the unit for relative grids.
    pub fn resolve(&self, tau_n: Option<f64>) -> Result<Vec<f64>> {
        let scale = match self.units() {
            TimeUnits::Absolute => 1.0,
            TimeUnits::TauN => tau_n
                .filter(|t| t.is_finite() && *t > 0.0)
                .ok_or_else(|| Error::Config("time grid in units of tau_n needs a finite τ_n".into()))?,
        };
        let raw = match self {
            TimeGrid::Geometric { start, stop, points, .. } => geometric_times(*start, *stop, *points),
            TimeGrid::Linear { stop, points, .. } => linear_times(*stop, *points),
            TimeGrid::Explicit { values, .. } => {
                let mut v = values.clone();
                if v.iter().any(|t| !t.is_finite() || *t < 0.0) {
                    return Err(Error::Config("explicit times must be finite and nonnegative".into()));
                }
                v.sort_by(f64::total_cmp);
                Ok(v)
            }
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        Ok(raw.into_iter().map(|t| t * scale).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Vacuum,
    Fock { k: usize },
    Coherent { re: f64, im: f64 },
    /// Coherent state of amplitude `scale`·β at phase `phase` (radians), β the lobe amplitude.
    LobeScaled { scale: f64, phase: f64 },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::LobeScaled { scale: 0.5, phase: 2.0 * PI / 9.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMethod {
    Spectral,
    Integrate,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    #[serde(default)]
    pub initial: InitialState,
    pub times: TimeGrid,
    #[serde(default = "default_method")]
    pub method: EvolveMethod,
    /// Also evolve inside the n-dimensional metastable manifold.
    #[serde(default = "default_true")]
    pub metastable: bool,
    /// Relative tolerance of the integrator.
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

fn default_method() -> EvolveMethod {
    EvolveMethod::Spectral
}

fn default_rtol() -> f64 {
    1e-8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    AmbiguousNumerical,
    AmbiguousTheoretical,
    Unambiguous,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::AmbiguousNumerical => "ambiguous_numerical",
            StrategyKind::AmbiguousTheoretical => "ambiguous_theoretical",
            StrategyKind::Unambiguous => "unambiguous",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RetrievalSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub times: TimeGrid,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    /// Input amplitudes are uniform on [0, factor·β].
    #[serde(default = "default_amplitude_factor")]
    pub amplitude_factor: f64,
    /// Repeat the experiment at this smaller truncation, measuring with the
    /// full-dimension POVMs cut down to it.
    #[serde(default)]
    pub truncated_dim: Option<usize>,
}

fn default_trials() -> usize {
    crate::memory::retrieval::DEFAULT_TRIALS
}

fn default_strategies() -> Vec<StrategyKind> {
    vec![StrategyKind::AmbiguousNumerical, StrategyKind::Unambiguous]
}

fn default_amplitude_factor() -> f64 {
    2.0
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    #[serde(default = "default_ns")]
    pub ns: Vec<u32>,
    #[serde(default = "default_beta_min")]
    pub beta_min: f64,
    #[serde(default = "default_beta_max")]
    pub beta_max: f64,
    #[serde(default = "default_beta_points")]
    pub points: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for CapacitySection {
    fn default() -> Self {
        Self {
            ns: default_ns(),
            beta_min: default_beta_min(),
            beta_max: default_beta_max(),
            points: default_beta_points(),
            epsilon: default_epsilon(),
        }
    }
}

fn default_ns() -> Vec<u32> {
    (2..=8).collect()
}

fn default_beta_min() -> f64 {
    0.05
}

fn default_beta_max() -> f64 {
    6.0
}

fn default_beta_points() -> usize {
    240
}

fn default_epsilon() -> f64 {
    crate::memory::capacity::DEFAULT_EPSILON
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum WignerTarget {
    SteadyState,
    MetastablePhases,
    Lobes,
    AmbiguousPovm,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct WignerSection {
    #[serde(default = "default_targets")]
    pub targets: Vec<WignerTarget>,
    /// Grid half-width; defaults to β + 3.
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub points: usize,
    /// Steady states are computed once per listed γ₁ (default: the model's).
    #[serde(default)]
    pub gamma1_values: Vec<f64>,
    /// Also write the compact binary grid next to each CSV.
    #[serde(default)]
    pub binary: bool,
}

impl Default for WignerSection {
    fn default() -> Self {
        Self { targets: default_targets(), half_width: None, points: default_grid_points(), gamma1_values: Vec::new(), binary: false }
    }
}

fn default_targets() -> Vec<WignerTarget> {
    vec![WignerTarget::SteadyState]
}

fn default_grid_points() -> usize {
    201
}

impl RunConfig {
    /// The model as written; `dim` may still be 0 (resolved per use).
    pub fn model(&self) -> Result<ModelParams> {
        let m = self.model.clone().ok_or_else(|| Error::Config("missing `model` section".into()))?;
        m.clone().with_resolved_dimension().and_then(|r| r.validate()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(m)
    }
}

/// Parses a configuration, naming the offending key on failure.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}

/// Reads and parses a configuration file; also returns its raw bytes for hashing.
pub fn load_config(path: &Path) -> Result<(RunConfig, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok((parse_config(text)?, bytes))
}

/// JSON schema of [`RunConfig`].
pub fn config_schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(RunConfig)).expect("schema serializes")
}
