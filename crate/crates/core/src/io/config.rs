//! TOML experiment configuration.
//!
//! ```toml
//! scenario = "cmavm30"          # required
//! look_direction = 0.0          # radians
//! speed_of_sound = 340.0
//! delta = 1e-8
//! amplitude = 1.0
//! output_dir = "out"
//! frequencies = [1084.0, 1728.0]  # optional subset, overrides the grid
//! virtual_pattern = true        # beampatterns for virtual scenarios
//! virtual_source_step_deg = 6.0 # one AINN training per source angle
//! strict_delta = false          # exact constraints (δ = 0)
//! transfer_functions = "tf.csv" # optional measured input
//!
//! [frequency_grid]
//! start = 100.0
//! stop = 4000.0
//! step = 4.0
//!
//! [angle_grid]
//! step_deg = 1.0
//!
//! [[layout.rings]]              # only with scenario = "custom"
//! radius = 0.12
//! count = 30
//! first_angle = 0.0
//! kind = "physical"
//!
//! [ainn]
//! max_epochs = 200000
//! rng_seed = 0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;
use crate::ainn::TrainingConfig;
use crate::beamformer::DEFAULT_REGULARIZATION;
use crate::geometry::{ArrayLayout, MicKind, RingSpec, SPEED_OF_SOUND};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            start: 100.0,
            stop: 4000.0,
            step: 4.0,
        }
    }
}

impl FrequencyGrid {
    /// `start, start + step, …` up to and including `stop` (within 1e-9 of a step).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleGrid {
    pub step_deg: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self { step_deg: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub radius: f64,
    pub count: usize,
    #[serde(default)]
    pub first_angle: f64,
    #[serde(default = "physical")]
    pub kind: MicKind,
}

fn physical() -> MicKind {
    MicKind::Physical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub rings: Vec<RingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutConfig>,
    #[serde(default)]
    pub look_direction: f64,
    #[serde(default = "default_speed")]
    pub speed_of_sound: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub virtual_pattern: bool,
    #[serde(default = "default_source_step")]
    pub virtual_source_step_deg: f64,
    #[serde(default)]
    pub strict_delta: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_functions: Option<PathBuf>,
    #[serde(default)]
    pub frequency_grid: FrequencyGrid,
    #[serde(default)]
    pub angle_grid: AngleGrid,
    #[serde(default)]
    pub ainn: TrainingConfig,
}

fn default_speed() -> f64 {
    SPEED_OF_SOUND
}
fn default_delta() -> f64 {
    DEFAULT_REGULARIZATION
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}
fn default_source_step() -> f64 {
    6.0
}

impl ExperimentConfig {
    /// Defaults for a named scenario.
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self {
            scenario,
            layout: None,
            look_direction: 0.0,
            speed_of_sound: default_speed(),
            delta: default_delta(),
            amplitude: default_amplitude(),
            output_dir: default_output_dir(),
            frequencies: None,
            virtual_pattern: true,
            virtual_source_step_deg: default_source_step(),
            strict_delta: false,
            transfer_functions: None,
            frequency_grid: FrequencyGrid::default(),
            angle_grid: AngleGrid::default(),
            ainn: TrainingConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |key: &str, message: String| Err(IoError::Config { key: key.to_string(), message });
        if !self.look_direction.is_finite() {
            return bad("look_direction", "must be finite".into());
        }
        if !(self.speed_of_sound > 0.0 && self.speed_of_sound.is_finite()) {
            return bad("speed_of_sound", format!("must be positive, got {}", self.speed_of_sound));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta", format!("must be non-negative, got {}", self.delta));
        }
        if !(self.amplitude.is_finite() && self.amplitude != 0.0) {
            return bad("amplitude", "must be finite and non-zero".into());
        }
        let g = &self.frequency_grid;
        if !(g.step > 0.0 && g.step.is_finite()) {
            return bad("frequency_grid.step", format!("must be positive, got {}", g.step));
        }
        if !(g.start > 0.0 && g.stop >= g.start && g.stop.is_finite()) {
            return bad("frequency_grid", format!("need 0 < start ≤ stop, got [{}, {}]", g.start, g.stop));
        }
        if let Some(f) = &self.frequencies {
            if f.is_empty() {
                return bad("frequencies", "must not be empty".into());
            }
            if let Some(x) = f.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return bad("frequencies", format!("must be positive, got {x}"));
            }
        }
        let a = self.angle_grid.step_deg;
        if !(a > 0.0 && a <= 360.0) {
            return bad("angle_grid.step_deg", format!("must lie in (0, 360], got {a}"));
        }
        let v = self.virtual_source_step_deg;
        if !(v > 0.0 && v <= 360.0) {
            return bad("virtual_source_step_deg", format!("must lie in (0, 360], got {v}"));
        }
        self.ainn.validate().map_err(|e| IoError::Config {
            key: "ainn".into(),
            message: e.to_string(),
        })?;
        match (&self.layout, self.scenario) {
            (None, Scenario::Custom) => return bad("layout", "required for scenario `custom`".into()),
            (Some(_), s) if s != Scenario::Custom => {
                return bad("layout", format!("only allowed with scenario `custom`, not `{s}`"))
            }
            _ => {}
        }
        if let Some(layout) = &self.layout {
            if layout.rings.is_empty() {
                return bad("layout.rings", "must list at least one ring".into());
            }
            for (i, r) in layout.rings.iter().enumerate() {
                if !(r.radius > 0.0 && r.radius.is_finite()) {
                    return bad(&format!("layout.rings[{i}].radius"), format!("must be positive, got {}", r.radius));
                }
                if r.count == 0 {
                    return bad(&format!("layout.rings[{i}].count"), "must be at least 1".into());
                }
                if !r.first_angle.is_finite() {
                    return bad(&format!("layout.rings[{i}].first_angle"), "must be finite".into());
                }
            }
        }
        self.array_layout().map(|_| ())
    }

    pub fn array_layout(&self) -> Result<ArrayLayout, IoError> {
        let rings = match (&self.layout, self.scenario.rings()) {
            (Some(layout), _) => layout
                .rings
                .iter()
                .map(|r| RingSpec::new(r.radius, r.count, r.first_angle, r.kind))
                .collect::<Result<Vec<_>, _>>(),
            (None, Some(rings)) => Ok(rings),
            (None, None) => {
                return Err(IoError::Config {
                    key: "layout".into(),
                    message: "required for scenario `custom`".into(),
                })
            }
        };
        rings
            .and_then(|rings| ArrayLayout::new(rings, self.speed_of_sound))
            .map_err(|e| IoError::Config {
                key: "layout".into(),
                message: e.to_string(),
            })
    }

    /// Frequency bins to evaluate: the explicit subset if given, else the grid.
    pub fn frequency_bins(&self) -> Vec<f64> {
        self.frequencies.clone().unwrap_or_else(|| self.frequency_grid.values())
    }

    /// Regularization actually used: zero in strict mode.
    pub fn effective_delta(&self) -> f64 {
        if self.strict_delta {
            0.0
        } else {
            self.delta
        }
    }

    pub fn to_toml(&self) -> Result<String, IoError> {
        toml::to_string(self).map_err(|e| IoError::Config {
            key: "<serialize>".into(),
            message: e.to_string(),
        })
    }

    /// SHA-256 of the canonical TOML serialization, ignoring `output_dir`
    /// so that the same experiment written elsewhere keeps its digest.
    pub fn digest(&self) -> Result<String, IoError> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, IoError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| IoError::Config {
        key: key_of(&e),
        message: e.message().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    parse_config(&text)
}

pub fn save_config(config: &ExperimentConfig, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, config.to_toml()?).map_err(|e| IoError::file(path, e))
}

/// Best-effort key name for a TOML decoding error.
fn key_of(e: &toml::de::Error) -> String {
    let msg = e.message();
    for marker in ["missing field `", "unknown field `"] {
        if let Some(start) = msg.find(marker) {
            let rest = &msg[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    "<document>".to_string()
}
