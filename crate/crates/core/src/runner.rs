//! End-to-end experiment pipeline: pressures (synthetic or measured), AINN
//! virtual microphones, weight design, metrics, and file output.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::acoustics::{synthesize_at, wavenumber, AcousticsError, PlaneWaveField, PressureSnapshot};
use crate::ainn::{self, AinnError, AinnPredictor};
use crate::beamformer::{design, BeamformerError, BeamformerWeights};
use crate::geometry::{ArrayLayout, MicKind, MicPosition};
use crate::io::{
    self, read_transfer_functions, save_beampattern, save_manifest, save_metrics, save_model, ExperimentConfig,
    IoError, RunManifest, TrainingSummary, TransferFunctionTable,
};
use crate::metrics::{
    angle_grid, directivity_index_for_response, response, white_noise_gain_for_response, BeampatternGrid,
    MetricCurve, MetricsError,
};

pub const METRICS_FILE: &str = "metrics.csv";
pub const BEAMPATTERN_FILE: &str = "beampattern.csv";
pub const MANIFEST_FILE: &str = "run.json";
pub const MODELS_DIR: &str = "models";

/// A failure in one stage of the per-frequency pipeline.
#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error(transparent)]
    Ainn(#[from] AinnError),
    #[error(transparent)]
    Beamformer(#[from] BeamformerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl StageError {
    pub fn stage(&self) -> &'static str {
        match self {
            StageError::Acoustics(_) => "acoustics",
            StageError::Ainn(_) => "ainn",
            StageError::Beamformer(_) => "beamformer",
            StageError::Metrics(_) => "metrics",
            StageError::Io(_) => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("at {frequency} Hz: {source}")]
    AtFrequency { frequency: f64, source: StageError },
    #[error("frequency grids differ: {0}")]
    GridMismatch(String),
}

impl RunError {
    fn at(frequency: f64) -> impl Fn(StageError) -> RunError {
        move |source| RunError::AtFrequency { frequency, source }
    }
}

/// Trained predictors keyed by everything that determines the training, so
/// scenarios sharing a physical ring reuse networks instead of retraining
/// bit-identical copies.
#[derive(Debug, Default)]
pub struct TrainingCache {
    entries: Mutex<HashMap<String, Arc<AinnPredictor>>>,
}

impl TrainingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_train(
        &self,
        key: String,
        train: impl FnOnce() -> Result<AinnPredictor, AinnError>,
    ) -> Result<Arc<AinnPredictor>, AinnError> {
        if let Some(p) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(p));
        }
        let p = Arc::new(train()?);
        self.entries.lock().expect("cache lock").insert(key, Arc::clone(&p));
        Ok(p)
    }
}

fn training_key(
    config: &ExperimentConfig,
    physical: &[MicPosition],
    measured: &PressureSnapshot,
    k: f64,
) -> Result<String, IoError> {
    let mut hasher = Sha256::new();
    let ainn = toml::to_string(&config.ainn).map_err(|e| IoError::Config {
        key: "ainn".into(),
        message: e.to_string(),
    })?;
    hasher.update(ainn.as_bytes());
    hasher.update(k.to_bits().to_le_bytes());
    for (p, v) in physical.iter().zip(&measured.values) {
        for x in [p.x, p.y, v.re, v.im] {
            hasher.update(x.to_bits().to_le_bytes());
        }
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Everything computed at one frequency bin.
#[derive(Debug, Clone)]
pub struct FrequencyResult {
    pub frequency: f64,
    pub weights: BeamformerWeights,
    pub look_response: Complex64,
    pub di_db: f64,
    pub wng_db: f64,
    /// Responses over [`RunOutput::pattern_angles`].
    pub pattern: Vec<Complex64>,
    /// Predictors used, keyed by source angle.
    pub predictors: Vec<(f64, Arc<AinnPredictor>)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub layout: ArrayLayout,
    pub pattern_angles: Vec<f64>,
    pub results: Vec<FrequencyResult>,
}

impl RunOutput {
    pub fn frequencies(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.frequency).collect()
    }

    pub fn di_curve(&self) -> MetricCurve {
        MetricCurve {
            frequencies: self.frequencies(),
            values: self.results.iter().map(|r| r.di_db).collect(),
        }
    }

    pub fn wng_curve(&self) -> MetricCurve {
        MetricCurve {
            frequencies: self.frequencies(),
            values: self.results.iter().map(|r| r.wng_db).collect(),
        }
    }

    pub fn beampattern(&self) -> BeampatternGrid {
        BeampatternGrid {
            frequencies: self.frequencies(),
            angles: self.pattern_angles.clone(),
            values: self.results.iter().map(|r| r.pattern.clone()).collect(),
        }
    }

    pub fn result_at(&self, frequency: f64) -> Option<&FrequencyResult> {
        self.results.iter().find(|r| r.frequency == frequency)
    }
}

/// Where physical pressures come from.
enum Source {
    Synthetic,
    Measured(TransferFunctionTable),
}

struct Pipeline<'a> {
    config: &'a ExperimentConfig,
    layout: ArrayLayout,
    positions: Vec<MicPosition>,
    physical: Vec<MicPosition>,
    virtual_positions: Vec<MicPosition>,
    source: Source,
    cache: &'a TrainingCache,
}

impl Pipeline<'_> {
    fn physical_pressures(&self, frequency: f64, angle: f64) -> Result<PressureSnapshot, StageError> {
        match &self.source {
            Source::Synthetic => {
                let field = PlaneWaveField::new(
                    frequency,
                    Complex64::new(self.config.amplitude, 0.0),
                    angle,
                    self.config.speed_of_sound,
                )?;
                Ok(synthesize_at(&field, &self.physical))
            }
            Source::Measured(table) => Ok(table.snapshot(frequency, angle, self.physical.len())?),
        }
    }

    /// Pressures at every layout position in layout order, plus the predictor
    /// used for the virtual ones.
    fn array_pressures(
        &self,
        frequency: f64,
        angle: f64,
    ) -> Result<(Vec<Complex64>, Option<Arc<AinnPredictor>>), StageError> {
        let measured = self.physical_pressures(frequency, angle)?;
        if self.virtual_positions.is_empty() {
            return Ok((measured.values, None));
        }
        let k = wavenumber(frequency, self.config.speed_of_sound)?;
        let key = training_key(self.config, &self.physical, &measured, k)?;
        let predictor = self
            .cache
            .get_or_train(key, || ainn::train(&measured, &self.physical, k, &self.config.ainn))?;
        let predicted = predictor.predict(&self.virtual_positions);
        let (mut phys, mut virt) = (measured.values.into_iter(), predicted.values.into_iter());
        let values = self
            .positions
            .iter()
            .map(|p| match p.kind {
                MicKind::Physical => phys.next(),
                MicKind::Virtual => virt.next(),
            })
            .collect::<Option<Vec<_>>>()
            .expect("pressure count matches layout");
        Ok((values, Some(predictor)))
    }

    fn evaluate(&self, frequency: f64, pattern_angles: &[f64]) -> Result<FrequencyResult, StageError> {
        let look = self.config.look_direction;
        let weights = design(&self.layout, frequency, look, self.config.effective_delta())?;
        let mut predictors = Vec::new();
        let mut pattern = Vec::with_capacity(pattern_angles.len());
        let mut look_response = None;
        for &angle in pattern_angles {
            let (pressures, predictor) = self.array_pressures(frequency, angle)?;
            let y = response(&weights.h, &pressures)?;
            if same_angle(angle, look) {
                look_response = Some(y);
            }
            if let Some(p) = predictor {
                predictors.push((angle, p));
            }
            pattern.push(y);
        }
        let look_response = match look_response {
            Some(y) => y,
            None => {
                let (pressures, predictor) = self.array_pressures(frequency, look)?;
                if let Some(p) = predictor {
                    predictors.push((look, p));
                }
                response(&weights.h, &pressures)?
            }
        };
        let di_db = directivity_index_for_response(&weights, &self.layout, look_response)?;
        let wng_db = white_noise_gain_for_response(&weights, look_response)?;
        Ok(FrequencyResult {
            frequency,
            weights,
            look_response,
            di_db,
            wng_db,
            pattern,
            predictors,
        })
    }
}

fn same_angle(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d < 1e-12 || std::f64::consts::TAU - d < 1e-12
}

/// Source angles at which beampatterns are evaluated.
pub fn pattern_angles(config: &ExperimentConfig, layout: &ArrayLayout, measured: Option<&TransferFunctionTable>, frequency: f64) -> Vec<f64> {
    if let Some(table) = measured {
        return table.source_angles(frequency);
    }
    if layout.has_virtual() {
        if config.virtual_pattern {
            angle_grid(config.virtual_source_step_deg)
        } else {
            vec![]
        }
    } else {
        angle_grid(config.angle_grid.step_deg)
    }
}

/// Runs the pipeline in memory, sharing trained networks through `cache`.
pub fn evaluate_with_cache(config: &ExperimentConfig, cache: &TrainingCache) -> Result<RunOutput, RunError> {
    config.validate()?;
    let layout = config.array_layout()?;
    let source = match &config.transfer_functions {
        Some(path) => Source::Measured(read_transfer_functions(path)?),
        None => Source::Synthetic,
    };
    let frequencies = config.frequency_bins();
    let measured = match &source {
        Source::Measured(t) => Some(t),
        Source::Synthetic => None,
    };
    let angles = pattern_angles(config, &layout, measured, frequencies[0]);
    for &f in &frequencies[1..] {
        if pattern_angles(config, &layout, measured, f) != angles {
            return Err(RunError::GridMismatch(format!("source angles at {f} Hz differ from those at {} Hz", frequencies[0])));
        }
    }
    let pipeline = Pipeline {
        config,
        positions: layout.positions(),
        physical: layout.positions_of_kind(MicKind::Physical),
        virtual_positions: layout.positions_of_kind(MicKind::Virtual),
        layout: layout.clone(),
        source,
        cache,
    };
    let results = frequencies
        .par_iter()
        .map(|&f| pipeline.evaluate(f, &angles).map_err(RunError::at(f)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunOutput {
        config: config.clone(),
        layout,
        pattern_angles: angles,
        results,
    })
}

pub fn evaluate(config: &ExperimentConfig) -> Result<RunOutput, RunError> {
    evaluate_with_cache(config, &TrainingCache::new())
}

/// Writes CSVs, the JSON manifest and optionally the trained models into
/// `dir`. Returns the paths written.
pub fn write_outputs(output: &RunOutput, dir: &Path, save_models: bool) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::File {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let config = &output.config;
    let digest = config.digest()?;
    let mut manifest = RunManifest::new(
        config.scenario.name(),
        digest.clone(),
        config.effective_delta(),
        config.ainn.rng_seed,
    );
    manifest.frequencies = output.results.len();
    let metrics_path = dir.join(METRICS_FILE);
    save_metrics(&output.di_curve(), &output.wng_curve(), &metrics_path)?;
    let pattern_path = dir.join(BEAMPATTERN_FILE);
    save_beampattern(&output.beampattern(), &pattern_path)?;
    manifest.files = vec![METRICS_FILE.to_string(), BEAMPATTERN_FILE.to_string()];
    let mut written = vec![metrics_path, pattern_path];

    for r in &output.results {
        for (angle, p) in &r.predictors {
            manifest.training.push(TrainingSummary {
                frequency_hz: r.frequency,
                source_angle_rad: *angle,
                real_epochs: p.report.real.epochs,
                imag_epochs: p.report.imag.epochs,
                real_data_loss: p.report.real.data_loss,
                imag_data_loss: p.report.imag.data_loss,
                real_physics_loss: p.report.real.physics_loss,
                imag_physics_loss: p.report.imag.physics_loss,
            });
            if save_models {
                let models = dir.join(MODELS_DIR);
                std::fs::create_dir_all(&models).map_err(|e| io::IoError::File {
                    path: models.display().to_string(),
                    message: e.to_string(),
                })?;
                let name = format!("{}hz_{}deg.json", io::format_sig9(r.frequency), io::format_sig9(angle.to_degrees()));
                let path = models.join(&name);
                save_model(p, &digest, &path)?;
                manifest.files.push(format!("{MODELS_DIR}/{name}"));
                written.push(path);
            }
        }
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    save_manifest(&manifest, &manifest_path)?;
    written.push(manifest_path);
    Ok(written)
}

/// Evaluates `config` and writes its outputs to `config.output_dir`.
pub fn run(config: &ExperimentConfig, cache: &TrainingCache, save_models: bool) -> Result<RunOutput, RunError> {
    let output = evaluate_with_cache(config, cache)?;
    write_outputs(&output, &config.output_dir, save_models)?;
    Ok(output)
}
