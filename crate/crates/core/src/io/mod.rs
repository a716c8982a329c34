//! Configuration, measured-data ingestion and result export.

mod config;
mod export;
mod model;
mod transfer;

use std::path::Path;

use thiserror::Error;

pub use config::{
    load_config, parse_config, save_config, AngleGrid, ExperimentConfig, FrequencyGrid, LayoutConfig, RingConfig,
};
pub use export::{
    format_sig9, load_manifest, read_beampattern, read_metrics, save_beampattern, save_manifest, save_metrics,
    BeampatternRow, MetricRow, RunManifest, Seeds, TrainingSummary,
};
pub use model::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT, MODEL_VERSION};
pub use transfer::{
    dft_bin, ir_to_transfer_function, read_impulse_responses, read_transfer_functions, write_transfer_functions,
    ImpulseResponse, ImpulseResponseSet, TransferFunctionRow, TransferFunctionTable,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("{0}")]
    Table(String),
    #[error("json: {0}")]
    Json(String),
    #[error("model file: {0}")]
    Model(String),
    #[error("non-finite value {0}")]
    NonFinite(String),
    #[error("frequency {frequency} Hz is not below the Nyquist frequency {nyquist} Hz")]
    AboveNyquist { frequency: f64, nyquist: f64 },
}

impl IoError {
    pub(crate) fn file(path: &Path, e: impl std::fmt::Display) -> Self {
        IoError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub(crate) fn csv(path: &Path, e: csv::Error) -> Self {
        Self::file(path, e)
    }
}
