//! Versioned JSON model files for trained predictors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::ainn::{AinnPredictor, MlpParams, TrainingReport};

pub const MODEL_FORMAT: &str = "cmavm-ainn-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkFile {
    layer_sizes: [usize; 4],
    params: Vec<f64>,
}

impl NetworkFile {
    fn from_net(net: &MlpParams) -> Self {
        Self {
            layer_sizes: net.layer_sizes(),
            params: net.as_slice().to_vec(),
        }
    }

    fn into_net(self) -> Result<MlpParams, IoError> {
        let [input, h, h2, output] = self.layer_sizes;
        if input != 2 || output != 1 || h != h2 {
            return Err(IoError::Model(format!("unsupported layer sizes {:?}", self.layer_sizes)));
        }
        MlpParams::from_flat(h, self.params).map_err(|e| IoError::Model(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    k: f64,
    frequency_hz: f64,
    seed: u64,
    config_digest: String,
    real: NetworkFile,
    imag: NetworkFile,
    report: TrainingReport,
}

pub fn model_to_json(pred: &AinnPredictor, config_digest: &str) -> Result<String, IoError> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        k: pred.k,
        frequency_hz: pred.frequency,
        seed: pred.seed,
        config_digest: config_digest.to_string(),
        real: NetworkFile::from_net(&pred.real_net),
        imag: NetworkFile::from_net(&pred.imag_net),
        report: pred.report.clone(),
    };
    serde_json::to_string(&file).map_err(|e| IoError::Json(e.to_string()))
}

/// Returns the predictor and the config digest it was trained under.
pub fn model_from_json(text: &str) -> Result<(AinnPredictor, String), IoError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(IoError::Model(format!("unexpected format tag `{}`", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(IoError::Model(format!("unsupported model version {}", file.version)));
    }
    if file.real.layer_sizes != file.imag.layer_sizes {
        return Err(IoError::Model("real and imaginary networks differ in shape".into()));
    }
    let pred = AinnPredictor {
        real_net: file.real.into_net()?,
        imag_net: file.imag.into_net()?,
        k: file.k,
        frequency: file.frequency_hz,
        seed: file.seed,
        report: file.report,
    };
    Ok((pred, file.config_digest))
}

pub fn save_model(pred: &AinnPredictor, config_digest: &str, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, model_to_json(pred, config_digest)?).map_err(|e| IoError::file(path, e))
}

pub fn load_model(path: &Path) -> Result<(AinnPredictor, String), IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    model_from_json(&text)
}
