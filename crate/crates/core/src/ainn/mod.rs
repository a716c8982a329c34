//! Acoustics-informed neural network: two real-valued perceptrons fitted to
//! the real and imaginary parts of measured pressures, regularized by the
//! Helmholtz residual, then evaluated at virtual positions.

mod adam;
mod loss;
mod mlp;
mod train;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{
    data_loss, data_loss_gradient, helmholtz_residual, physics_loss, physics_loss_gradient, total_loss,
    total_loss_gradient, LossBreakdown,
};
pub use mlp::{forward, hidden_width, init_network, laplacian, parameter_count, MlpParams};
pub use train::{
    sample_collocation, train, train_network, CollocationRegion, NetworkReport, TrainingConfig, TrainingReport,
};

use crate::acoustics::PressureSnapshot;
use crate::geometry::MicPosition;

/// Which pressure component a network models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Real,
    Imag,
}

impl std::fmt::Display for Part {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Part::Real => "real",
            Part::Imag => "imag",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AinnError {
    #[error("k·r must be positive, got {0}")]
    NonPositiveKr(f64),
    #[error("wavenumber must be positive and finite, got {0}")]
    InvalidWavenumber(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parameter shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("network parameters must be finite")]
    NonFiniteParameters,
    #[error("measured pressures must be finite")]
    NonFiniteData,
    #[error("no collocation points")]
    NoCollocationPoints,
    #[error("no training microphones")]
    NoTrainingData,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{part} network diverged at epoch {epoch}")]
    Diverged { epoch: usize, part: Part },
}

/// Trained real/imaginary network pair for one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AinnPredictor {
    pub real_net: MlpParams,
    pub imag_net: MlpParams,
    pub k: f64,
    pub frequency: f64,
    pub seed: u64,
    pub report: TrainingReport,
}

impl AinnPredictor {
    pub fn pressure_at(&self, x: f64, y: f64) -> Complex64 {
        Complex64::new(forward(&self.real_net, x, y), forward(&self.imag_net, x, y))
    }

    pub fn predict(&self, positions: &[MicPosition]) -> PressureSnapshot {
        predict(self, positions)
    }
}

/// `real_net(x, y) + j·imag_net(x, y)` at each position.
pub fn predict(pred: &AinnPredictor, positions: &[MicPosition]) -> PressureSnapshot {
    PressureSnapshot {
        frequency: pred.frequency,
        values: positions.iter().map(|p| pred.pressure_at(p.x, p.y)).collect(),
    }
}
