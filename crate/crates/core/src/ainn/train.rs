//! Full-batch training loop.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::{accumulate_data, accumulate_physics};
use super::mlp::{init_network, MlpParams, Scratch};
use super::{AinnError, AinnPredictor, Part};
use crate::acoustics::PressureSnapshot;
use crate::geometry::MicPosition;

/// Where collocation points are drawn. `outer_radius = None` means the
/// largest training-microphone radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollocationRegion {
    #[serde(default)]
    pub inner_radius: f64,
    #[serde(default)]
    pub outer_radius: Option<f64>,
}

impl Default for CollocationRegion {
    fn default() -> Self {
        Self {
            inner_radius: 0.0,
            outer_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub stop_window: usize,
    pub stop_rel_tol: f64,
    pub max_epochs: usize,
    pub collocation_count: usize,
    pub collocation_region: CollocationRegion,
    pub rng_seed: u64,
    pub use_physics_loss: bool,
    /// Epochs per entry of the recorded ε_T history.
    pub history_window: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            stop_window: 5000,
            stop_rel_tol: 1e-6,
            max_epochs: 200_000,
            collocation_count: 256,
            collocation_region: CollocationRegion::default(),
            rng_seed: 0,
            use_physics_loss: true,
            history_window: 200,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), AinnError> {
        let bad = |what: &str| Err(AinnError::InvalidConfig(what.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        if self.stop_window == 0 {
            return bad("stop_window must be at least 1");
        }
        if !(self.stop_rel_tol >= 0.0) {
            return bad("stop_rel_tol must be non-negative");
        }
        if self.collocation_count == 0 {
            return bad("collocation_count must be at least 1");
        }
        if self.history_window == 0 {
            return bad("history_window must be at least 1");
        }
        let region = self.collocation_region;
        if !(region.inner_radius >= 0.0) {
            return bad("collocation inner_radius must be non-negative");
        }
        if let Some(outer) = region.outer_radius {
            if !(outer > region.inner_radius) {
                return bad("collocation outer_radius must exceed inner_radius");
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// Outcome of training one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub data_loss: f64,
    pub physics_loss: f64,
    pub epochs: usize,
    pub converged: bool,
    /// Mean ε_T over consecutive `history_window` epochs.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub real: NetworkReport,
    pub imag: NetworkReport,
}

/// Uniform-by-area samples in the annulus `inner ≤ r ≤ outer`.
pub fn sample_collocation(count: usize, inner: f64, outer: f64, rng: &mut impl Rng) -> Vec<(f64, f64)> {
    let (a, b) = (inner * inner, outer * outer);
    (0..count)
        .map(|_| {
            let r = (a + (b - a) * rng.gen::<f64>()).sqrt();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            (r * phi.cos(), r * phi.sin())
        })
        .collect()
}

/// Trains one real-valued network. Exposed so the two parts can be studied
/// separately.
pub fn train_network(
    mut net: MlpParams,
    k: f64,
    points: &[(f64, f64)],
    targets: &[f64],
    collocation: &[(f64, f64)],
    config: &TrainingConfig,
    part: Part,
) -> Result<(MlpParams, NetworkReport), AinnError> {
    config.validate()?;
    let adam = config.adam();
    let mut state = AdamState::new(net.len());
    let mut scratch = Scratch::new(net.hidden());
    let mut grad = vec![0.0; net.len()];
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(config.stop_window + 1);
    let mut history = Vec::new();
    let mut window_sum = 0.0;
    let mut converged = false;
    let mut epochs = 0;

    let evaluate = |net: &MlpParams, scratch: &mut Scratch, grad: &mut [f64]| -> Result<(f64, f64), AinnError> {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let data = accumulate_data(net, points, targets, scratch, grad)?;
        let physics = if config.use_physics_loss {
            accumulate_physics(net, k, collocation, scratch, grad)?
        } else {
            0.0
        };
        Ok((data, physics))
    };

    while epochs < config.max_epochs {
        let (data, physics) = evaluate(&net, &mut scratch, &mut grad)?;
        let total = data + physics;
        if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(AinnError::Diverged { epoch: epochs, part });
        }
        window_sum += total;
        if (epochs + 1) % config.history_window == 0 {
            history.push(window_sum / config.history_window as f64);
            window_sum = 0.0;
        }
        recent.push_back(data);
        if recent.len() > config.stop_window {
            let past = recent.pop_front().unwrap_or(data);
            let change = (past - data).abs();
            if change <= config.stop_rel_tol * past.abs() {
                converged = true;
                break;
            }
        }
        adam_step(net.as_mut_slice(), &grad, &mut state, &adam)?;
        epochs += 1;
    }

    let (data_loss, physics_loss) = evaluate(&net, &mut scratch, &mut grad)?;
    if !(data_loss + physics_loss).is_finite() {
        return Err(AinnError::Diverged { epoch: epochs, part });
    }
    Ok((
        net,
        NetworkReport {
            data_loss,
            physics_loss,
            epochs,
            converged,
            loss_history: history,
        },
    ))
}

/// Trains the real and imaginary networks on the measured pressures.
pub fn train(
    measured: &PressureSnapshot,
    positions: &[MicPosition],
    k: f64,
    config: &TrainingConfig,
) -> Result<AinnPredictor, AinnError> {
    config.validate()?;
    if positions.is_empty() {
        return Err(AinnError::NoTrainingData);
    }
    if measured.values.len() != positions.len() {
        return Err(AinnError::LengthMismatch {
            expected: positions.len(),
            got: measured.values.len(),
        });
    }
    if measured.values.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(AinnError::NonFiniteData);
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(AinnError::InvalidWavenumber(k));
    }
    let radius = positions.iter().map(|p| p.radius).fold(0.0, f64::max);
    if radius <= 0.0 {
        return Err(AinnError::NonPositiveKr(0.0));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let region = config.collocation_region;
    let outer = region.outer_radius.unwrap_or(radius);
    let collocation = sample_collocation(config.collocation_count, region.inner_radius, outer, &mut rng);
    let seed_re: u64 = rng.gen();
    let seed_im: u64 = rng.gen();
    let net_re = init_network(k, radius, seed_re)?;
    let net_im = init_network(k, radius, seed_im)?;

    let points: Vec<(f64, f64)> = positions.iter().map(|p| (p.x, p.y)).collect();
    let re: Vec<f64> = measured.values.iter().map(|p| p.re).collect();
    let im: Vec<f64> = measured.values.iter().map(|p| p.im).collect();

    let (real, imag) = rayon::join(
        || train_network(net_re, k, &points, &re, &collocation, config, Part::Real),
        || train_network(net_im, k, &points, &im, &collocation, config, Part::Imag),
    );
    let (real_net, real_report) = real?;
    let (imag_net, imag_report) = imag?;
    Ok(AinnPredictor {
        real_net,
        imag_net,
        k,
        frequency: measured.frequency,
        seed: config.rng_seed,
        report: TrainingReport {
            real: real_report,
            imag: imag_report,
        },
    })
}
