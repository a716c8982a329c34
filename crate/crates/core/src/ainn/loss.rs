//! Data misfit, Helmholtz residual, and their parameter gradients.

use super::mlp::{forward, laplacian, output_gradient, residual_gradient, MlpParams, Scratch};
use super::AinnError;

/// `(1/M) Σ (pred − meas)²`.
pub fn data_loss(pred: &[f64], meas: &[f64]) -> Result<f64, AinnError> {
    if pred.len() != meas.len() || pred.is_empty() {
        return Err(AinnError::LengthMismatch {
            expected: meas.len(),
            got: pred.len(),
        });
    }
    let sum: f64 = pred.iter().zip(meas).map(|(p, m)| (p - m) * (p - m)).sum();
    Ok(sum / pred.len() as f64)
}

/// `(1/k²) ∇²p + p`, the Helmholtz residual for any field with a known
/// value and Laplacian at a point.
pub fn helmholtz_residual(value: f64, laplacian: f64, k: f64) -> f64 {
    laplacian / (k * k) + value
}

fn check_k(k: f64) -> Result<f64, AinnError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(AinnError::InvalidWavenumber(k));
    }
    Ok(1.0 / (k * k))
}

/// `(1/I) Σ ((1/k²) ∇²out + out)²` over the collocation points.
pub fn physics_loss(net: &MlpParams, k: f64, points: &[(f64, f64)]) -> Result<f64, AinnError> {
    check_k(k)?;
    if points.is_empty() {
        return Err(AinnError::NoCollocationPoints);
    }
    let sum: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = helmholtz_residual(forward(net, x, y), laplacian(net, x, y), k);
            r * r
        })
        .sum();
    Ok(sum / points.len() as f64)
}

/// Data and physics terms of the training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub data: f64,
    pub physics: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        total_loss(self.data, self.physics)
    }
}

/// `ε_T = ε_D + ε_A`.
pub fn total_loss(data: f64, physics: f64) -> f64 {
    data + physics
}

/// Data loss of `net` on `(points, targets)` together with its gradient.
pub fn data_loss_gradient(
    net: &MlpParams,
    points: &[(f64, f64)],
    targets: &[f64],
) -> Result<(f64, Vec<f64>), AinnError> {
    let mut grad = vec![0.0; net.len()];
    let mut scratch = Scratch::new(net.hidden());
    let loss = accumulate_data(net, points, targets, &mut scratch, &mut grad)?;
    Ok((loss, grad))
}

/// Physics loss of `net` with its gradient.
pub fn physics_loss_gradient(
    net: &MlpParams,
    k: f64,
    points: &[(f64, f64)],
) -> Result<(f64, Vec<f64>), AinnError> {
    let mut grad = vec![0.0; net.len()];
    let mut scratch = Scratch::new(net.hidden());
    let loss = accumulate_physics(net, k, points, &mut scratch, &mut grad)?;
    Ok((loss, grad))
}

/// Both loss terms and the gradient of their sum.
pub fn total_loss_gradient(
    net: &MlpParams,
    k: f64,
    points: &[(f64, f64)],
    targets: &[f64],
    collocation: &[(f64, f64)],
) -> Result<(LossBreakdown, Vec<f64>), AinnError> {
    let mut grad = vec![0.0; net.len()];
    let mut scratch = Scratch::new(net.hidden());
    let data = accumulate_data(net, points, targets, &mut scratch, &mut grad)?;
    let physics = accumulate_physics(net, k, collocation, &mut scratch, &mut grad)?;
    Ok((LossBreakdown { data, physics }, grad))
}

pub(crate) fn accumulate_data(
    net: &MlpParams,
    points: &[(f64, f64)],
    targets: &[f64],
    scratch: &mut Scratch,
    grad: &mut [f64],
) -> Result<f64, AinnError> {
    if points.len() != targets.len() || points.is_empty() {
        return Err(AinnError::LengthMismatch {
            expected: points.len(),
            got: targets.len(),
        });
    }
    let scale = 2.0 / points.len() as f64;
    let mut sum = 0.0;
    for (&(x, y), &t) in points.iter().zip(targets) {
        let mut err = 0.0;
        output_gradient(
            net,
            x,
            y,
            scratch,
            |out| {
                err = out - t;
                scale * err
            },
            grad,
        );
        sum += err * err;
    }
    Ok(sum / points.len() as f64)
}

pub(crate) fn accumulate_physics(
    net: &MlpParams,
    k: f64,
    points: &[(f64, f64)],
    scratch: &mut Scratch,
    grad: &mut [f64],
) -> Result<f64, AinnError> {
    let inv_k2 = check_k(k)?;
    if points.is_empty() {
        return Err(AinnError::NoCollocationPoints);
    }
    let scale = 2.0 / points.len() as f64;
    let mut sum = 0.0;
    for &(x, y) in points {
        let r = residual_gradient(net, x, y, inv_k2, scratch, |r| scale * r, grad);
        sum += r * r;
    }
    Ok(sum / points.len() as f64)
}
