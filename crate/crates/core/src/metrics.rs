//! Beampattern, directivity index and white noise gain.
//!
//! The array response is `y = Σ h*ₘ pₘ`. Pressures come either from the
//! plane-wave model or from a supplied snapshot (measured or predicted), so
//! mixed physical/virtual layouts are evaluated the same way.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{synthesize_at, wavenumber, AcousticsError, PlaneWaveField, PressureSnapshot};
use crate::beamformer::BeamformerWeights;
use crate::geometry::ArrayLayout;

/// Magnitude floor applied when exporting beampatterns, in dB.
pub const MAGNITUDE_FLOOR_DB: f64 = -80.0;

// |y|² floor keeping DI/WNG finite when the look response vanishes
const POWER_FLOOR: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error("weight vector has {weights} entries but {expected} pressures/microphones were supplied")]
    LengthMismatch { weights: usize, expected: usize },
    #[error("diffuse-noise output power hᴴΓh = {0:e} is not positive")]
    DegenerateWeights(f64),
    #[error("weight vector is zero")]
    ZeroWeights,
}

/// Complex responses on a frequency × angle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeampatternGrid {
    pub frequencies: Vec<f64>,
    pub angles: Vec<f64>,
    /// One row per frequency.
    pub values: Vec<Vec<Complex64>>,
}

impl BeampatternGrid {
    pub fn is_consistent(&self) -> bool {
        self.values.len() == self.frequencies.len() && self.values.iter().all(|row| row.len() == self.angles.len())
    }
}

/// A per-frequency metric in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
}

/// `Σ h*ₘ pₘ`.
pub fn response(h: &[Complex64], pressures: &[Complex64]) -> Result<Complex64, MetricsError> {
    if h.len() != pressures.len() {
        return Err(MetricsError::LengthMismatch {
            weights: h.len(),
            expected: pressures.len(),
        });
    }
    Ok(h.iter().zip(pressures).map(|(w, p)| w.conj() * p).sum())
}

/// Synthetic beampattern: plane waves of amplitude `amplitude` from each angle.
pub fn beampattern(
    weights: &BeamformerWeights,
    layout: &ArrayLayout,
    angles: &[f64],
    amplitude: Complex64,
) -> Result<Vec<Complex64>, MetricsError> {
    let positions = layout.positions();
    if weights.h.len() != positions.len() {
        return Err(MetricsError::LengthMismatch {
            weights: weights.h.len(),
            expected: positions.len(),
        });
    }
    angles
        .iter()
        .map(|&theta| {
            let field = PlaneWaveField::new(weights.frequency, amplitude, theta, layout.speed_of_sound())?;
            response(&weights.h, &synthesize_at(&field, &positions).values)
        })
        .collect()
}

/// Beampattern from one pressure snapshot per source angle.
pub fn beampattern_from_snapshots(
    weights: &BeamformerWeights,
    snapshots: &[PressureSnapshot],
) -> Result<Vec<Complex64>, MetricsError> {
    snapshots.iter().map(|s| response(&weights.h, &s.values)).collect()
}

/// Look-direction response to a plane wave of the given amplitude.
pub fn look_response(
    weights: &BeamformerWeights,
    layout: &ArrayLayout,
    amplitude: Complex64,
) -> Result<Complex64, MetricsError> {
    Ok(beampattern(weights, layout, &[weights.look_direction], amplitude)?[0])
}

/// Unnormalised `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `Γᵢⱼ = sinc(k δᵢⱼ)`.
pub fn diffuse_coherence_matrix(layout: &ArrayLayout, frequency: f64) -> Result<Vec<Vec<f64>>, MetricsError> {
    let k = wavenumber(frequency, layout.speed_of_sound())?;
    Ok(layout
        .pairwise_distances()
        .into_iter()
        .map(|row| row.into_iter().map(|d| sinc(k * d)).collect())
        .collect())
}

fn quadratic_form(gamma: &[Vec<f64>], h: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, hi) in h.iter().enumerate() {
        let row: Complex64 = gamma[i].iter().zip(h).map(|(g, hj)| *g * hj).sum();
        acc += hi.conj() * row;
    }
    acc.re
}

/// `10 log₁₀(|y|² / hᴴΓh)` for a given look-direction response.
pub fn directivity_index_for_response(
    weights: &BeamformerWeights,
    layout: &ArrayLayout,
    look: Complex64,
) -> Result<f64, MetricsError> {
    let gamma = diffuse_coherence_matrix(layout, weights.frequency)?;
    if weights.h.len() != gamma.len() {
        return Err(MetricsError::LengthMismatch {
            weights: weights.h.len(),
            expected: gamma.len(),
        });
    }
    let noise = quadratic_form(&gamma, &weights.h);
    if !(noise > 0.0) {
        return Err(MetricsError::DegenerateWeights(noise));
    }
    Ok(10.0 * (look.norm_sqr().max(POWER_FLOOR) / noise).log10())
}

/// Directivity index with the look response taken from a unit plane wave.
pub fn directivity_index(weights: &BeamformerWeights, layout: &ArrayLayout) -> Result<f64, MetricsError> {
    let look = look_response(weights, layout, Complex64::new(1.0, 0.0))?;
    directivity_index_for_response(weights, layout, look)
}

/// `10 log₁₀(|y|² / hᴴh)` for a given look-direction response.
pub fn white_noise_gain_for_response(weights: &BeamformerWeights, look: Complex64) -> Result<f64, MetricsError> {
    let energy = weights.norm_sqr();
    if !(energy > 0.0) {
        return Err(MetricsError::ZeroWeights);
    }
    Ok(10.0 * (look.norm_sqr().max(POWER_FLOOR) / energy).log10())
}

/// White noise gain with the look response taken from a unit plane wave.
pub fn white_noise_gain(weights: &BeamformerWeights, layout: &ArrayLayout) -> Result<f64, MetricsError> {
    if weights.norm_sqr() == 0.0 {
        return Err(MetricsError::ZeroWeights);
    }
    let look = look_response(weights, layout, Complex64::new(1.0, 0.0))?;
    white_noise_gain_for_response(weights, look)
}

/// Main-to-side-lobe ratio of a sampled pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobeRatio {
    pub ratio_db: f64,
    /// Set when the pattern has no distinguishable lobes; `ratio_db` is then 0.
    pub degenerate: bool,
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// `20 log₁₀(|y(θ_s)| / max side-lobe |y|)`.
///
/// `angles` is treated as a closed circular grid. The main lobe extends from
/// the sample nearest `look` outwards to the first local minimum on each side.
pub fn main_to_side_lobe(pattern: &[Complex64], angles: &[f64], look: f64) -> LobeRatio {
    let degenerate = LobeRatio {
        ratio_db: 0.0,
        degenerate: true,
    };
    let n = pattern.len();
    if n < 3 || angles.len() != n {
        return degenerate;
    }
    let mags: Vec<f64> = pattern.iter().map(|z| z.norm()).collect();
    let max = mags.iter().copied().fold(0.0, f64::max);
    let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 || max - min <= 1e-12 * max {
        return degenerate;
    }
    let centre = (0..n)
        .min_by(|&a, &b| angular_distance(angles[a], look).total_cmp(&angular_distance(angles[b], look)))
        .unwrap_or(0);

    let mut right = 0;
    while right + 1 < n && mags[(centre + right + 1) % n] <= mags[(centre + right) % n] {
        right += 1;
    }
    let mut left = 0;
    while left + 1 < n && mags[(centre + n - left - 1) % n] <= mags[(centre + n - left) % n] {
        left += 1;
    }
    if left + right + 1 >= n {
        return degenerate;
    }
    // side lobes start at the minima bounding the main lobe
    let side = (right..n - left)
        .map(|offset| mags[(centre + offset) % n])
        .fold(0.0, f64::max);
    if side == 0.0 {
        return degenerate;
    }
    LobeRatio {
        ratio_db: 20.0 * (mags[centre].max(f64::MIN_POSITIVE) / side).log10(),
        degenerate: false,
    }
}

/// `20 log₁₀|y|`, floored at [`MAGNITUDE_FLOOR_DB`].
pub fn magnitude_db(value: Complex64) -> f64 {
    let norm = value.norm();
    if norm == 0.0 {
        MAGNITUDE_FLOOR_DB
    } else {
        (20.0 * norm.log10()).max(MAGNITUDE_FLOOR_DB)
    }
}

/// Uniform angle grid `[0, 2π)` with `step_deg` spacing.
pub fn angle_grid(step_deg: f64) -> Vec<f64> {
    let count = (360.0 / step_deg).round().max(1.0) as usize;
    (0..count).map(|i| (i as f64 * step_deg).to_radians()).collect()
}
