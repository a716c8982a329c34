//! Plane-wave sound fields, circular-harmonic coefficients and Bessel-zero
//! null frequencies.

mod bessel;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bessel::{bessel_j, bessel_j_signed, MAX_ARGUMENT, MAX_ORDER};

use crate::geometry::{normalize_angle, ArrayLayout, MicPosition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcousticsError {
    #[error("frequency and speed of sound must be positive, got f={frequency}, c={speed_of_sound}")]
    NonPositive { frequency: f64, speed_of_sound: f64 },
    #[error("Bessel J_{order}({argument}) is outside the supported envelope")]
    BesselDomain { order: i64, argument: f64 },
    #[error("field amplitude must be finite")]
    NonFiniteAmplitude,
    #[error("incidence angle must be finite, got {0}")]
    InvalidAngle(f64),
}

/// `k = 2πf/c`.
pub fn wavenumber(frequency: f64, speed_of_sound: f64) -> Result<f64, AcousticsError> {
    if !(frequency > 0.0 && speed_of_sound > 0.0 && frequency.is_finite() && speed_of_sound.is_finite()) {
        return Err(AcousticsError::NonPositive { frequency, speed_of_sound });
    }
    Ok(TAU * frequency / speed_of_sound)
}

/// `jⁿ` for integer `n`.
pub fn j_power(n: i32) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Jacobi-Anger coefficient `γₙ = jⁿ Jₙ(kr)`.
pub fn harmonic_coefficient(n: i32, k: f64, r: f64) -> Result<Complex64, AcousticsError> {
    Ok(j_power(n) * bessel_j_signed(n, k * r)?)
}

/// A single-frequency plane wave arriving from `incidence_angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveField {
    frequency: f64,
    amplitude: Complex64,
    incidence_angle: f64,
    speed_of_sound: f64,
}

impl PlaneWaveField {
    pub fn new(
        frequency: f64,
        amplitude: Complex64,
        incidence_angle: f64,
        speed_of_sound: f64,
    ) -> Result<Self, AcousticsError> {
        wavenumber(frequency, speed_of_sound)?;
        if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
            return Err(AcousticsError::NonFiniteAmplitude);
        }
        if !incidence_angle.is_finite() {
            return Err(AcousticsError::InvalidAngle(incidence_angle));
        }
        Ok(Self {
            frequency,
            amplitude,
            incidence_angle: normalize_angle(incidence_angle),
            speed_of_sound,
        })
    }

    /// Unit-amplitude wave.
    pub fn unit(frequency: f64, incidence_angle: f64, speed_of_sound: f64) -> Result<Self, AcousticsError> {
        Self::new(frequency, Complex64::new(1.0, 0.0), incidence_angle, speed_of_sound)
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn incidence_angle(&self) -> f64 {
        self.incidence_angle
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    pub fn wavenumber(&self) -> f64 {
        TAU * self.frequency / self.speed_of_sound
    }

    /// Pressure at a Cartesian point.
    pub fn pressure_at(&self, x: f64, y: f64) -> Complex64 {
        let k = self.wavenumber();
        let (s, c) = self.incidence_angle.sin_cos();
        // k r cos(θ − φ) = k (x cos θ + y sin θ)
        self.amplitude * Complex64::from_polar(1.0, k * (x * c + y * s))
    }
}

/// `A·exp(j k r cos(θ − φ))` at one microphone.
pub fn plane_wave_pressure(field: &PlaneWaveField, pos: &MicPosition) -> Complex64 {
    let phase = field.wavenumber() * pos.radius * (field.incidence_angle - pos.angle).cos();
    field.amplitude * Complex64::from_polar(1.0, phase)
}

/// Complex pressures at one frequency, aligned with a position list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureSnapshot {
    pub frequency: f64,
    pub values: Vec<Complex64>,
}

impl PressureSnapshot {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn synthesize_at(field: &PlaneWaveField, positions: &[MicPosition]) -> PressureSnapshot {
    PressureSnapshot {
        frequency: field.frequency,
        values: positions.iter().map(|p| plane_wave_pressure(field, p)).collect(),
    }
}

/// Plane-wave pressures at every microphone of `layout`.
pub fn synthesize_snapshot(field: &PlaneWaveField, layout: &ArrayLayout) -> PressureSnapshot {
    synthesize_at(field, &layout.positions())
}

/// A frequency at which `J_order(k r)` vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullFrequency {
    pub order: u32,
    /// Zero of the Bessel function, in units of `kr`.
    pub zero: f64,
    pub frequency: f64,
}

const SCAN_STEP: f64 = 0.02;
const ZERO_TOLERANCE: f64 = 1e-12;

/// All Bessel-zero frequencies `z c / (2π r) ≤ f_max` for orders `0..=n_max`,
/// ascending by frequency.
pub fn bessel_null_frequencies(
    r: f64,
    speed_of_sound: f64,
    f_max: f64,
    n_max: u32,
) -> Result<Vec<NullFrequency>, AcousticsError> {
    let z_max = wavenumber(f_max, speed_of_sound)? * r;
    if !(r > 0.0) || z_max > MAX_ARGUMENT || n_max > MAX_ORDER {
        return Err(AcousticsError::BesselDomain { order: n_max as i64, argument: z_max });
    }
    let to_frequency = |z: f64| z * speed_of_sound / (TAU * r);
    let mut out = Vec::new();
    for n in 0..=n_max {
        // the first positive zero of J_n exceeds n, and J_n > 0 on (0, n]
        let mut lo = (n as f64).max(SCAN_STEP).min(z_max);
        let mut f_lo = bessel_j(n, lo)?;
        while lo < z_max {
            let hi = (lo + SCAN_STEP).min(z_max);
            let f_hi = bessel_j(n, hi)?;
            if f_lo == 0.0 {
                out.push(NullFrequency { order: n, zero: lo, frequency: to_frequency(lo) });
            } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
                let z = bisect(n, lo, hi, f_lo)?;
                out.push(NullFrequency { order: n, zero: z, frequency: to_frequency(z) });
            }
            lo = hi;
            f_lo = f_hi;
        }
    }
    out.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    Ok(out)
}

fn bisect(n: u32, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64, AcousticsError> {
    while hi - lo > ZERO_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f_mid = bessel_j(n, mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
