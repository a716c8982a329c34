//! Measured transfer functions and impulse responses.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::acoustics::PressureSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferFunctionRow {
    pub frequency_hz: f64,
    pub mic_id: usize,
    pub source_angle_rad: f64,
    pub real: f64,
    pub imag: f64,
}

impl TransferFunctionRow {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.real, self.imag)
    }
}

/// Rows keyed uniquely by `(frequency, mic_id, source_angle)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransferFunctionTable {
    rows: Vec<TransferFunctionRow>,
}

impl TransferFunctionTable {
    pub fn new(rows: Vec<TransferFunctionRow>) -> Result<Self, IoError> {
        let mut seen = HashSet::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let finite = [r.frequency_hz, r.source_angle_rad, r.real, r.imag].iter().all(|v| v.is_finite());
            if !finite {
                return Err(IoError::Table(format!("row {i} has a non-finite value")));
            }
            if !seen.insert((r.frequency_hz.to_bits(), r.mic_id, r.source_angle_rad.to_bits())) {
                return Err(IoError::Table(format!(
                    "duplicate key (frequency {}, mic {}, angle {}) at row {i}",
                    r.frequency_hz, r.mic_id, r.source_angle_rad
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TransferFunctionRow] {
        &self.rows
    }

    /// Distinct source angles present at `frequency`, ascending.
    pub fn source_angles(&self, frequency: f64) -> Vec<f64> {
        let mut angles: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.frequency_hz == frequency)
            .map(|r| r.source_angle_rad)
            .collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        angles
    }

    /// Pressures of microphones `0..mic_count` for one source at one frequency.
    pub fn snapshot(&self, frequency: f64, source_angle: f64, mic_count: usize) -> Result<PressureSnapshot, IoError> {
        let mut values = vec![None; mic_count];
        for r in &self.rows {
            if r.frequency_hz == frequency && (r.source_angle_rad - source_angle).abs() <= 1e-9 && r.mic_id < mic_count {
                values[r.mic_id] = Some(r.value());
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(mic, v)| {
                v.ok_or_else(|| {
                    IoError::Table(format!(
                        "no entry for mic {mic} at {frequency} Hz, source angle {source_angle}"
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PressureSnapshot { frequency, values })
    }
}

pub fn read_transfer_functions(path: &Path) -> Result<TransferFunctionTable, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| IoError::csv(path, e))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<TransferFunctionRow>, _>>()
        .map_err(|e| IoError::csv(path, e))?;
    TransferFunctionTable::new(rows)
}

pub fn write_transfer_functions(table: &TransferFunctionTable, path: &Path) -> Result<(), IoError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| IoError::csv(path, e))?;
    for row in &table.rows {
        writer.serialize(row).map_err(|e| IoError::csv(path, e))?;
    }
    writer.flush().map_err(|e| IoError::file(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseResponse {
    pub mic_id: usize,
    pub source_angle_rad: f64,
    pub samples: Vec<f64>,
}

/// Impulse responses at a shared sample rate, stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseResponseSet {
    pub sample_rate: f64,
    pub responses: Vec<ImpulseResponse>,
}

impl ImpulseResponseSet {
    pub fn validate(&self) -> Result<(), IoError> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(IoError::Table(format!("sample_rate must be positive, got {}", self.sample_rate)));
        }
        for r in &self.responses {
            if r.samples.iter().any(|s| !s.is_finite()) {
                return Err(IoError::Table(format!("non-finite sample for mic {}", r.mic_id)));
            }
            let mismatch = self
                .responses
                .iter()
                .find(|o| o.source_angle_rad == r.source_angle_rad && o.samples.len() != r.samples.len());
            if let Some(o) = mismatch {
                return Err(IoError::Table(format!(
                    "responses for source angle {} differ in length ({} vs {})",
                    r.source_angle_rad,
                    r.samples.len(),
                    o.samples.len()
                )));
            }
        }
        Ok(())
    }
}

pub fn read_impulse_responses(path: &Path) -> Result<ImpulseResponseSet, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    let set: ImpulseResponseSet = serde_json::from_str(&text).map_err(|e| IoError::Json(e.to_string()))?;
    set.validate()?;
    Ok(set)
}

/// `Σ_t s[t] e^{−j2πft/fs}` at a single frequency.
pub fn dft_bin(samples: &[f64], frequency: f64, sample_rate: f64) -> Complex64 {
    let w = -TAU * frequency / sample_rate;
    samples
        .iter()
        .enumerate()
        .map(|(t, &s)| Complex64::from_polar(s, w * t as f64))
        .sum()
}

/// Evaluates every impulse response at exactly the requested frequencies.
/// Rows come out frequency-major, then in the order of `irs.responses`.
pub fn ir_to_transfer_function(
    irs: &ImpulseResponseSet,
    frequencies: &[f64],
) -> Result<TransferFunctionTable, IoError> {
    irs.validate()?;
    let nyquist = irs.sample_rate / 2.0;
    if let Some(f) = frequencies.iter().find(|f| !(**f >= 0.0 && **f < nyquist)) {
        return Err(IoError::AboveNyquist {
            frequency: *f,
            nyquist,
        });
    }
    let mut rows = Vec::with_capacity(frequencies.len() * irs.responses.len());
    for &f in frequencies {
        for r in &irs.responses {
            let h = dft_bin(&r.samples, f, irs.sample_rate);
            rows.push(TransferFunctionRow {
                frequency_hz: f,
                mic_id: r.mic_id,
                source_angle_rad: r.source_angle_rad,
                real: h.re,
                imag: h.im,
            });
        }
    }
    TransferFunctionTable::new(rows)
}
