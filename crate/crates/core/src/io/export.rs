//! CSV export of metric curves and beampatterns, plus the JSON run sidecar.
//!
//! Floats are written with 9 significant digits, columns in fixed order,
//! LF line endings, so identical inputs give identical bytes.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::metrics::{magnitude_db, BeampatternGrid, MetricCurve};

/// Shortest of fixed or scientific notation carrying 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(IoError::NonFinite(format!("{} in {}", v, path.display())));
        }
        let cells: Vec<String> = row.into_iter().map(format_sig9).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| IoError::file(path, e))
}

/// One line of a metrics CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub frequency_hz: f64,
    pub di_db: f64,
    pub wng_db: f64,
}

/// Writes `frequency_hz,di_db,wng_db`. Both curves must share a frequency axis.
pub fn save_metrics(di: &MetricCurve, wng: &MetricCurve, path: &Path) -> Result<(), IoError> {
    if di.frequencies != wng.frequencies || di.values.len() != di.frequencies.len() || wng.values.len() != wng.frequencies.len() {
        return Err(IoError::Table("DI and WNG curves do not share a frequency axis".into()));
    }
    let rows = (0..di.frequencies.len()).map(|i| vec![di.frequencies[i], di.values[i], wng.values[i]]);
    write_rows(path, "frequency_hz,di_db,wng_db", rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| IoError::csv(path, e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<MetricRow>, _>>()
        .map_err(|e| IoError::csv(path, e))
}

/// One line of a beampattern CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeampatternRow {
    pub frequency_hz: f64,
    pub angle_deg: f64,
    pub magnitude_db: f64,
    pub phase_rad: f64,
}

/// Writes `frequency_hz,angle_deg,magnitude_db,phase_rad`, frequency-major;
/// magnitudes are clamped at the export floor.
pub fn save_beampattern(grid: &BeampatternGrid, path: &Path) -> Result<(), IoError> {
    if !grid.is_consistent() {
        return Err(IoError::Table("beampattern grid shape mismatch".into()));
    }
    let rows = grid.frequencies.iter().zip(&grid.values).flat_map(|(&f, row)| {
        grid.angles.iter().zip(row).map(move |(&a, &v): (&f64, &Complex64)| {
            // exact zero has no meaningful phase
            let phase = if v == Complex64::new(0.0, 0.0) { 0.0 } else { v.arg() };
            vec![f, a.to_degrees(), magnitude_db(v), phase]
        })
    });
    write_rows(path, "frequency_hz,angle_deg,magnitude_db,phase_rad", rows)
}

pub fn read_beampattern(path: &Path) -> Result<Vec<BeampatternRow>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| IoError::csv(path, e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<BeampatternRow>, _>>()
        .map_err(|e| IoError::csv(path, e))
}

/// Per-frequency training summary recorded in the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub frequency_hz: f64,
    pub source_angle_rad: f64,
    pub real_epochs: usize,
    pub imag_epochs: usize,
    pub real_data_loss: f64,
    pub imag_data_loss: f64,
    pub real_physics_loss: f64,
    pub imag_physics_loss: f64,
}

/// JSON sidecar written next to the CSVs of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub config_digest: String,
    pub delta: f64,
    pub seeds: Seeds,
    pub frequencies: usize,
    pub files: Vec<String>,
    #[serde(default)]
    pub training: Vec<TrainingSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub ainn: u64,
}

impl RunManifest {
    pub fn new(scenario: &str, config_digest: String, delta: f64, ainn_seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.to_string(),
            config_digest,
            delta,
            seeds: Seeds { ainn: ainn_seed },
            frequencies: 0,
            files: Vec::new(),
            training: Vec::new(),
        }
    }
}

pub fn save_manifest(manifest: &RunManifest, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| IoError::Json(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::file(path, e))
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Json(e.to_string()))
}
