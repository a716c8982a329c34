//! Ring layouts, microphone coordinates and the spatial-aliasing cutoff.
//!
//! Angles are measured anti-clockwise from the positive x-axis and kept in
//! `[0, 2π)`. Microphones are always enumerated ring-major, mic-index
//! ascending; every weight vector and pressure snapshot in the crate uses
//! that order.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default speed of sound in m/s.
pub const SPEED_OF_SOUND: f64 = 340.0;

/// Two microphones closer than this (in meters) are considered coincident.
pub const POSITION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ring radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("ring must hold at least one microphone")]
    EmptyRing,
    #[error("first angle must be finite, got {0}")]
    InvalidAngle(f64),
    #[error("speed of sound must be positive and finite, got {0}")]
    InvalidSpeedOfSound(f64),
    #[error("layout has no rings")]
    NoRings,
    #[error("microphones {a:?} and {b:?} (ring, index) share a position")]
    DuplicatePosition { a: (usize, usize), b: (usize, usize) },
    #[error("aliasing cutoff needs at least two microphones on the ring, got {0}")]
    UndefinedCutoff(usize),
}

/// Whether a microphone records pressure or has it predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MicKind {
    Physical,
    Virtual,
}

/// Reduces an angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// A uniform ring of microphones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    radius: f64,
    count: usize,
    first_angle: f64,
    kind: MicKind,
}

impl RingSpec {
    pub fn new(radius: f64, count: usize, first_angle: f64, kind: MicKind) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidRadius(radius));
        }
        if count == 0 {
            return Err(GeometryError::EmptyRing);
        }
        if !first_angle.is_finite() {
            return Err(GeometryError::InvalidAngle(first_angle));
        }
        Ok(Self {
            radius,
            count,
            first_angle: normalize_angle(first_angle),
            kind,
        })
    }

    /// A physical ring starting at angle zero.
    pub fn physical(radius: f64, count: usize) -> Result<Self, GeometryError> {
        Self::new(radius, count, 0.0, MicKind::Physical)
    }

    /// A virtual ring starting at angle zero.
    pub fn virtual_ring(radius: f64, count: usize) -> Result<Self, GeometryError> {
        Self::new(radius, count, 0.0, MicKind::Virtual)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn first_angle(&self) -> f64 {
        self.first_angle
    }

    pub fn kind(&self) -> MicKind {
        self.kind
    }

    /// Uniformly spaced angles `φ₁ + m·2π/M`, each reduced into `[0, 2π)`.
    pub fn mic_angles(&self) -> Vec<f64> {
        let step = TAU / self.count as f64;
        (0..self.count)
            .map(|m| normalize_angle(self.first_angle + m as f64 * step))
            .collect()
    }

    /// Frequency above which adjacent microphones are more than half a
    /// wavelength apart: `c / (4 R |sin(π/M)|)`.
    pub fn aliasing_cutoff(&self, speed_of_sound: f64) -> Result<f64, GeometryError> {
        if self.count < 2 {
            return Err(GeometryError::UndefinedCutoff(self.count));
        }
        Ok(speed_of_sound / (4.0 * self.radius * (PI / self.count as f64).sin().abs()))
    }
}

/// See [`RingSpec::aliasing_cutoff`].
pub fn aliasing_cutoff(ring: &RingSpec, speed_of_sound: f64) -> Result<f64, GeometryError> {
    ring.aliasing_cutoff(speed_of_sound)
}

/// One microphone of a layout, flattened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicPosition {
    pub ring_index: usize,
    pub mic_index: usize,
    pub radius: f64,
    pub angle: f64,
    pub x: f64,
    pub y: f64,
    pub kind: MicKind,
}

impl MicPosition {
    pub fn distance(&self, other: &MicPosition) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// An ordered set of concentric rings sharing one centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    rings: Vec<RingSpec>,
    speed_of_sound: f64,
}

impl ArrayLayout {
    pub fn new(rings: Vec<RingSpec>, speed_of_sound: f64) -> Result<Self, GeometryError> {
        if rings.is_empty() {
            return Err(GeometryError::NoRings);
        }
        if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
            return Err(GeometryError::InvalidSpeedOfSound(speed_of_sound));
        }
        let layout = Self { rings, speed_of_sound };
        let positions = layout.positions();
        for (i, a) in positions.iter().enumerate() {
            for b in &positions[i + 1..] {
                if a.distance(b) < POSITION_TOLERANCE {
                    return Err(GeometryError::DuplicatePosition {
                        a: (a.ring_index, a.mic_index),
                        b: (b.ring_index, b.mic_index),
                    });
                }
            }
        }
        Ok(layout)
    }

    /// Layout with the default speed of sound.
    pub fn with_rings(rings: Vec<RingSpec>) -> Result<Self, GeometryError> {
        Self::new(rings, SPEED_OF_SOUND)
    }

    pub fn rings(&self) -> &[RingSpec] {
        &self.rings
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    /// Total microphone count `M`.
    pub fn len(&self) -> usize {
        self.rings.iter().map(RingSpec::count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All microphones, ring-major then mic-index ascending.
    pub fn positions(&self) -> Vec<MicPosition> {
        let mut out = Vec::with_capacity(self.len());
        for (ring_index, ring) in self.rings.iter().enumerate() {
            for (mic_index, angle) in ring.mic_angles().into_iter().enumerate() {
                out.push(MicPosition {
                    ring_index,
                    mic_index,
                    radius: ring.radius,
                    angle,
                    x: ring.radius * angle.cos(),
                    y: ring.radius * angle.sin(),
                    kind: ring.kind,
                });
            }
        }
        out
    }

    pub fn positions_of_kind(&self, kind: MicKind) -> Vec<MicPosition> {
        self.positions().into_iter().filter(|p| p.kind == kind).collect()
    }

    /// Sub-layout made of the rings of one kind, or `None` if there are none.
    pub fn subset(&self, kind: MicKind) -> Option<ArrayLayout> {
        let rings: Vec<_> = self.rings.iter().copied().filter(|r| r.kind == kind).collect();
        if rings.is_empty() {
            None
        } else {
            Some(Self {
                rings,
                speed_of_sound: self.speed_of_sound,
            })
        }
    }

    pub fn has_virtual(&self) -> bool {
        self.rings.iter().any(|r| r.kind == MicKind::Virtual)
    }

    /// Symmetric `M × M` matrix of in-plane distances, row-major.
    pub fn pairwise_distances(&self) -> Vec<Vec<f64>> {
        let positions = self.positions();
        let m = positions.len();
        let mut out = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let d = positions[i].distance(&positions[j]);
                out[i][j] = d;
                out[j][i] = d;
            }
        }
        out
    }
}

/// See [`ArrayLayout::pairwise_distances`].
pub fn pairwise_distances(layout: &ArrayLayout) -> Vec<Vec<f64>> {
    layout.pairwise_distances()
}
