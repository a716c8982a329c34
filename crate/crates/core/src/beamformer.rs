//! Circular-harmonic beamformer design.
//!
//! For harmonic orders `n = −N..=N` the weights must satisfy
//! `Σ_q Jₙ(k r_q) Σ_m h_{q,m} e^{jnφ_{q,m}} = jⁿ e^{jnθ_s}`, i.e. `Ψ h = β`.
//! The system is solved in minimum-norm form `h = Ψᴴ(ΨΨᴴ + δI)⁻¹β`, or
//! directly when `Ψ` is square.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{bessel_j_signed, j_power, wavenumber, AcousticsError};
use crate::geometry::{ArrayLayout, POSITION_TOLERANCE};
use crate::linalg::{norm2, solve, CMatrix};

/// Diagonal loading applied to `ΨΨᴴ` unless overridden.
pub const DEFAULT_REGULARIZATION: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformerError {
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error("ring {ring} with {count} microphones cannot support a non-negative truncation order")]
    Order { ring: usize, count: usize },
    #[error("{mics} microphones cannot satisfy {constraints} harmonic constraints without aliasing")]
    AliasingCondition { mics: usize, constraints: usize },
    #[error("harmonic system is singular (pivot {pivot:e} below {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("regularization must be finite and non-negative, got {0}")]
    InvalidRegularization(f64),
    #[error("truncation order lists {got} rings, layout has {expected}")]
    OrderMismatch { expected: usize, got: usize },
}

/// Per-ring and overall circular-harmonic truncation orders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationOrder {
    pub per_ring: Vec<usize>,
    pub overall: usize,
}

impl TruncationOrder {
    /// The same order on every ring of `layout`.
    pub fn uniform(layout: &ArrayLayout, order: usize) -> Self {
        Self {
            per_ring: vec![order; layout.rings().len()],
            overall: order,
        }
    }

    pub fn constraint_count(&self) -> usize {
        2 * self.overall + 1
    }
}

/// `N_q = min(⌈k r_q⌉, ⌊M_q/2⌋ − 1)`, `N = max_q N_q`.
pub fn truncation_order(layout: &ArrayLayout, frequency: f64) -> Result<TruncationOrder, BeamformerError> {
    let k = wavenumber(frequency, layout.speed_of_sound())?;
    let mut per_ring = Vec::with_capacity(layout.rings().len());
    for (index, ring) in layout.rings().iter().enumerate() {
        // rings sharing a radius sample one circle together
        let count: usize = layout
            .rings()
            .iter()
            .filter(|other| (other.radius() - ring.radius()).abs() <= POSITION_TOLERANCE)
            .map(|other| other.count())
            .sum();
        let alias_limit = (count / 2) as i64 - 1;
        if alias_limit < 0 {
            return Err(BeamformerError::Order { ring: index, count });
        }
        let bessel_limit = (k * ring.radius()).ceil() as i64;
        per_ring.push(bessel_limit.min(alias_limit) as usize);
    }
    let overall = per_ring.iter().copied().max().unwrap_or(0);
    Ok(TruncationOrder { per_ring, overall })
}

/// The constraint system `Ψ h = β` at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSystem {
    /// `(2N+1) × M`; row `i` holds harmonic `n = i − N`.
    pub psi: CMatrix,
    pub beta: Vec<Complex64>,
    pub order: usize,
    pub frequency: f64,
    pub look_direction: f64,
}

impl HarmonicSystem {
    pub fn harmonics(&self) -> impl Iterator<Item = i32> {
        let n = self.order as i32;
        -n..=n
    }

    pub fn residual(&self, h: &[Complex64]) -> Vec<Complex64> {
        self.psi
            .mul_vec(h)
            .into_iter()
            .zip(&self.beta)
            .map(|(a, b)| a - b)
            .collect()
    }
}

pub fn build_system(
    layout: &ArrayLayout,
    frequency: f64,
    look_direction: f64,
    order: &TruncationOrder,
) -> Result<HarmonicSystem, BeamformerError> {
    if order.per_ring.len() != layout.rings().len() {
        return Err(BeamformerError::OrderMismatch {
            expected: layout.rings().len(),
            got: order.per_ring.len(),
        });
    }
    let k = wavenumber(frequency, layout.speed_of_sound())?;
    let positions = layout.positions();
    let big_n = order.overall as i32;
    let rows = order.constraint_count();

    // Bessel values per (harmonic, ring)
    let mut bessel = vec![vec![0.0; layout.rings().len()]; rows];
    for (i, n) in (-big_n..=big_n).enumerate() {
        for (q, ring) in layout.rings().iter().enumerate() {
            bessel[i][q] = bessel_j_signed(n, k * ring.radius())?;
        }
    }
    let psi = CMatrix::from_fn(rows, positions.len(), |i, m| {
        let n = i as i32 - big_n;
        let p = &positions[m];
        bessel[i][p.ring_index] * Complex64::from_polar(1.0, n as f64 * p.angle)
    });
    let beta = (-big_n..=big_n)
        .map(|n| j_power(n) * Complex64::from_polar(1.0, n as f64 * look_direction))
        .collect();
    Ok(HarmonicSystem {
        psi,
        beta,
        order: order.overall,
        frequency,
        look_direction,
    })
}

/// Complex weight vector, ring-major like [`ArrayLayout::positions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerWeights {
    pub h: Vec<Complex64>,
    pub look_direction: f64,
    pub order: usize,
    pub frequency: f64,
    /// `‖Ψh − β‖₂`.
    pub residual: f64,
    pub regularization: f64,
}

impl BeamformerWeights {
    pub fn norm_sqr(&self) -> f64 {
        self.h.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn from_singular(s: crate::linalg::Singular) -> BeamformerError {
    BeamformerError::Singular {
        pivot: s.pivot,
        threshold: s.threshold,
    }
}

/// `Ψᴴ(ΨΨᴴ + δI)⁻¹β`.
pub(crate) fn solve_minimum_norm(sys: &HarmonicSystem, delta: f64) -> Result<Vec<Complex64>, BeamformerError> {
    let mut gram = sys.psi.gram();
    for i in 0..gram.rows() {
        gram[(i, i)] += delta;
    }
    let x = solve(&gram, &sys.beta).map_err(from_singular)?;
    Ok(sys.psi.conj_transpose_mul_vec(&x))
}

/// `Ψ⁻¹β` for square `Ψ`.
pub(crate) fn solve_square(sys: &HarmonicSystem) -> Result<Vec<Complex64>, BeamformerError> {
    solve(&sys.psi, &sys.beta).map_err(from_singular)
}

pub fn solve_weights(sys: &HarmonicSystem, delta: f64) -> Result<BeamformerWeights, BeamformerError> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(BeamformerError::InvalidRegularization(delta));
    }
    let mics = sys.psi.cols();
    let constraints = sys.psi.rows();
    let h = match mics.cmp(&constraints) {
        std::cmp::Ordering::Less => {
            return Err(BeamformerError::AliasingCondition { mics, constraints });
        }
        std::cmp::Ordering::Equal => solve_square(sys)?,
        std::cmp::Ordering::Greater => solve_minimum_norm(sys, delta)?,
    };
    let residual = norm2(&sys.residual(&h));
    Ok(BeamformerWeights {
        h,
        look_direction: sys.look_direction,
        order: sys.order,
        frequency: sys.frequency,
        residual,
        regularization: delta,
    })
}

/// Truncation order, constraint system and solve in one call.
pub fn design(
    layout: &ArrayLayout,
    frequency: f64,
    look_direction: f64,
    delta: f64,
) -> Result<BeamformerWeights, BeamformerError> {
    let order = truncation_order(layout, frequency)?;
    let sys = build_system(layout, frequency, look_direction, &order)?;
    solve_weights(&sys, delta)
}
