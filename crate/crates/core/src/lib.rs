//! Circular-harmonic beamforming for circular and concentric circular
//! microphone arrays, with virtual microphones whose pressures are predicted
//! by a small acoustics-informed neural network.

pub mod acoustics;
pub mod ainn;
pub mod beamformer;
pub mod compare;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod runner;
pub mod scenario;
