//! Named array configurations.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{ArrayLayout, GeometryError, MicKind, RingSpec};

pub const OUTER_RADIUS: f64 = 0.12;
pub const INNER_RADIUS: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "cma30")]
    Cma30,
    #[serde(rename = "ccma30")]
    Ccma30,
    #[serde(rename = "cmavm30")]
    Cmavm30,
    #[serde(rename = "cma10")]
    Cma10,
    #[serde(rename = "ccma10")]
    Ccma10,
    #[serde(rename = "cmavm10")]
    Cmavm10,
    #[serde(rename = "cmavm-i")]
    CmavmI,
    #[serde(rename = "cmavm-ii")]
    CmavmII,
    #[serde(rename = "cmavm-iii")]
    CmavmIII,
    #[serde(rename = "custom")]
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Scenario::Cma30,
        Scenario::Ccma30,
        Scenario::Cmavm30,
        Scenario::Cma10,
        Scenario::Ccma10,
        Scenario::Cmavm10,
        Scenario::CmavmI,
        Scenario::CmavmII,
        Scenario::CmavmIII,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Cma30 => "cma30",
            Scenario::Ccma30 => "ccma30",
            Scenario::Cmavm30 => "cmavm30",
            Scenario::Cma10 => "cma10",
            Scenario::Ccma10 => "ccma10",
            Scenario::Cmavm10 => "cmavm10",
            Scenario::CmavmI => "cmavm-i",
            Scenario::CmavmII => "cmavm-ii",
            Scenario::CmavmIII => "cmavm-iii",
            Scenario::Custom => "custom",
        }
    }

    /// Rings of a named scenario; `None` for `custom`.
    pub fn rings(self) -> Option<Vec<RingSpec>> {
        let ring = |r: f64, m: usize, kind: MicKind| RingSpec::new(r, m, 0.0, kind).expect("valid ring");
        use MicKind::{Physical as P, Virtual as V};
        let rings = match self {
            Scenario::Cma30 => vec![ring(OUTER_RADIUS, 30, P)],
            Scenario::Ccma30 => vec![ring(OUTER_RADIUS, 30, P), ring(INNER_RADIUS, 30, P)],
            Scenario::Cmavm30 => vec![ring(OUTER_RADIUS, 30, P), ring(INNER_RADIUS, 30, V)],
            Scenario::Cma10 => vec![ring(OUTER_RADIUS, 10, P)],
            Scenario::Ccma10 => vec![ring(OUTER_RADIUS, 10, P), ring(INNER_RADIUS, 10, P)],
            Scenario::Cmavm10 => vec![ring(OUTER_RADIUS, 10, P), ring(INNER_RADIUS, 10, V)],
            Scenario::CmavmI => vec![ring(OUTER_RADIUS, 10, P), ring(INNER_RADIUS, 30, V)],
            Scenario::CmavmII => {
                let mut rings = vec![ring(OUTER_RADIUS, 10, P)];
                rings.extend(interleaved_virtual(OUTER_RADIUS, 10, 3));
                rings.push(ring(INNER_RADIUS, 10, V));
                rings
            }
            Scenario::CmavmIII => {
                let mut rings = vec![ring(OUTER_RADIUS, 10, P)];
                rings.extend(interleaved_virtual(OUTER_RADIUS, 10, 3));
                rings.push(ring(INNER_RADIUS, 30, V));
                rings
            }
            Scenario::Custom => return None,
        };
        Some(rings)
    }

    pub fn layout(self, speed_of_sound: f64) -> Option<Result<ArrayLayout, GeometryError>> {
        self.rings().map(|rings| ArrayLayout::new(rings, speed_of_sound))
    }
}

/// Virtual rings filling the slots of a uniform `physical·factor` grid that a
/// uniform ring of `physical` microphones (first angle 0) leaves empty.
pub fn interleaved_virtual(radius: f64, physical: usize, factor: usize) -> Vec<RingSpec> {
    let slot = TAU / (physical * factor) as f64;
    (1..factor)
        .map(|offset| RingSpec::new(radius, physical, offset as f64 * slot, MicKind::Virtual).expect("valid ring"))
        .collect()
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scenario `{0}`")]
pub struct UnknownScenario(pub String);

impl FromStr for Scenario {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| UnknownScenario(s.to_string()))
    }
}
