//! Synthesis configuration and the two presets `v08` and `v40`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::order::OrderChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Granularity {
    /// One symbolic edge per linearized edge.
    PerEdge,
    /// Edges of the same event merged into one.
    PerEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeApplication {
    /// Fused relational products over partial relations.
    Compound,
    /// Conjoin, quantify every variable, rename; full frame conditions.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PlantInvariantMode {
    /// Strengthen a guard only when the backward image is not already implied.
    ImplicationCheck,
    /// Always strengthen with the backward image restricted to the invariant.
    Restrict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisConfig {
    pub order: OrderChoice,
    pub granularity: Granularity,
    pub edge_application: EdgeApplication,
    pub early_stop: bool,
    pub forward: bool,
    /// Skip a fixed-point stage whose input equals its previous output.
    pub stage_skipping: bool,
    pub plant_invariants: PlantInvariantMode,
    pub stop_on_empty_init: bool,
    pub simplify: bool,
}

impl SynthesisConfig {
    pub fn v08() -> Self {
        SynthesisConfig {
            order: OrderChoice::PipelineV08,
            granularity: Granularity::PerEdge,
            edge_application: EdgeApplication::Naive,
            early_stop: false,
            forward: false,
            stage_skipping: false,
            plant_invariants: PlantInvariantMode::Restrict,
            stop_on_empty_init: true,
            simplify: true,
        }
    }

    pub fn v40() -> Self {
        SynthesisConfig {
            order: OrderChoice::PipelineV40,
            granularity: Granularity::PerEvent,
            edge_application: EdgeApplication::Compound,
            early_stop: true,
            forward: false,
            stage_skipping: true,
            plant_invariants: PlantInvariantMode::ImplicationCheck,
            stop_on_empty_init: true,
            simplify: true,
        }
    }

    /// Short stable description of every setting.
    pub fn fingerprint(&self) -> String {
        format!(
            "order={};granularity={};application={};early-stop={};forward={};stage-skip={};plant-inv={};stop-empty={};simplify={}",
            self.order,
            match self.granularity {
                Granularity::PerEdge => "edge",
                Granularity::PerEvent => "event",
            },
            match self.edge_application {
                EdgeApplication::Compound => "compound",
                EdgeApplication::Naive => "naive",
            },
            on_off(self.early_stop),
            on_off(self.forward),
            on_off(self.stage_skipping),
            match self.plant_invariants {
                PlantInvariantMode::ImplicationCheck => "implication",
                PlantInvariantMode::Restrict => "restrict",
            },
            on_off(self.stop_on_empty_init),
            on_off(self.simplify),
        )
    }
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig::v40()
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown preset `{0}` (expected v08 or v40)")]
pub struct UnknownPreset(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    V08,
    V40,
}

impl Preset {
    pub fn config(self) -> SynthesisConfig {
        match self {
            Preset::V08 => SynthesisConfig::v08(),
            Preset::V40 => SynthesisConfig::v40(),
        }
    }
}

impl FromStr for Preset {
    type Err = UnknownPreset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "v08" => Ok(Preset::V08),
            "v40" => Ok(Preset::V40),
            _ => Err(UnknownPreset(s.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::V08 => write!(f, "v08"),
            Preset::V40 => write!(f, "v40"),
        }
    }
}
