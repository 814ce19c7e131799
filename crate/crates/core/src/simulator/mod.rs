//! Toy particle-interaction simulator over a parametric 2D material map.
//!
//! Particles move in fixed steps; at each step the material map gives an
//! interaction probability. An interaction records a hit and then either
//! costs a fixed energy (energy-loss mode) or splits the particle into two
//! half-energy daughters (shower mode).

mod engine;
mod material;

use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::error::{Error, Result};

pub use engine::{display_event, DisplayedAlternative, DisplayedEvent, loss_value, mse_loss, propagate, run_alternative, simulate_event, split, LossProgram};
pub use material::{interaction_probability, material_map, material_raster, PROBABILITY_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    EnergyLoss,
    Shower,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::EnergyLoss => "energy-loss",
            Mode::Shower => "shower",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy-loss" | "eloss" => Ok(Mode::EnergyLoss),
            "shower" => Ok(Mode::Shower),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Material-map parameters. `theta_r` is the differentiated inner radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub theta_r: Dual,
    pub sharpness: f64,
    pub seg_freq: f64,
    pub r_max: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self { theta_r: Dual::seed(2.5), sharpness: 10.0, seg_freq: 12.0, r_max: 3.0 }
    }
}

impl DetectorParams {
    pub fn with_theta(mut self, theta_r: Dual) -> Self {
        self.theta_r = theta_r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sharpness > 0.0
            && self.seg_freq > 0.0
            && self.r_max > 0.0
            && self.theta_r.value > 0.0
            && self.theta_r.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid detector parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: Mode,
    pub step_size: f64,
    pub e_init: f64,
    pub e_threshold: f64,
    pub eloss: f64,
    pub opening_angle: f64,
    pub target_radius: f64,
    pub max_steps: usize,
    pub world_radius: f64,
    pub start: [f64; 2],
    /// Fixed initial direction angle; drawn uniformly in `[0, 2pi)` when unset.
    pub direction: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::new(Mode::Shower)
    }
}

impl SimConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            step_size: 0.01,
            e_init: 25.0,
            e_threshold: 0.5,
            eloss: 1.0,
            opening_angle: 0.1,
            target_radius: 2.0,
            max_steps: 2000,
            world_radius: 8.0,
            start: [0.01, 0.0],
            direction: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.step_size > 0.0
            && self.e_init > 0.0
            && self.e_threshold > 0.0
            && self.eloss > 0.0
            && self.opening_angle.is_finite()
            && self.world_radius > 0.0
            && self.max_steps > 0
            && (self.start[0] != 0.0 || self.start[1] != 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid simulation config: {self:?}")))
        }
    }

    /// Loss assigned to events without hits.
    pub fn no_hit_loss(&self) -> f64 {
        self.world_radius * self.world_radius
    }

    /// Mean squared hit-radius error, or the no-hit sentinel.
    pub fn loss(&self, event: &Event) -> f64 {
        loss_value(event, self.target_radius, self.no_hit_loss())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub pos: [f64; 2],
    pub dir: [f64; 2],
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub pos: [f64; 2],
    pub r: f64,
    pub step_index: usize,
}

impl Hit {
    pub fn at(pos: [f64; 2], step_index: usize) -> Self {
        Self { pos, r: pos[0].hypot(pos[1]), step_index }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    AllBelowThreshold,
    MaxSteps,
    LeftWorld,
}

/// One propagation step of one particle, kept for event displays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub step: usize,
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub hits: Vec<Hit>,
    pub score_tangent: f64,
    pub n_steps: usize,
    pub terminated_by: Termination,
    /// Interactions that cost `eloss` (energy-loss mode).
    pub eloss_hits: usize,
    pub stopped_energy: f64,
    pub escaped_energy: f64,
    pub live_energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<Segment>>,
}

impl Event {
    pub fn has_hits(&self) -> bool {
        !self.hits.is_empty()
    }
}
