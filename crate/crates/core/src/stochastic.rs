//! Discrete-derivative primitives: the Bernoulli rule that produces a
//! weighted alternative outcome, and single-alternative pruning.

use serde::{Deserialize, Serialize};

use crate::coupling::RunRng;
use crate::dual::Dual;
use crate::error::{Error, Result};

/// Where a discrete draw happened within one program run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DrawSite {
    /// Global index of the draw within the run.
    pub draw_id: usize,
    /// Time step of the draw.
    pub step: usize,
    /// Position of the draw within its time step.
    pub slot: usize,
}

/// A flipped outcome of one Bernoulli draw and its derivative weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAlternative {
    pub flipped_value: bool,
    pub weight: f64,
    pub draw_id: usize,
    pub step: usize,
    pub slot: usize,
}

impl DiscreteAlternative {
    pub fn site(&self) -> DrawSite {
        DrawSite { draw_id: self.draw_id, step: self.step, slot: self.slot }
    }
}

/// Samples `Bernoulli(p)` by inversion, `b = [omega > 1 - p]`, and returns
/// the alternative outcome reachable by an infinitesimal increase of the
/// parameter.
///
/// Raising the parameter moves the threshold `1 - p` by `-p'`. For `p' > 0`
/// only zeros flip (to one, weight `p'/(1-p)`); for `p' < 0` only ones flip
/// (to zero, weight `-p'/p`). Every other case has no alternative.
pub fn bernoulli_stochastic(
    p: Dual,
    omega: f64,
    site: DrawSite,
) -> Result<(bool, Option<DiscreteAlternative>)> {
    if !(p.value > 0.0 && p.value < 1.0) {
        return Err(Error::InvalidProbability(p.value));
    }
    let outcome = omega > 1.0 - p.value;
    let weight = match (outcome, p.tangent) {
        (false, dp) if dp > 0.0 => dp / (1.0 - p.value),
        (true, dp) if dp < 0.0 => -dp / p.value,
        _ => return Ok((outcome, None)),
    };
    let alt = DiscreteAlternative {
        flipped_value: !outcome,
        weight,
        draw_id: site.draw_id,
        step: site.step,
        slot: site.slot,
    };
    Ok((outcome, Some(alt)))
}

/// d log P(b) / d theta for one Bernoulli draw with outcome `b`.
#[inline]
pub fn bernoulli_score(p: Dual, outcome: bool) -> f64 {
    let b = if outcome { 1.0 } else { 0.0 };
    (b - p.value) / (p.value * (1.0 - p.value)) * p.tangent
}

/// Single-pass reservoir selection of one alternative, with probability
/// proportional to `|weight|`.
#[derive(Debug, Clone)]
pub struct PruningState {
    chosen: Option<DiscreteAlternative>,
    total_abs_weight: f64,
    candidates: usize,
    rng: RunRng,
}

impl PruningState {
    pub fn new(rng: RunRng) -> Self {
        Self { chosen: None, total_abs_weight: 0.0, candidates: 0, rng }
    }

    pub fn consider(&mut self, candidate: DiscreteAlternative) {
        if candidate.weight == 0.0 {
            return;
        }
        let u = self.rng.draw_uniform();
        self.consider_with_uniform(candidate, u);
    }

    pub(crate) fn consider_with_uniform(&mut self, candidate: DiscreteAlternative, u: f64) {
        let w = candidate.weight.abs();
        if w == 0.0 {
            return;
        }
        self.total_abs_weight += w;
        self.candidates += 1;
        if u * self.total_abs_weight < w {
            self.chosen = Some(candidate);
        }
    }

    pub fn chosen(&self) -> Option<&DiscreteAlternative> {
        self.chosen.as_ref()
    }

    pub fn total_abs_weight(&self) -> f64 {
        self.total_abs_weight
    }

    /// Number of nonzero-weight candidates seen so far.
    pub fn candidates(&self) -> usize {
        self.candidates
    }

    /// `sign(w_chosen) * sum |w_i|`, so that averaging over the choice gives
    /// back `sum w_i * df_i`. `None` when nothing was retained.
    pub fn pruned_weight(&self) -> Option<f64> {
        self.chosen.map(|c| c.weight.signum() * self.total_abs_weight)
    }
}
