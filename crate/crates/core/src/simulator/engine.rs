use crate::coupling::{RunRng, Stream};
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::program::{Sampler, StochasticProgram, Tape};
use crate::stochastic::DiscreteAlternative;

use super::material::interaction_probability;
use super::{DetectorParams, Event, Hit, Mode, ParticleState, Segment, SimConfig, Termination};

pub fn propagate(p: ParticleState, step_size: f64) -> ParticleState {
    ParticleState {
        pos: [p.pos[0] + step_size * p.dir[0], p.pos[1] + step_size * p.dir[1]],
        ..p
    }
}

fn rotate(dir: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * dir[0] - s * dir[1], s * dir[0] + c * dir[1]]
}

/// Two half-energy daughters at the parent position, rotated by
/// `+-opening_angle / 2`. Returned as `(right, left)`.
pub fn split(p: ParticleState, opening_angle: f64) -> (ParticleState, ParticleState) {
    let half = 0.5 * opening_angle;
    let energy = 0.5 * p.energy;
    let right = ParticleState { pos: p.pos, dir: rotate(p.dir, -half), energy };
    let left = ParticleState { pos: p.pos, dir: rotate(p.dir, half), energy };
    (right, left)
}

/// Shower mode always splits and energy-loss mode never does, so the split
/// decision consumes no randomness.
fn splits(mode: Mode) -> bool {
    match mode {
        Mode::Shower => true,
        Mode::EnergyLoss => false,
    }
}

/// Simulates one event, taking every random decision from `sampler`.
pub fn simulate_event(
    config: &SimConfig,
    params: &DetectorParams,
    sampler: &mut Sampler,
    record_segments: bool,
) -> Result<Event> {
    let angle = match config.direction {
        Some(a) => a,
        None => std::f64::consts::TAU * sampler.uniform()?,
    };
    let (s, c) = angle.sin_cos();
    let mut particles = vec![ParticleState { pos: config.start, dir: [c, s], energy: config.e_init }];
    let mut next = Vec::new();
    let mut hits = Vec::new();
    let mut segments = record_segments.then(Vec::new);
    let mut eloss_hits = 0;
    let mut stopped_energy = 0.0;
    let mut escaped_energy = 0.0;
    let mut escaped = false;
    let world_r2 = config.world_radius * config.world_radius;

    let mut step = 0;
    let terminated_by = loop {
        if particles.is_empty() {
            break if escaped { Termination::LeftWorld } else { Termination::AllBelowThreshold };
        }
        if step == config.max_steps {
            break Termination::MaxSteps;
        }
        next.clear();
        for &particle in &particles {
            let moved = propagate(particle, config.step_size);
            if let Some(segs) = segments.as_mut() {
                segs.push(Segment { step, from: particle.pos, to: moved.pos, energy: moved.energy });
            }
            let [x0, x1] = moved.pos;
            if x0 * x0 + x1 * x1 >= world_r2 {
                escaped = true;
                escaped_energy += moved.energy;
                continue;
            }
            let m = interaction_probability(moved.pos, params)?;
            if !m.is_finite() {
                return Err(Error::SimulationDiverged {
                    step,
                    detail: format!("non-finite interaction probability at {:?}", moved.pos),
                });
            }
            let mut survivors = [None, None];
            if sampler.bernoulli(m)? {
                hits.push(Hit::at(moved.pos, step));
                if splits(config.mode) {
                    let (right, left) = split(moved, config.opening_angle);
                    survivors = [Some(right), Some(left)];
                } else {
                    eloss_hits += 1;
                    survivors[0] = Some(ParticleState { energy: moved.energy - config.eloss, ..moved });
                }
            } else {
                survivors[0] = Some(moved);
            }
            for p in survivors.into_iter().flatten() {
                if p.energy < config.e_threshold {
                    stopped_energy += p.energy;
                } else {
                    next.push(p);
                }
            }
        }
        std::mem::swap(&mut particles, &mut next);
        sampler.next_step();
        step += 1;
    };

    Ok(Event {
        hits,
        score_tangent: sampler.score(),
        n_steps: step,
        terminated_by,
        eloss_hits,
        stopped_energy,
        escaped_energy,
        live_energy: particles.iter().map(|p| p.energy).sum(),
        segments,
    })
}

/// Re-executes an event from its flipped draw onward. Draws before the
/// divergence replay the primal tape; later ones are taken from the
/// per-step FIFO of primal uniforms (or fresh when `coupling` is off).
pub fn run_alternative(
    divergence: DiscreteAlternative,
    config: &SimConfig,
    params: &DetectorParams,
    primal_tape: Tape,
    fallback: RunRng,
    coupling: bool,
    record_segments: bool,
) -> Result<(Event, Sampler)> {
    let mut sampler = Sampler::alternative(primal_tape, divergence, fallback, coupling);
    let event = simulate_event(config, params, &mut sampler, record_segments)?;
    Ok((event, sampler))
}

/// A primal event with its segments and, when one was retained by pruning,
/// the alternative event it was paired with.
#[derive(Debug, Clone)]
pub struct DisplayedEvent {
    pub primal: Event,
    pub candidates: usize,
    pub alternative: Option<DisplayedAlternative>,
}

#[derive(Debug, Clone)]
pub struct DisplayedAlternative {
    pub divergence: DiscreteAlternative,
    pub pruned_weight: f64,
    pub coupled_fraction: Option<f64>,
    pub event: Event,
}

/// Runs event `event` exactly as the stochastic-AD estimator does, keeping
/// the per-step segments of both runs.
pub fn display_event(
    config: &SimConfig,
    params: &DetectorParams,
    seed: u64,
    event: u64,
    coupling: bool,
) -> Result<DisplayedEvent> {
    let mut sampler = Sampler::primal(seed, event, true);
    let primal = simulate_event(config, params, &mut sampler, true)?;
    let state = sampler.pruning().cloned().expect("primal built with pruning");
    let alternative = match (state.chosen(), state.pruned_weight()) {
        (Some(&divergence), Some(pruned_weight)) => {
            let fallback = RunRng::for_event(seed, event, Stream::Fallback);
            let (event, alt) =
                run_alternative(divergence, config, params, sampler.into_tape(), fallback, coupling, true)?;
            Some(DisplayedAlternative { divergence, pruned_weight, coupled_fraction: alt.coupled_fraction(), event })
        }
        _ => None,
    };
    Ok(DisplayedEvent { primal, candidates: state.candidates(), alternative })
}

/// Mean squared radial error of the hits, `None` without hits.
pub fn mse_loss(hits: &[Hit], target_radius: f64) -> Option<f64> {
    if hits.is_empty() {
        return None;
    }
    let sum: f64 = hits.iter().map(|h| (h.r - target_radius).powi(2)).sum();
    Some(sum / hits.len() as f64)
}

pub fn loss_value(event: &Event, target_radius: f64, no_hit_loss: f64) -> f64 {
    mse_loss(&event.hits, target_radius).unwrap_or(no_hit_loss)
}

/// The simulator's design loss as a stochastic program of the inner radius.
#[derive(Debug, Clone)]
pub struct LossProgram {
    pub config: SimConfig,
    pub params: DetectorParams,
}

impl LossProgram {
    pub fn new(config: SimConfig, params: DetectorParams) -> Self {
        Self { config, params }
    }
}

impl StochasticProgram for LossProgram {
    fn run(&self, theta: Dual, sampler: &mut Sampler) -> Result<Dual> {
        let params = self.params.with_theta(theta);
        let event = simulate_event(&self.config, &params, sampler, false)?;
        // Hit positions do not move with theta: no pathwise term.
        Ok(Dual::constant(self.config.loss(&event)))
    }
}
