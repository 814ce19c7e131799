//! Stochastic programs and the sampler that drives their discrete draws.
//!
//! A program asks its [`Sampler`] for Bernoulli outcomes. Depending on how
//! the sampler was built, the same program code runs as
//!
//! * a primal evaluation that accumulates the score and, optionally, prunes
//!   the weighted discrete alternatives down to one,
//! * an alternative continuation that replays the primal up to one flipped
//!   draw and then reuses the primal's uniforms step by step (FIFO), or
//! * a forced-outcome path used for exhaustive enumeration.

use crate::coupling::{OmegaFifo, RunRng, Stream};
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::stochastic::{bernoulli_score, bernoulli_stochastic, DiscreteAlternative, DrawSite, PruningState};

/// A program whose randomness comes only from its [`Sampler`].
///
/// `theta` is the differentiated parameter; the returned dual carries the
/// program output and its pathwise (smooth) derivative.
pub trait StochasticProgram: Sync {
    fn run(&self, theta: Dual, sampler: &mut Sampler) -> Result<Dual>;
}

impl<P: StochasticProgram + ?Sized> StochasticProgram for &P {
    fn run(&self, theta: Dual, sampler: &mut Sampler) -> Result<Dual> {
        (**self).run(theta, sampler)
    }
}

/// Uniform draws consumed by a primal run, grouped by time step.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    steps: Vec<Vec<f64>>,
    continuous: Vec<f64>,
}

impl Tape {
    pub fn step(&self, step: usize) -> &[f64] {
        self.steps.get(step).map_or(&[], Vec::as_slice)
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn n_draws(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    fn record(&mut self, step: usize, omega: f64) {
        if self.steps.len() <= step {
            self.steps.resize_with(step + 1, Vec::new);
        }
        self.steps[step].push(omega);
    }
}

/// One Bernoulli draw as seen by the sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawRecord {
    pub site: DrawSite,
    pub probability: f64,
    pub outcome: bool,
    /// Whether an alternative took this uniform from the primal's FIFO.
    /// Always `true` for primal and pre-divergence draws.
    pub coupled: bool,
    /// Draw happened after the alternative's flipped draw.
    pub after_divergence: bool,
}

#[derive(Debug)]
struct Alternative {
    tape: Tape,
    divergence: DiscreteAlternative,
    fallback: RunRng,
    fifo: OmegaFifo,
    coupling: bool,
    diverged: bool,
    coupled_draws: usize,
    fresh_draws: usize,
}

#[derive(Debug)]
enum Mode {
    Primal { rng: RunRng, pruning: Option<PruningState> },
    Alternative(Box<Alternative>),
    Forced { outcomes: Vec<bool>, probability: Dual, max_draws: usize },
}

/// Supplies every random decision of one program run.
#[derive(Debug)]
pub struct Sampler {
    mode: Mode,
    step: usize,
    slot: usize,
    draws: usize,
    continuous_draws: usize,
    score: f64,
    tape: Tape,
    log: Option<Vec<DrawRecord>>,
}

impl Sampler {
    fn with_mode(mode: Mode) -> Self {
        Self {
            mode,
            step: 0,
            slot: 0,
            draws: 0,
            continuous_draws: 0,
            score: 0.0,
            tape: Tape::default(),
            log: None,
        }
    }

    /// Primal evaluation of event `event`; prunes alternatives when asked.
    pub fn primal(seed: u64, event: u64, pruning: bool) -> Self {
        let rng = RunRng::for_event(seed, event, Stream::Primal);
        let pruning =
            pruning.then(|| PruningState::new(RunRng::for_event(seed, event, Stream::Pruning)));
        Self::with_mode(Mode::Primal { rng, pruning })
    }

    /// Alternative continuation of a primal run that produced `tape`.
    pub fn alternative(
        tape: Tape,
        divergence: DiscreteAlternative,
        fallback: RunRng,
        coupling: bool,
    ) -> Self {
        Self::with_mode(Mode::Alternative(Box::new(Alternative {
            tape,
            divergence,
            fallback,
            fifo: OmegaFifo::new(),
            coupling,
            diverged: false,
            coupled_draws: 0,
            fresh_draws: 0,
        })))
    }

    /// Follows the given outcomes, then zeros, multiplying up the path
    /// probability. Running past `max_draws` is an error.
    pub fn forced(outcomes: Vec<bool>, max_draws: usize) -> Self {
        Self::with_mode(Mode::Forced { outcomes, probability: Dual::constant(1.0), max_draws })
    }

    /// Keep a record of every Bernoulli draw.
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    /// Marks the end of a time step.
    pub fn next_step(&mut self) {
        self.step += 1;
        self.slot = 0;
        if let Mode::Alternative(alt) = &mut self.mode {
            if alt.diverged && alt.coupling {
                alt.fifo.clear();
                for &omega in alt.tape.step(self.step) {
                    alt.fifo.push(omega);
                }
            }
        }
    }

    /// A continuous uniform draw that is not a differentiated decision
    /// (e.g. an initial direction). Alternatives replay these verbatim.
    pub fn uniform(&mut self) -> Result<f64> {
        let k = self.continuous_draws;
        self.continuous_draws += 1;
        match &mut self.mode {
            Mode::Primal { rng, .. } => {
                let u = rng.draw_uniform();
                self.tape.continuous.push(u);
                Ok(u)
            }
            Mode::Alternative(alt) => Ok(match alt.tape.continuous.get(k) {
                Some(&u) => u,
                None => alt.fallback.draw_uniform(),
            }),
            Mode::Forced { .. } => Err(Error::Config(
                "exhaustive enumeration needs programs without continuous draws".into(),
            )),
        }
    }

    /// Draws `Bernoulli(p)`.
    pub fn bernoulli(&mut self, p: Dual) -> Result<bool> {
        let site = DrawSite { draw_id: self.draws, step: self.step, slot: self.slot };
        let mut coupled = true;
        let mut after_divergence = false;
        let outcome = match &mut self.mode {
            Mode::Primal { rng, pruning } => {
                let omega = rng.draw_uniform();
                self.tape.record(site.step, omega);
                let (outcome, alt) = bernoulli_stochastic(p, omega, site)?;
                self.score += bernoulli_score(p, outcome);
                if let (Some(state), Some(alt)) = (pruning.as_mut(), alt) {
                    state.consider(alt);
                }
                outcome
            }
            Mode::Alternative(alt) => {
                if alt.diverged {
                    after_divergence = true;
                    let omega = if alt.coupling {
                        let (omega, c) = alt.fifo.pop_or_draw(&mut alt.fallback);
                        coupled = c;
                        omega
                    } else {
                        coupled = false;
                        alt.fallback.draw_uniform()
                    };
                    if coupled {
                        alt.coupled_draws += 1;
                    } else {
                        alt.fresh_draws += 1;
                    }
                    bernoulli_stochastic(p, omega, site)?.0
                } else if site.draw_id < alt.divergence.draw_id {
                    let omega = *alt.tape.step(site.step).get(site.slot).ok_or_else(|| {
                        Error::SimulationDiverged {
                            step: site.step,
                            detail: "alternative replay left the primal trajectory".into(),
                        }
                    })?;
                    bernoulli_stochastic(p, omega, site)?.0
                } else {
                    if site.step != alt.divergence.step || site.slot != alt.divergence.slot {
                        return Err(Error::SimulationDiverged {
                            step: site.step,
                            detail: "divergence site does not match the replayed draw".into(),
                        });
                    }
                    alt.diverged = true;
                    if alt.coupling {
                        alt.fifo.clear();
                        for &omega in &alt.tape.step(site.step)[site.slot + 1..] {
                            alt.fifo.push(omega);
                        }
                    }
                    alt.divergence.flipped_value
                }
            }
            Mode::Forced { outcomes, probability, max_draws } => {
                if site.draw_id >= *max_draws {
                    return Err(Error::InstanceTooLarge { draws: site.draw_id + 1, max: *max_draws });
                }
                if !(p.value > 0.0 && p.value < 1.0) {
                    return Err(Error::InvalidProbability(p.value));
                }
                let outcome = match outcomes.get(site.draw_id) {
                    Some(&b) => b,
                    None => {
                        outcomes.push(false);
                        false
                    }
                };
                *probability = *probability * if outcome { p } else { 1.0 - p };
                outcome
            }
        };
        if let Some(log) = self.log.as_mut() {
            log.push(DrawRecord { site, probability: p.value, outcome, coupled, after_divergence });
        }
        self.draws += 1;
        self.slot += 1;
        Ok(outcome)
    }

    /// Accumulated `d log P / d theta` over all primal draws.
    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn log(&self) -> Option<&[DrawRecord]> {
        self.log.as_deref()
    }

    pub fn pruning(&self) -> Option<&PruningState> {
        match &self.mode {
            Mode::Primal { pruning, .. } => pruning.as_ref(),
            _ => None,
        }
    }

    /// Tape of a primal run.
    pub fn into_tape(self) -> Tape {
        self.tape
    }

    /// Fraction of post-divergence draws fed from the primal's FIFO.
    pub fn coupled_fraction(&self) -> Option<f64> {
        match &self.mode {
            Mode::Alternative(alt) => {
                let total = alt.coupled_draws + alt.fresh_draws;
                (total > 0).then(|| alt.coupled_draws as f64 / total as f64)
            }
            _ => None,
        }
    }

    /// Path probability and the full outcome sequence of a forced run.
    pub fn forced_path(&self) -> Option<(Dual, &[bool])> {
        match &self.mode {
            Mode::Forced { outcomes, probability, .. } => Some((*probability, outcomes)),
            _ => None,
        }
    }
}

/// One primal run plus its pruned alternative, if any.
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub primal: Dual,
    pub alternative: Option<AlternativeRun>,
    pub score: f64,
    pub candidates: usize,
}

#[derive(Debug, Clone)]
pub struct AlternativeRun {
    pub output: Dual,
    pub divergence: DiscreteAlternative,
    pub pruned_weight: f64,
    pub coupled_fraction: Option<f64>,
}

impl PairedRun {
    /// `delta + W * (f(alt) - f(primal))`.
    pub fn estimate(&self) -> f64 {
        let discrete = self
            .alternative
            .as_ref()
            .map_or(0.0, |alt| alt.pruned_weight * (alt.output.value - self.primal.value));
        self.primal.tangent + discrete
    }
}

/// Runs event `event` as a primal with pruning and, if an alternative was
/// retained, runs that alternative to completion.
pub fn run_paired<P: StochasticProgram + ?Sized>(
    program: &P,
    theta: f64,
    seed: u64,
    event: u64,
    coupling: bool,
) -> Result<PairedRun> {
    let mut sampler = Sampler::primal(seed, event, true);
    let primal = program.run(Dual::seed(theta), &mut sampler)?;
    let score = sampler.score();
    let state = sampler.pruning().cloned().expect("primal built with pruning");
    let candidates = state.candidates();
    let alternative = match (state.chosen(), state.pruned_weight()) {
        (Some(&divergence), Some(pruned_weight)) => {
            let fallback = RunRng::for_event(seed, event, Stream::Fallback);
            let mut alt = Sampler::alternative(sampler.into_tape(), divergence, fallback, coupling);
            let output = program.run(Dual::seed(theta), &mut alt)?;
            Some(AlternativeRun {
                output,
                divergence,
                pruned_weight,
                coupled_fraction: alt.coupled_fraction(),
            })
        }
        _ => None,
    };
    Ok(PairedRun { primal, alternative, score, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three steps, two draws per step, output = number of ones.
    struct Counter {
        p: f64,
    }

    impl StochasticProgram for Counter {
        fn run(&self, theta: Dual, s: &mut Sampler) -> Result<Dual> {
            let p = Dual::new(self.p, 0.0) + (theta - theta.value) * 0.1;
            let mut total = 0.0;
            for _ in 0..3 {
                for _ in 0..2 {
                    total += f64::from(u8::from(s.bernoulli(p)?));
                }
                s.next_step();
            }
            Ok(Dual::constant(total))
        }
    }

    #[test]
    fn primal_is_reproducible() {
        let prog = Counter { p: 0.4 };
        let mut a = Sampler::primal(3, 9, true).with_log();
        let mut b = Sampler::primal(3, 9, true).with_log();
        prog.run(Dual::seed(0.0), &mut a).unwrap();
        prog.run(Dual::seed(0.0), &mut b).unwrap();
        assert_eq!(a.log(), b.log());
        assert_eq!(a.score().to_bits(), b.score().to_bits());
    }

    #[test]
    fn alternative_replays_then_reuses_the_fifo() {
        let prog = Counter { p: 0.4 };
        let mut primal = Sampler::primal(1, 0, false).with_log();
        prog.run(Dual::seed(0.0), &mut primal).unwrap();
        let primal_log = primal.log().unwrap().to_vec();
        let tape = primal.into_tape();
        let flip_at = primal_log[3];
        let divergence = DiscreteAlternative {
            flipped_value: !flip_at.outcome,
            weight: 1.0,
            draw_id: flip_at.site.draw_id,
            step: flip_at.site.step,
            slot: flip_at.site.slot,
        };
        let mut alt =
            Sampler::alternative(tape, divergence, RunRng::new(99, 0), true).with_log();
        prog.run(Dual::seed(0.0), &mut alt).unwrap();
        let alt_log = alt.log().unwrap();
        for (i, (a, p)) in alt_log.iter().zip(&primal_log).enumerate() {
            if i == 3 {
                assert_ne!(a.outcome, p.outcome);
            } else {
                // Same program shape, so every uniform is reused in place.
                assert_eq!(a.outcome, p.outcome, "draw {i}");
                assert!(a.coupled);
            }
        }
        assert_eq!(alt.coupled_fraction(), Some(1.0));
    }

    #[test]
    fn uncoupled_alternative_draws_fresh() {
        let prog = Counter { p: 0.4 };
        let mut primal = Sampler::primal(1, 0, false);
        prog.run(Dual::seed(0.0), &mut primal).unwrap();
        let divergence = DiscreteAlternative {
            flipped_value: true,
            weight: 1.0,
            draw_id: 0,
            step: 0,
            slot: 0,
        };
        let mut alt = Sampler::alternative(primal.into_tape(), divergence, RunRng::new(5, 0), false);
        prog.run(Dual::seed(0.0), &mut alt).unwrap();
        assert_eq!(alt.coupled_fraction(), Some(0.0));
    }

    #[test]
    fn forced_path_probability() {
        let prog = Counter { p: 0.25 };
        let mut s = Sampler::forced(vec![true, false, true], 6);
        prog.run(Dual::constant(0.0), &mut s).unwrap();
        let (prob, outcomes) = s.forced_path().unwrap();
        assert_eq!(outcomes, &[true, false, true, false, false, false]);
        let expected = 0.25 * 0.75 * 0.25 * 0.75f64.powi(3);
        assert!((prob.value - expected).abs() < 1e-15);
    }

    #[test]
    fn forced_budget_is_enforced() {
        let prog = Counter { p: 0.25 };
        let mut s = Sampler::forced(vec![], 5);
        let err = prog.run(Dual::constant(0.0), &mut s).unwrap_err();
        assert!(matches!(err, Error::InstanceTooLarge { max: 5, .. }));
    }
}
