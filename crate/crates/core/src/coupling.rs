//! Seeded random streams and the FIFO reuse of uniform draws between a
//! primal run and its alternative continuation.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent random streams owned by one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Uniform draws that drive the primal program.
    Primal = 0,
    /// Pruning decisions among discrete alternatives.
    Pruning = 1,
    /// Fresh draws for an alternative once the FIFO is exhausted.
    Fallback = 2,
}

const STREAMS_PER_EVENT: u64 = 4;

/// A reproducible uniform stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RunRng {
    seed: u64,
    stream_id: u64,
    draw_counter: u64,
    rng: ChaCha8Rng,
}

impl RunRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, draw_counter: 0, rng }
    }

    /// Stream `purpose` of event `event`.
    pub fn for_event(seed: u64, event: u64, purpose: Stream) -> Self {
        Self::new(seed, event * STREAMS_PER_EVENT + purpose as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn draw_counter(&self) -> u64 {
        self.draw_counter
    }

    /// Next value in `[0, 1)`.
    pub fn draw_uniform(&mut self) -> f64 {
        self.draw_counter += 1;
        self.rng.random::<f64>()
    }
}

/// Queue of the primal's uniform draws for the current time step.
///
/// The alternative pops them in push order; once empty, it falls back to
/// fresh draws that are flagged as uncoupled.
#[derive(Debug, Clone, Default)]
pub struct OmegaFifo {
    queue: VecDeque<f64>,
}

impl OmegaFifo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, omega: f64) {
        self.queue.push_back(omega);
    }

    /// Returns `(omega, coupled)`.
    pub fn pop_or_draw(&mut self, rng: &mut RunRng) -> (f64, bool) {
        match self.queue.pop_front() {
            Some(omega) => (omega, true),
            None => (rng.draw_uniform(), false),
        }
    }

    /// Time-step boundary: nothing leaks into the next step.
    pub fn clear(&mut self) {
        self.queue.clear();
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}
