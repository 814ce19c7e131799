use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate, outputs, Batch, EstimatorOptions, Method, SampleAux};
use crate::program::StochasticProgram;

use super::{summary_of, AdamState, LossSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSettings {
    pub replicas: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub theta_init: f64,
    pub theta_bounds: (f64, f64),
    pub seed: u64,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        Self {
            replicas: 10,
            steps: 500,
            batch: 2,
            lr: 0.01,
            theta_init: 3.0,
            theta_bounds: (0.5, 6.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRun {
    pub method: Method,
    pub replica_id: usize,
    pub seed: u64,
    /// Parameter before each step and after the last one.
    pub theta_trace: Vec<f64>,
    /// Batch-mean loss at each entry of `theta_trace`.
    pub loss_trace: Vec<f64>,
    /// Updates that left the bounds and were clamped back.
    pub clamp_events: usize,
}

fn batch_losses(samples: &[crate::estimators::GradientSample]) -> f64 {
    let sum: f64 = samples
        .iter()
        .map(|s| match s.aux {
            SampleAux::Numeric { base, .. } => base,
            SampleAux::Score { output, .. } | SampleAux::StochAd { output, .. } => output,
            SampleAux::Pathwise => f64::NAN,
        })
        .sum();
    sum / samples.len() as f64
}

fn run_replica<P: StochasticProgram + ?Sized>(
    program: &P,
    method: Method,
    settings: &OptimizeSettings,
    opts: &EstimatorOptions,
    replica_id: usize,
) -> Result<OptRun> {
    let seed = settings.seed + replica_id as u64;
    let (lo, hi) = settings.theta_bounds;
    let mut adam = AdamState::new(settings.lr);
    let mut theta = settings.theta_init;
    let mut theta_trace = Vec::with_capacity(settings.steps + 1);
    let mut loss_trace = Vec::with_capacity(settings.steps + 1);
    let mut clamp_events = 0;
    let batch_at = |step: usize| Batch {
        seed,
        first_event: (step * settings.batch) as u64,
        n: settings.batch,
    };
    for step in 0..settings.steps {
        let samples = estimate(method, program, theta, batch_at(step), opts)?;
        let grad = samples.iter().map(|s| s.value).sum::<f64>() / samples.len() as f64;
        theta_trace.push(theta);
        loss_trace.push(batch_losses(&samples));
        let next = adam.step(grad, theta).map_err(|_| Error::OptimizerDiverged { step, grad })?;
        theta = next.clamp(lo, hi);
        if theta != next {
            clamp_events += 1;
        }
    }
    let last = outputs(program, theta, batch_at(settings.steps))?;
    theta_trace.push(theta);
    loss_trace.push(last.iter().sum::<f64>() / last.len() as f64);
    Ok(OptRun { method, replica_id, seed, theta_trace, loss_trace, clamp_events })
}

/// Independent Adam runs of `settings.replicas` replicas; replica `k` uses
/// seed `settings.seed + k` and, at step `s`, events `s*batch ..`.
pub fn optimize<P: StochasticProgram + ?Sized>(
    program: &P,
    method: Method,
    settings: &OptimizeSettings,
    opts: &EstimatorOptions,
) -> Result<Vec<OptRun>> {
    if settings.replicas == 0 || settings.steps == 0 || settings.batch == 0 {
        return Err(Error::Config("replicas, steps and batch must be positive".into()));
    }
    if method == Method::ScoreBaseline && settings.batch < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: settings.batch });
    }
    (0..settings.replicas)
        .into_par_iter()
        .map(|r| run_replica(program, method, settings, opts, r))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub loss: LossSummary,
}

/// Per-step mean and quartiles of the loss across replicas.
pub fn summarize_runs(runs: &[OptRun]) -> Result<Vec<StepSummary>> {
    let len = runs.iter().map(|r| r.loss_trace.len()).min().unwrap_or(0);
    (0..len)
        .map(|step| {
            let losses: Vec<f64> = runs.iter().map(|r| r.loss_trace[step]).collect();
            let loss = if losses.len() >= 2 {
                summary_of(&losses)?
            } else {
                let v = losses[0];
                LossSummary { mean: v, median: v, q25: v, q75: v }
            };
            Ok(StepSummary { step, loss })
        })
        .collect()
}
