//! Experiment harness: loss/gradient scans over the inner radius, gradient
//! tables at a fixed radius, and Adam-driven design optimisation.

mod adam;
mod optimize;
mod polyfit;
mod scan;
mod table;

pub use adam::AdamState;
pub use optimize::{optimize, summarize_runs, OptRun, OptimizeSettings, StepSummary};
pub use polyfit::PolyFit;
pub use scan::{scan, LossSummary, MethodStats, ScanRow, ScanSettings};
pub use table::{grad_table, ordering_violations, GradRow};

use crate::error::Result;
use crate::estimators::{estimator_stats, outputs, Batch};
use crate::program::StochasticProgram;

/// Mean program output over a batch of events at `theta`.
pub fn expected_loss<P: StochasticProgram + ?Sized>(program: &P, theta: f64, batch: Batch) -> Result<f64> {
    let values = outputs(program, theta, batch)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Runs `f` on a dedicated pool of `threads` workers (`0` = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) fn summary_of(values: &[f64]) -> Result<LossSummary> {
    let stats = estimator_stats(values)?;
    Ok(LossSummary { mean: stats.mean, median: stats.q50, q25: stats.q25, q75: stats.q75 })
}
