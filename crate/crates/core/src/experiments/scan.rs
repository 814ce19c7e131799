use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate, estimator_stats, outputs, values, Batch, EstimatorOptions, EstimatorStats, Method};
use crate::program::StochasticProgram;

use super::{summary_of, PolyFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub grid: Vec<f64>,
    pub n_per_point: usize,
    pub methods: Vec<Method>,
    pub poly_degree: usize,
    pub seed: u64,
}

impl ScanSettings {
    /// `points` evenly spaced values over `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
        match points {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub stats: EstimatorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub theta: f64,
    pub loss: LossSummary,
    /// Derivative of the polynomial fitted to the mean loss.
    pub poly_fit_grad: f64,
    pub grads: Vec<MethodStats>,
}

/// Loss distribution and gradient estimates over a grid of the parameter.
/// Every grid point reuses the same event streams.
pub fn scan<P: StochasticProgram + ?Sized>(
    program: &P,
    settings: &ScanSettings,
    opts: &EstimatorOptions,
) -> Result<Vec<ScanRow>> {
    if settings.grid.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    if settings.n_per_point < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: settings.n_per_point });
    }
    let batch = Batch::new(settings.seed, settings.n_per_point);
    let mut rows: Vec<ScanRow> = settings
        .grid
        .par_iter()
        .map(|&theta| {
            let loss = summary_of(&outputs(program, theta, batch)?)?;
            let grads = settings
                .methods
                .iter()
                .map(|&method| {
                    let samples = estimate(method, program, theta, batch, opts)?;
                    Ok(MethodStats { method, stats: estimator_stats(&values(&samples))? })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ScanRow { theta, loss, poly_fit_grad: f64::NAN, grads })
        })
        .collect::<Result<_>>()?;

    let xs: Vec<f64> = rows.iter().map(|r| r.theta).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.loss.mean).collect();
    let fit = PolyFit::fit(&xs, &ys, settings.poly_degree)?;
    for row in &mut rows {
        row.poly_fit_grad = fit.derivative(row.theta);
    }
    Ok(rows)
}

impl ScanRow {
    pub fn method(&self, method: Method) -> Option<&EstimatorStats> {
        self.grads.iter().find(|g| g.method == method).map(|g| &g.stats)
    }
}
