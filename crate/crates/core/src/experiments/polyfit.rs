use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares polynomial on an affinely rescaled abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    center: f64,
    half_width: f64,
    coefficients: Vec<f64>,
}

impl PolyFit {
    /// Fits degree `min(degree, xs.len() - 1)`.
    pub fn fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::Config("polynomial fit needs matching, nonempty data".into()));
        }
        let degree = degree.min(xs.len() - 1);
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let center = 0.5 * (lo + hi);
        let half_width = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        let design = DMatrix::from_fn(xs.len(), degree + 1, |i, k| {
            ((xs[i] - center) / half_width).powi(k as i32)
        });
        let rhs = DVector::from_column_slice(ys);
        let solution = design
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Config(format!("polynomial fit failed: {e}")))?;
        Ok(Self { center, half_width, coefficients: solution.iter().copied().collect() })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.half_width;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.half_width;
        let d = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c);
        d / self.half_width
    }
}
