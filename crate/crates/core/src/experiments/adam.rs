use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar Adam with bias correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: f64,
    pub v: f64,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        Self { m: 0.0, v: 0.0, t: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// One update; returns the new parameter value.
    pub fn step(&mut self, grad: f64, theta: f64) -> Result<f64> {
        if !grad.is_finite() {
            return Err(Error::OptimizerDiverged { step: self.t as usize, grad });
        }
        self.t += 1;
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad;
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad;
        let m_hat = self.m / (1.0 - self.beta1.powi(self.t as i32));
        let v_hat = self.v / (1.0 - self.beta2.powi(self.t as i32));
        Ok(theta - self.lr * m_hat / (v_hat.sqrt() + self.eps))
    }
}
