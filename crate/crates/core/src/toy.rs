//! Small programs with one Bernoulli draw, used as ground truth.

use crate::dual::Dual;
use crate::error::Result;
use crate::program::{Sampler, StochasticProgram};

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `b ~ Bernoulli(theta)`, returns `b`. `d/dtheta E[b] = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BernoulliIdentity;

impl StochasticProgram for BernoulliIdentity {
    fn run(&self, theta: Dual, sampler: &mut Sampler) -> Result<Dual> {
        let b = sampler.bernoulli(theta)?;
        Ok(Dual::constant(bit(b)))
    }
}

/// Smooth part of the two-branch toy programs.
pub fn smooth_term(theta: Dual) -> Dual {
    theta * theta * 0.5 + theta.sin()
}

pub fn smooth_term_derivative(theta: f64) -> f64 {
    theta + theta.cos()
}

/// Parameter-dependent Bernoulli probability, `sigmoid(2 theta - 1)`.
pub fn branch_probability(theta: Dual) -> Dual {
    (theta * 2.0 - 1.0).sigmoid()
}

pub fn branch_probability_derivative(theta: f64) -> f64 {
    let s = 1.0 / (1.0 + (-(2.0 * theta - 1.0)).exp());
    2.0 * s * (1.0 - s)
}

/// `g(theta) + b` with `b ~ Bernoulli(1/2)`: the discrete draw does not
/// depend on theta, so ordinary AD already gives `g'(theta)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedBranch;

impl StochasticProgram for FixedBranch {
    fn run(&self, theta: Dual, sampler: &mut Sampler) -> Result<Dual> {
        let b = sampler.bernoulli(Dual::constant(0.5))?;
        Ok(smooth_term(theta) + bit(b))
    }
}

/// `g(theta) + b` with `b ~ Bernoulli(h(theta))`; the derivative of the
/// expectation is `g'(theta) + h'(theta)`, which ordinary AD misses.
#[derive(Debug, Clone, Copy, Default)]
pub struct DependentBranch;

impl StochasticProgram for DependentBranch {
    fn run(&self, theta: Dual, sampler: &mut Sampler) -> Result<Dual> {
        let b = sampler.bernoulli(branch_probability(theta))?;
        Ok(smooth_term(theta) + bit(b))
    }
}

impl DependentBranch {
    pub fn exact_gradient(theta: f64) -> f64 {
        smooth_term_derivative(theta) + branch_probability_derivative(theta)
    }
}

/// Sum of `steps` draws with probability `sigmoid(theta - k/2)` at step `k`.
/// Derivative: `sum_k s_k (1 - s_k)`.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliChain {
    pub steps: usize,
}

impl StochasticProgram for BernoulliChain {
    fn run(&self, theta: Dual, sampler: &mut Sampler) -> Result<Dual> {
        let mut total = 0.0;
        for k in 0..self.steps {
            total += bit(sampler.bernoulli((theta - 0.5 * k as f64).sigmoid())?);
            sampler.next_step();
        }
        Ok(Dual::constant(total))
    }
}

impl BernoulliChain {
    pub fn exact_gradient(&self, theta: f64) -> f64 {
        (0..self.steps)
            .map(|k| {
                let s = 1.0 / (1.0 + (-(theta - 0.5 * k as f64)).exp());
                s * (1.0 - s)
            })
            .sum()
    }
}
