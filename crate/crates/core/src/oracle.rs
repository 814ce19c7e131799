//! Exact gradients by enumerating every discrete outcome path.
//!
//! `d/dtheta sum_paths P(path; theta) f(path; theta)`, with each path
//! probability built from the same duals the program feeds its sampler.

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::program::{Sampler, StochasticProgram};
use crate::simulator::{DetectorParams, LossProgram, Mode, SimConfig};

/// Default draw budget: at most `2^14` paths.
pub const DEFAULT_MAX_DRAWS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    /// `E[f]` with its exact derivative in the tangent.
    pub expectation: Dual,
    pub total_probability: f64,
    pub paths: usize,
    pub max_depth: usize,
}

/// Depth-first enumeration of all outcome sequences of `program`.
pub fn enumerate<P: StochasticProgram + ?Sized>(
    program: &P,
    theta: Dual,
    max_draws: usize,
) -> Result<Enumeration> {
    let mut pending = vec![Vec::new()];
    let mut expectation = Dual::constant(0.0);
    let mut total_probability = 0.0;
    let mut paths = 0;
    let mut max_depth = 0;
    while let Some(prefix) = pending.pop() {
        let fixed = prefix.len();
        let mut sampler = Sampler::forced(prefix, max_draws);
        let out = program.run(theta, &mut sampler)?;
        let (prob, outcomes) = sampler.forced_path().expect("forced sampler");
        if outcomes.len() < fixed {
            return Err(Error::Config("program consumed fewer draws than its forced prefix".into()));
        }
        // Every draw past the prefix defaulted to zero; its one-branch is pending.
        for k in fixed..outcomes.len() {
            let mut sibling = outcomes[..k].to_vec();
            sibling.push(true);
            pending.push(sibling);
        }
        expectation = expectation + prob * out;
        total_probability += prob.value;
        paths += 1;
        max_depth = max_depth.max(outcomes.len());
    }
    Ok(Enumeration { expectation, total_probability, paths, max_depth })
}

/// A simulator configuration small enough to enumerate.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance {
    pub config: SimConfig,
    pub max_draws: usize,
}

impl Default for TinyInstance {
    /// Energy-loss mode along a fixed direction; two interactions stop the
    /// particle and at most 14 steps are taken.
    fn default() -> Self {
        let config = SimConfig {
            mode: Mode::EnergyLoss,
            step_size: 0.25,
            e_init: 2.4,
            e_threshold: 0.5,
            eloss: 1.0,
            max_steps: 14,
            direction: Some(0.4),
            ..SimConfig::new(Mode::EnergyLoss)
        };
        Self { config, max_draws: DEFAULT_MAX_DRAWS }
    }
}

impl TinyInstance {
    /// Detector parameters that give the tiny track a few sizeable
    /// interaction probabilities.
    pub fn default_params() -> DetectorParams {
        DetectorParams { theta_r: Dual::seed(1.5), sharpness: 3.0, seg_freq: 2.0, r_max: 1.5 }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.config.direction.is_none() {
            return Err(Error::Config("tiny instances need a fixed initial direction".into()));
        }
        if self.config.max_steps > self.max_draws {
            return Err(Error::InstanceTooLarge { draws: self.config.max_steps, max: self.max_draws });
        }
        Ok(())
    }

    pub fn enumerate(&self, params: &DetectorParams) -> Result<Enumeration> {
        self.validate()?;
        let program = LossProgram::new(self.config.clone(), *params);
        enumerate(&program, params.theta_r, self.max_draws)
    }
}

/// Exact `d E[loss] / d theta_R` for a tiny instance.
pub fn exact_gradient(instance: &TinyInstance, params: &DetectorParams) -> Result<f64> {
    let params = params.with_theta(Dual::seed(params.theta_r.value));
    Ok(instance.enumerate(&params)?.expectation.tangent)
}

/// Exact `E[loss]` at a given inner radius.
pub fn exact_expectation(instance: &TinyInstance, params: &DetectorParams, theta: f64) -> Result<f64> {
    let params = params.with_theta(Dual::constant(theta));
    Ok(instance.enumerate(&params)?.expectation.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::{BernoulliChain, BernoulliIdentity, DependentBranch};

    #[test]
    fn single_bernoulli_gradient_is_one() {
        for theta in [0.2, 0.5, 0.8] {
            let e = enumerate(&BernoulliIdentity, Dual::seed(theta), 1).unwrap();
            assert_eq!(e.paths, 2);
            assert!((e.expectation.value - theta).abs() < 1e-15);
            assert!((e.expectation.tangent - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dependent_branch_gradient() {
        let theta = 0.3;
        let e = enumerate(&DependentBranch, Dual::seed(theta), 1).unwrap();
        assert!((e.expectation.tangent - DependentBranch::exact_gradient(theta)).abs() < 1e-14);
    }

    #[test]
    fn chain_enumerates_all_paths() {
        let chain = BernoulliChain { steps: 5 };
        let e = enumerate(&chain, Dual::seed(0.4), 5).unwrap();
        assert_eq!(e.paths, 32);
        assert!((e.total_probability - 1.0).abs() < 1e-12);
        assert!((e.expectation.tangent - chain.exact_gradient(0.4)).abs() < 1e-12);
    }

    #[test]
    fn budget_exceeded() {
        let chain = BernoulliChain { steps: 6 };
        let err = enumerate(&chain, Dual::seed(0.4), 5).unwrap_err();
        assert!(matches!(err, Error::InstanceTooLarge { .. }));
        let tiny = TinyInstance { max_draws: 10, ..TinyInstance::default() };
        assert!(matches!(tiny.validate(), Err(Error::InstanceTooLarge { .. })));
    }

    #[test]
    fn tiny_instance_is_normalised() {
        let tiny = TinyInstance::default();
        let e = tiny.enumerate(&TinyInstance::default_params()).unwrap();
        assert!((e.total_probability - 1.0).abs() < 1e-10);
        assert!(e.max_depth <= DEFAULT_MAX_DRAWS);
        assert!(e.paths > 14);
    }

    #[test]
    fn tiny_gradient_matches_finite_difference_of_expectation() {
        let tiny = TinyInstance::default();
        let params = TinyInstance::default_params();
        let h = 1e-6;
        let theta = params.theta_r.value;
        let fd = (exact_expectation(&tiny, &params, theta + h).unwrap()
            - exact_expectation(&tiny, &params, theta - h).unwrap())
            / (2.0 * h);
        let exact = exact_gradient(&tiny, &params).unwrap();
        assert!(exact.abs() > 1e-3);
        assert!(((exact - fd) / exact).abs() < 1e-6, "exact={exact} fd={fd}");
    }

    #[test]
    fn random_direction_cannot_be_enumerated() {
        let tiny = TinyInstance {
            config: SimConfig { direction: None, ..TinyInstance::default().config },
            ..TinyInstance::default()
        };
        assert!(tiny.enumerate(&TinyInstance::default_params()).is_err());
    }
}
