//! Monte Carlo gradient estimators for stochastic programs: finite
//! differences, the score function with and without a mini-batch mean
//! baseline, and stochastic AD with a pruned, coupled alternative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::program::{run_paired, Sampler, StochasticProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Numeric,
    Score,
    ScoreBaseline,
    StochAd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Numeric, Method::Score, Method::ScoreBaseline, Method::StochAd];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Numeric => "numeric",
            Method::Score => "score",
            Method::ScoreBaseline => "score-baseline",
            Method::StochAd => "stochad",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(Method::Numeric),
            "score" => Ok(Method::Score),
            "score-baseline" => Ok(Method::ScoreBaseline),
            "stochad" => Ok(Method::StochAd),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Finite-difference step.
    pub fd_eps: f64,
    /// Central instead of forward differences.
    pub central: bool,
    /// Evaluate both finite-difference points on the same random stream.
    pub common_seed: bool,
    /// FIFO reuse of primal uniforms in the alternative.
    pub coupling: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { fd_eps: 0.01, central: false, common_seed: false, coupling: true }
    }
}

/// Events `first_event .. first_event + n` of stream family `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Batch {
    pub seed: u64,
    pub first_event: u64,
    pub n: usize,
}

impl Batch {
    pub fn new(seed: u64, n: usize) -> Self {
        Self { seed, first_event: 0, n }
    }

    fn events(&self) -> impl IndexedParallelIterator<Item = u64> {
        let first = self.first_event;
        (0..self.n).into_par_iter().map(move |i| first + i as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SampleAux {
    Numeric { base: f64, shifted: f64 },
    Score { score: f64, output: f64 },
    StochAd {
        output: f64,
        alternative: Option<f64>,
        pruned_weight: Option<f64>,
        coupled_fraction: Option<f64>,
        candidates: usize,
    },
    Pathwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub value: f64,
    pub method: Method,
    pub aux: SampleAux,
}

fn evaluate<P: StochasticProgram + ?Sized>(program: &P, theta: Dual, seed: u64, event: u64) -> Result<(Dual, f64)> {
    let mut sampler = Sampler::primal(seed, event, false);
    let out = program.run(theta, &mut sampler)?;
    Ok((out, sampler.score()))
}

/// Program outputs at `theta` for every event of the batch.
pub fn outputs<P: StochasticProgram + ?Sized>(program: &P, theta: f64, batch: Batch) -> Result<Vec<f64>> {
    batch
        .events()
        .map(|e| evaluate(program, Dual::constant(theta), batch.seed, e).map(|(out, _)| out.value))
        .collect()
}

/// Finite differences on independent random streams (unless
/// `common_seed`): forward `(f(t+h) - f(t)) / h` or central
/// `(f(t+h) - f(t-h)) / 2h`.
pub fn numeric_gradient<P: StochasticProgram + ?Sized>(
    program: &P,
    theta: f64,
    batch: Batch,
    opts: &EstimatorOptions,
) -> Result<Vec<GradientSample>> {
    if !(opts.fd_eps > 0.0) {
        return Err(Error::Config(format!("fd_eps must be positive, got {}", opts.fd_eps)));
    }
    let h = opts.fd_eps;
    let (lo, span) = if opts.central { (theta - h, 2.0 * h) } else { (theta, h) };
    batch
        .events()
        .map(|e| {
            let (lo_event, hi_event) = if opts.common_seed { (e, e) } else { (2 * e, 2 * e + 1) };
            let (base, _) = evaluate(program, Dual::constant(lo), batch.seed, lo_event)?;
            let (shifted, _) = evaluate(program, Dual::constant(theta + h), batch.seed, hi_event)?;
            Ok(GradientSample {
                value: (shifted.value - base.value) / span,
                method: Method::Numeric,
                aux: SampleAux::Numeric { base: base.value, shifted: shifted.value },
            })
        })
        .collect()
}

/// Score-function (REINFORCE) estimator, `delta + score * (f - B)`, with
/// `B` the batch mean of `f` when `use_baseline`, else zero.
pub fn score_gradient<P: StochasticProgram + ?Sized>(
    program: &P,
    theta: f64,
    batch: Batch,
    use_baseline: bool,
) -> Result<Vec<GradientSample>> {
    if use_baseline && batch.n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: batch.n });
    }
    let runs: Vec<(Dual, f64)> = batch
        .events()
        .map(|e| evaluate(program, Dual::seed(theta), batch.seed, e))
        .collect::<Result<_>>()?;
    let baseline = if use_baseline {
        runs.iter().map(|(out, _)| out.value).sum::<f64>() / runs.len() as f64
    } else {
        0.0
    };
    let method = if use_baseline { Method::ScoreBaseline } else { Method::Score };
    Ok(runs
        .into_iter()
        .map(|(out, score)| GradientSample {
            value: out.tangent + score * (out.value - baseline),
            method,
            aux: SampleAux::Score { score, output: out.value },
        })
        .collect())
}

/// Stochastic AD: `delta + W * (f(alt) - f(primal))` from one pruned,
/// optionally coupled, alternative per event.
pub fn stochad_gradient<P: StochasticProgram + ?Sized>(
    program: &P,
    theta: f64,
    batch: Batch,
    coupling: bool,
) -> Result<Vec<GradientSample>> {
    batch
        .events()
        .map(|e| {
            let run = run_paired(program, theta, batch.seed, e, coupling)?;
            let alt = run.alternative.as_ref();
            Ok(GradientSample {
                value: run.estimate(),
                method: Method::StochAd,
                aux: SampleAux::StochAd {
                    output: run.primal.value,
                    alternative: alt.map(|a| a.output.value),
                    pruned_weight: alt.map(|a| a.pruned_weight),
                    coupled_fraction: alt.and_then(|a| a.coupled_fraction),
                    candidates: run.candidates,
                },
            })
        })
        .collect()
}

/// Ordinary forward-mode AD through the program, ignoring how the discrete
/// draws depend on theta. Biased whenever they do.
pub fn pathwise_gradient<P: StochasticProgram + ?Sized>(
    program: &P,
    theta: f64,
    batch: Batch,
) -> Result<Vec<GradientSample>> {
    batch
        .events()
        .map(|e| {
            let (out, _) = evaluate(program, Dual::seed(theta), batch.seed, e)?;
            Ok(GradientSample { value: out.tangent, method: Method::Numeric, aux: SampleAux::Pathwise })
        })
        .collect()
}

/// Dispatches to the estimator for `method`.
pub fn estimate<P: StochasticProgram + ?Sized>(
    method: Method,
    program: &P,
    theta: f64,
    batch: Batch,
    opts: &EstimatorOptions,
) -> Result<Vec<GradientSample>> {
    match method {
        Method::Numeric => numeric_gradient(program, theta, batch, opts),
        Method::Score => score_gradient(program, theta, batch, false),
        Method::ScoreBaseline => score_gradient(program, theta, batch, true),
        Method::StochAd => stochad_gradient(program, theta, batch, opts.coupling),
    }
}

pub fn values(samples: &[GradientSample]) -> Vec<f64> {
    samples.iter().map(|s| s.value).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub mean: f64,
    pub std: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub n: usize,
}

impl EstimatorStats {
    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

/// Linear-interpolation quantile of sorted data (position `(n-1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, unbiased standard deviation and quartiles.
pub fn estimator_stats(samples: &[f64]) -> Result<EstimatorStats> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EstimatorStats {
        mean,
        std: var.sqrt(),
        q25: quantile_sorted(&sorted, 0.25),
        q50: quantile_sorted(&sorted, 0.5),
        q75: quantile_sorted(&sorted, 0.75),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::{BernoulliIdentity, FixedBranch};

    /// Deterministic `f(theta) = theta^2`.
    struct Square;

    impl StochasticProgram for Square {
        fn run(&self, theta: Dual, _: &mut Sampler) -> Result<Dual> {
            Ok(theta * theta)
        }
    }

    #[test]
    fn forward_difference_of_square() {
        let opts = EstimatorOptions { fd_eps: 1e-3, ..Default::default() };
        let samples = numeric_gradient(&Square, 1.0, Batch::new(0, 4), &opts).unwrap();
        for s in samples {
            assert!((s.value - 2.001).abs() < 1e-9, "{}", s.value);
        }
        let central = EstimatorOptions { central: true, ..opts };
        for s in numeric_gradient(&Square, 1.0, Batch::new(0, 4), &central).unwrap() {
            assert!((s.value - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stats_examples() {
        let s = estimator_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std), (2.0, 1.0));
        let c = estimator_stats(&[4.25; 10]).unwrap();
        assert_eq!(c.std, 0.0);
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = estimator_stats(&xs).unwrap();
        assert!((q.q25 - 25.75).abs() < 1e-12);
        assert!((q.q50 - 50.5).abs() < 1e-12);
        assert!((q.q75 - 75.25).abs() < 1e-12);
        assert!(matches!(
            estimator_stats(&[1.0]),
            Err(Error::InsufficientSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn parameter_free_randomness_gives_zero_discrete_terms() {
        // FixedBranch: the only theta dependence is smooth.
        let batch = Batch::new(3, 200);
        for s in score_gradient(&FixedBranch, 0.7, batch, false).unwrap() {
            assert_eq!(s.value, crate::toy::smooth_term_derivative(0.7));
        }
        for s in stochad_gradient(&FixedBranch, 0.7, batch, true).unwrap() {
            assert_eq!(s.value, crate::toy::smooth_term_derivative(0.7));
        }
    }

    #[test]
    fn stochad_single_bernoulli_per_sample_values() {
        let p = 0.3;
        for s in stochad_gradient(&BernoulliIdentity, p, Batch::new(1, 1000), true).unwrap() {
            let SampleAux::StochAd { output, .. } = s.aux else { unreachable!() };
            if output == 0.0 {
                assert!((s.value - 1.0 / (1.0 - p)).abs() < 1e-12);
            } else {
                assert_eq!(s.value, 0.0);
            }
        }
    }

    #[test]
    fn baseline_needs_two_samples() {
        assert!(score_gradient(&BernoulliIdentity, 0.5, Batch::new(0, 1), true).is_err());
    }

    #[test]
    fn estimators_are_deterministic() {
        let opts = EstimatorOptions::default();
        for m in Method::ALL {
            let a = estimate(m, &BernoulliIdentity, 0.4, Batch::new(9, 300), &opts).unwrap();
            let b = estimate(m, &BernoulliIdentity, 0.4, Batch::new(9, 300), &opts).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}
