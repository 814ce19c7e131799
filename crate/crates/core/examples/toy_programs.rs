//! Two-branch programs `g(theta) + b`. When the draw does not depend on
//! theta every estimator agrees with ordinary AD; when it does, ordinary AD
//! misses the `h'(theta)` term and the four estimators recover it.

use stochbranch::estimators::{estimate, estimator_stats, pathwise_gradient, values, Batch, EstimatorOptions, Method};
use stochbranch::program::StochasticProgram;
use stochbranch::toy::{smooth_term_derivative, DependentBranch, FixedBranch};

fn report(name: &str, program: &dyn StochasticProgram, theta: f64, truth: f64) -> stochbranch::Result<()> {
    let batch = Batch::new(1, 50_000);
    println!("{name} at theta = {theta}: exact {truth:.4}");
    let plain = estimator_stats(&values(&pathwise_gradient(program, theta, batch)?))?;
    println!("  {:<15} {:>8.4}", "plain AD", plain.mean);
    for method in Method::ALL {
        let s = estimator_stats(&values(&estimate(method, program, theta, batch, &EstimatorOptions::default())?))?;
        println!("  {:<15} {:>8.4} ± {:.4}", method.as_str(), s.mean, s.sem());
    }
    Ok(())
}

fn main() -> stochbranch::Result<()> {
    let theta = 0.3;
    report("fixed branch", &FixedBranch, theta, smooth_term_derivative(theta))?;
    report("dependent branch", &DependentBranch, theta, DependentBranch::exact_gradient(theta))
}
