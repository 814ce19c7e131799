//! Exact gradient of a tiny detector instance by enumerating every outcome
//! path, compared with the Monte Carlo estimators.

use stochbranch::estimators::{estimate, estimator_stats, values, Batch, EstimatorOptions, Method};
use stochbranch::oracle::{exact_gradient, TinyInstance};
use stochbranch::LossProgram;

fn main() -> stochbranch::Result<()> {
    let inst = TinyInstance::default();
    let params = TinyInstance::default_params();
    let theta = params.theta_r.value;
    let paths = inst.enumerate(&params)?;
    let exact = exact_gradient(&inst, &params)?;
    println!(
        "{} paths, total probability {:.12}, E[loss] {:.5}, d/dtheta {exact:.5}",
        paths.paths, paths.total_probability, paths.expectation.value
    );
    let program = LossProgram::new(inst.config.clone(), params);
    let batch = Batch::new(3, 100_000);
    for method in Method::ALL {
        let s = estimator_stats(&values(&estimate(method, &program, theta, batch, &EstimatorOptions::default())?))?;
        let z = (s.mean - exact) / s.sem();
        println!("{:<15} {:>9.4} ± {:.4}  z = {z:+.2}", method.as_str(), s.mean, s.sem());
    }
    Ok(())
}
