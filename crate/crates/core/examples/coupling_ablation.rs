//! Stochastic AD with and without reusing the primal's uniforms in the
//! alternative run. Both are unbiased; coupling lowers the variance.

use stochbranch::estimators::{estimator_stats, stochad_gradient, values, Batch};
use stochbranch::{DetectorParams, LossProgram, Mode, SimConfig};

fn main() -> stochbranch::Result<()> {
    let program = LossProgram::new(SimConfig::new(Mode::Shower), DetectorParams::default());
    let batch = Batch::new(0, 5000);
    let coupled = estimator_stats(&values(&stochad_gradient(&program, 2.5, batch, true)?))?;
    let independent = estimator_stats(&values(&stochad_gradient(&program, 2.5, batch, false)?))?;
    println!("coupled      {:>8.4} ± {:.4}  (std {:.3})", coupled.mean, coupled.sem(), coupled.std);
    println!("independent  {:>8.4} ± {:.4}  (std {:.3})", independent.mean, independent.sem(), independent.std);
    println!("variance ratio {:.2}", (independent.std / coupled.std).powi(2));
    Ok(())
}
