//! `b ~ Bernoulli(theta)` has `d E[b] / d theta = 1`. Both the score
//! function and stochastic AD recover it; ordinary AD sees zero.

use stochbranch::estimators::{estimator_stats, pathwise_gradient, score_gradient, stochad_gradient, values, Batch};
use stochbranch::toy::BernoulliIdentity;

fn main() -> stochbranch::Result<()> {
    let batch = Batch::new(7, 100_000);
    println!("{:>6} {:>16} {:>16} {:>10}", "theta", "score", "stochad", "plain AD");
    for theta in [0.2, 0.5, 0.8] {
        let score = estimator_stats(&values(&score_gradient(&BernoulliIdentity, theta, batch, false)?))?;
        let ad = estimator_stats(&values(&stochad_gradient(&BernoulliIdentity, theta, batch, true)?))?;
        let plain = estimator_stats(&values(&pathwise_gradient(&BernoulliIdentity, theta, batch)?))?;
        println!(
            "{theta:>6.2} {:>8.4} ± {:.4} {:>8.4} ± {:.4} {:>10.4}",
            score.mean,
            score.sem(),
            ad.mean,
            ad.sem(),
            plain.mean
        );
    }
    Ok(())
}
