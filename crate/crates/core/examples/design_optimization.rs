//! Adam on the inner radius from 3 m with mini-batches of two showers,
//! ten replicas per estimator. Prints the median loss every 50 steps.

use stochbranch::estimators::{EstimatorOptions, Method};
use stochbranch::experiments::{optimize, summarize_runs, OptimizeSettings};
use stochbranch::{DetectorParams, LossProgram, Mode, SimConfig};

fn main() -> stochbranch::Result<()> {
    let program = LossProgram::new(SimConfig::new(Mode::Shower), DetectorParams::default());
    let settings = OptimizeSettings::default();
    for method in Method::ALL {
        let runs = optimize(&program, method, &settings, &EstimatorOptions::default())?;
        let summary = summarize_runs(&runs)?;
        let medians: Vec<String> = summary.iter().step_by(50).map(|s| format!("{:.3}", s.loss.median)).collect();
        let mut finals: Vec<f64> = runs.iter().map(|r| *r.theta_trace.last().expect("non-empty trace")).collect();
        finals.sort_by(f64::total_cmp);
        println!("{:<15} median loss {}", method.as_str(), medians.join(" "));
        println!("{:<15} final theta {:.2} .. {:.2}", "", finals[0], finals[finals.len() - 1]);
    }
    Ok(())
}
