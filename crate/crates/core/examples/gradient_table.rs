//! Mean and spread of the four estimators at an inner radius of 2.5 m in
//! both simulator modes, with the expected variance ordering checked.

use stochbranch::experiments::{grad_table, ordering_violations};
use stochbranch::estimators::{EstimatorOptions, Method};
use stochbranch::{DetectorParams, LossProgram, Mode, SimConfig};

fn main() -> stochbranch::Result<()> {
    for mode in [Mode::EnergyLoss, Mode::Shower] {
        let program = LossProgram::new(SimConfig::new(mode), DetectorParams::default());
        let rows = grad_table(&program, 2.5, 5000, &Method::ALL, 0, &EstimatorOptions::default())?;
        println!("{}", mode.as_str());
        for r in &rows {
            let s = r.stats;
            println!(
                "  {:<15} {:>9.4} ± {:>8.4}   quartiles {:>8.4} {:>8.4} {:>8.4}",
                r.method.as_str(),
                s.mean,
                s.std,
                s.q25,
                s.q50,
                s.q75
            );
        }
        let violations = ordering_violations(&rows);
        if violations.is_empty() {
            println!("  ordering holds");
        }
        for v in violations {
            println!("  violated: {v}");
        }
    }
    Ok(())
}
