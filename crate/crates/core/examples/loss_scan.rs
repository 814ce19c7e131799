//! Expected loss and gradient estimates over the inner radius, with the
//! derivative of a polynomial fitted to the mean loss as a reference.

use stochbranch::estimators::{EstimatorOptions, Method};
use stochbranch::experiments::{scan, ScanSettings};
use stochbranch::{DetectorParams, LossProgram, Mode, SimConfig};

fn main() -> stochbranch::Result<()> {
    let program = LossProgram::new(SimConfig::new(Mode::Shower), DetectorParams::default());
    let settings = ScanSettings {
        grid: ScanSettings::linspace(0.5, 4.0, 15),
        n_per_point: 1000,
        methods: Method::ALL.to_vec(),
        poly_degree: 6,
        seed: 0,
    };
    let rows = scan(&program, &settings, &EstimatorOptions::default())?;
    print!("{:>6} {:>8} {:>9}", "theta", "loss", "poly'");
    for m in Method::ALL {
        print!(" {:>15}", m.as_str());
    }
    println!();
    for row in &rows {
        print!("{:>6.2} {:>8.4} {:>9.4}", row.theta, row.loss.mean, row.poly_fit_grad);
        for m in Method::ALL {
            print!(" {:>15.4}", row.method(m).map_or(f64::NAN, |s| s.mean));
        }
        println!();
    }
    let best = rows.iter().min_by(|a, b| a.loss.mean.total_cmp(&b.loss.mean)).expect("non-empty grid");
    println!("lowest mean loss {:.4} at theta {:.2}", best.loss.mean, best.theta);
    Ok(())
}
