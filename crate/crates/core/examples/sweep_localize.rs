//! Sweep the golden scenario and localize the open fault.
//!
//! `cargo run --example sweep_localize [step_m]`

use cabletrace::sweep::{self, localize, SweepPlan};
use cabletrace::world::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let step: f64 = std::env::args().nth(1).map_or(Ok(0.5), |s| s.parse())?;
    let scenario = load_scenario(include_str!("../fixtures/golden.toml"))?;

    let records = sweep::sweep(&scenario, &SweepPlan::new(step))?;
    println!("{:>10} {:>14}  fault", "distance_m", "frequency_hz");
    for r in &records {
        println!(
            "{:>10.3} {:>14.6}  {}",
            r.distance,
            r.frequency,
            if r.fault { "Yes" } else { "No" }
        );
    }
    println!("{}", localize(&records)?);
    if let Some(truth) = scenario.fault {
        println!("true fault: {} at {:.3} m", truth.kind, truth.position);
    }
    Ok(())
}
