//! Frequency profile along the whole route, past the fault, as CSV.
//! Pipe into a plotting tool to see the plateau and the drop.

use cabletrace::sweep::{self, SweepPlan};
use cabletrace::world::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = load_scenario(include_str!("../fixtures/golden.toml"))?;
    let plan = SweepPlan {
        full: true,
        ..SweepPlan::new(0.05)
    };
    let records = sweep::sweep(&scenario, &plan)?;
    sweep::write_csv(std::io::stdout().lock(), &records)?;
    Ok(())
}
