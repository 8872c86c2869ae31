//! Build a scenario in code (L-shaped route, short fault), print its TOML,
//! reload it, and sweep it.

use cabletrace::sweep::{self, localize, SweepPlan};
use cabletrace::world::{load_scenario, CableRoute, FaultKind, FaultSpec, Point, WorldScenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let route = CableRoute::new(
        vec![
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 2.0),
        ],
        0.1,
    )?;
    let scenario = WorldScenario::new(
        route,
        2.0,
        230.0,
        50.0,
        Some(FaultSpec {
            kind: FaultKind::Short,
            position: 3.8,
        }),
        7,
        0.5,
    )?;

    let text = scenario.to_toml();
    println!("{text}");
    let reloaded = load_scenario(&text)?;
    assert_eq!(reloaded, scenario);

    let records = sweep::sweep(&reloaded, &SweepPlan::new(0.25))?;
    for r in &records {
        println!(
            "{:.2} m  {:.3} Hz  {}",
            r.distance,
            r.frequency,
            if r.fault { "fault" } else { "ok" }
        );
    }
    println!("{}", localize(&records)?);
    Ok(())
}
