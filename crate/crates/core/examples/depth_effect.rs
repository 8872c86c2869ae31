//! Lateral detection range against burial depth.

use cabletrace::emfield::detection_range;
use cabletrace::oscillator::DetectorConfig;
use cabletrace::world::{load_scenario, CableRoute, WorldScenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = load_scenario(include_str!("../fixtures/golden.toml"))?;
    let threshold = DetectorConfig::default().threshold_v;
    for current in [1.0, 10.0] {
        println!("line current {current} A");
        for depth in [0.05, 0.1, 0.3, 0.635, 1.0] {
            let route = CableRoute::new(base.route.waypoints().to_vec(), depth)?;
            let s = WorldScenario {
                route,
                line_current: current,
                ..base.clone()
            };
            println!(
                "  depth {depth:>5} m -> range {:.3} m",
                detection_range(&s, threshold)
            );
        }
    }
    Ok(())
}
