//! Step the simulation by hand: drive forward along the cable and watch the
//! LED go out once the probe passes the open fault.

use cabletrace::robot::DriveCommand;
use cabletrace::sim::{SimConfig, Simulation};
use cabletrace::world::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = load_scenario(include_str!("../fixtures/golden.toml"))?;
    let mut sim = Simulation::new(scenario, SimConfig::default());
    sim.latch(DriveCommand::Forward);
    let mut led = None;
    while sim.probe().x < 2.0 {
        let f = sim.tick();
        if led != Some(f.led) {
            println!(
                "t={:.1}s probe x={:.2} m led={} freq={:.2} Hz",
                f.t,
                sim.probe().x,
                f.led,
                f.freq
            );
            led = Some(f.led);
        }
    }
    Ok(())
}
