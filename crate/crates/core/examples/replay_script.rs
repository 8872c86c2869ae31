//! Headless replay of the teleoperation script; prints the first and last
//! telemetry frames and checks that a second run is byte-identical.

use cabletrace::protocol::KeyMap;
use cabletrace::sim::{parse_script, render_log, simulate, SimConfig};
use cabletrace::world::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = load_scenario(include_str!("../fixtures/golden.toml"))?;
    let script = parse_script(
        include_str!("../fixtures/teleop.script"),
        &KeyMap::default(),
    )?;

    let run = || render_log(&simulate(&scenario, &SimConfig::default(), &script, None));
    let log = run();
    let lines: Vec<&str> = log.lines().collect();
    println!("{} frames", lines.len());
    println!("first: {}", lines[0]);
    println!("last:  {}", lines[lines.len() - 1]);
    println!("deterministic: {}", log == run());
    Ok(())
}
