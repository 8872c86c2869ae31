//! Cross-section of the magnetic field and probe voltage around the golden
//! cable, before and after the fault.

use cabletrace::emfield::field_at;
use cabletrace::oscillator::DetectorConfig;
use cabletrace::world::{load_scenario, Point};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = load_scenario(include_str!("../fixtures/golden.toml"))?;
    let threshold = DetectorConfig::default().threshold_v;
    println!("threshold {threshold:e} V");
    for x in [0.75, 1.75] {
        println!("x = {x} m");
        for y in [0.0, 0.05, 0.1, 0.2, 0.4, 0.8] {
            let f = field_at(&scenario, Point::new(x, y));
            let mark = if f.induced_voltage >= threshold {
                "detect"
            } else {
                "-"
            };
            println!(
                "  y={y:<5} B={:.3e} T  V={:.3e} V  {mark}",
                f.b_rms, f.induced_voltage
            );
        }
    }
    Ok(())
}
