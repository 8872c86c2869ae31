//! Period/frequency of the astable detector oscillator, plus a check of the
//! component guidelines the formula assumes.

use cabletrace::oscillator::{frequency, period, validity_report, OscillatorParams};

fn show(label: &str, p: &OscillatorParams) -> Result<(), Box<dyn std::error::Error>> {
    println!("{label}: R={:.0} Ω Rs={:.0} Ω C={:e} F", p.r, p.rs, p.c);
    println!("  T = {:.9e} s, F = {:.6} Hz", period(p)?, frequency(p)?);
    let warnings = validity_report(p);
    if warnings.is_empty() {
        println!("  all guidelines satisfied");
    }
    for w in warnings {
        println!("  warning: {w}");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = OscillatorParams::golden();
    show("reference", &reference)?;

    // retune for a 60 Hz line by scaling C (T is linear in C)
    let scale = frequency(&reference)? / 60.0;
    show(
        "60 Hz retune",
        &OscillatorParams {
            c: reference.c * scale,
            ..reference
        },
    )?;

    // a careless design: tiny C, Rs too close to R
    show(
        "careless",
        &OscillatorParams {
            rs: reference.r,
            c: 10e-12,
            ..reference
        },
    )?;
    Ok(())
}
