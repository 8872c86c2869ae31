//! CD4069 hex-inverter astable detector.
//!
//! The oscillation period for timing resistor `R`, series resistor `Rs`,
//! timing capacitor `C`, supply `Vdd`, protection-diode drop `Vd` and
//! inverter threshold `Vt`, with `K = Rs / R`:
//!
//! ```text
//! T = RC·ln[(Vdd+Vd)² / (Vt(Vdd−Vt))]
//!   + RC·K/(1+K)·( ln[(K(Vdd+Vt) + (Vt−Vd)) / (K(Vdd+Vd))]
//!                + ln[(K(2Vdd−Vt) + (Vdd−Vt−Vd)) / (K(Vdd+Vd))] )
//! ```
//!
//! and `F = 1 / T`.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::emfield::FieldSample;

/// Supply range of the CD4069 (V).
pub const SUPPLY_RANGE_V: (f64, f64) = (3.0, 15.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    /// Timing resistor, Ω.
    pub r: f64,
    /// Series resistor, Ω.
    pub rs: f64,
    /// Timing capacitor, F.
    pub c: f64,
    /// Supply voltage.
    pub v_dd: f64,
    /// Input protection diode forward voltage.
    pub v_d: f64,
    /// Inverter switching threshold.
    pub v_t: f64,
}

impl OscillatorParams {
    /// 100 kΩ / 470 kΩ / 100 nF at 5 V: about 45.8 Hz, the detector tuning
    /// used against a 45 Hz line.
    pub const fn golden() -> Self {
        Self {
            r: 100e3,
            rs: 470e3,
            c: 100e-9,
            v_dd: 5.0,
            v_d: 0.7,
            v_t: 2.5,
        }
    }

    pub fn validate(&self) -> Result<(), OscillatorError> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(OscillatorError::Invariant(format!(
                    "{name} = {v} must be > 0"
                )))
            }
        };
        positive("r", self.r)?;
        positive("rs", self.rs)?;
        positive("c", self.c)?;
        let (lo, hi) = SUPPLY_RANGE_V;
        if !(lo..=hi).contains(&self.v_dd) {
            return Err(OscillatorError::Invariant(format!(
                "v_dd = {} V outside the IC supply range [{lo}, {hi}] V",
                self.v_dd
            )));
        }
        if !(self.v_t > 0.0 && self.v_t < self.v_dd) {
            return Err(OscillatorError::Invariant(format!(
                "v_t = {} V must satisfy 0 < v_t < v_dd = {} V",
                self.v_t, self.v_dd
            )));
        }
        if !(self.v_d >= 0.0 && self.v_d.is_finite()) {
            return Err(OscillatorError::Invariant(format!(
                "v_d = {} V must be >= 0",
                self.v_d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OscillatorError {
    #[error("oscillator parameter invariant violated: {0}")]
    Invariant(String),
    #[error("logarithm argument `{term}` = {value} is not positive")]
    Domain { term: &'static str, value: f64 },
}

fn ln_checked(term: &'static str, value: f64) -> Result<f64, OscillatorError> {
    if value > 0.0 {
        Ok(value.ln())
    } else {
        Err(OscillatorError::Domain { term, value })
    }
}

/// Oscillation period in seconds.
pub fn period(p: &OscillatorParams) -> Result<f64, OscillatorError> {
    p.validate()?;
    let OscillatorParams {
        r,
        rs,
        c,
        v_dd,
        v_d,
        v_t,
    } = *p;
    let k = rs / r;
    let rc = r * c;
    let head = ln_checked(
        "(Vdd+Vd)^2/(Vt(Vdd-Vt))",
        (v_dd + v_d) * (v_dd + v_d) / (v_t * (v_dd - v_t)),
    )?;
    let rise = ln_checked(
        "(K(Vdd+Vt)+(Vt-Vd))/(K(Vdd+Vd))",
        (k * (v_dd + v_t) + (v_t - v_d)) / (k * (v_dd + v_d)),
    )?;
    let fall = ln_checked(
        "(K(2Vdd-Vt)+(Vdd-Vt-Vd))/(K(Vdd+Vd))",
        (k * (2.0 * v_dd - v_t) + (v_dd - v_t - v_d)) / (k * (v_dd + v_d)),
    )?;
    let t = rc * head + rc * (k / (1.0 + k)) * (rise + fall);
    if t > 0.0 {
        Ok(t)
    } else {
        Err(OscillatorError::Invariant(format!(
            "computed period {t} s is not positive"
        )))
    }
}

/// Oscillation frequency in Hz, `1 / period`.
pub fn frequency(p: &OscillatorParams) -> Result<f64, OscillatorError> {
    Ok(1.0 / period(p)?)
}

/// Which accuracy guideline a warning refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guideline {
    /// Period long against IC propagation delay.
    PeriodVsDelay,
    /// C large against stray capacitance.
    CapacitanceFloor,
    /// R large enough for rail-to-rail swing.
    ResistanceFloor,
    /// Rs within 2–10 × R.
    SeriesResistorBand,
}

impl Guideline {
    pub fn number(self) -> u8 {
        match self {
            Guideline::PeriodVsDelay => 1,
            Guideline::CapacitanceFloor => 2,
            Guideline::ResistanceFloor => 3,
            Guideline::SeriesResistorBand => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityWarning {
    pub guideline: Guideline,
    pub message: String,
}

impl fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition {}: {}", self.guideline.number(), self.message)
    }
}

/// Thresholds behind [`validity_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityLimits {
    pub min_capacitance_f: f64,
    pub min_resistance_ohm: f64,
    pub ic_delay_s: f64,
    /// The period must exceed this many IC delays.
    pub delay_ratio: f64,
    pub series_band: (f64, f64),
}

impl Default for ValidityLimits {
    fn default() -> Self {
        Self {
            min_capacitance_f: 100e-12,
            min_resistance_ohm: 10e3,
            ic_delay_s: 60e-9,
            delay_ratio: 100.0,
            series_band: (2.0, 10.0),
        }
    }
}

/// Checks the component values against the guidelines under which the
/// period formula is accurate. Violations are reported, never rejected.
pub fn validity_report(p: &OscillatorParams) -> Vec<ValidityWarning> {
    validity_report_with(p, &ValidityLimits::default())
}

pub fn validity_report_with(p: &OscillatorParams, limits: &ValidityLimits) -> Vec<ValidityWarning> {
    let mut out = Vec::new();
    let min_period = limits.delay_ratio * limits.ic_delay_s;
    match period(p) {
        Ok(t) if t >= min_period => {}
        Ok(t) => out.push(ValidityWarning {
            guideline: Guideline::PeriodVsDelay,
            message: format!(
                "period {t:.3e} s is below {min_period:.3e} s ({} × IC delay)",
                limits.delay_ratio
            ),
        }),
        Err(e) => out.push(ValidityWarning {
            guideline: Guideline::PeriodVsDelay,
            message: format!("period undefined: {e}"),
        }),
    }
    if p.c < limits.min_capacitance_f {
        out.push(ValidityWarning {
            guideline: Guideline::CapacitanceFloor,
            message: format!(
                "C = {:.3e} F is not large against stray capacitance (floor {:.3e} F)",
                p.c, limits.min_capacitance_f
            ),
        });
    }
    if p.r < limits.min_resistance_ohm {
        out.push(ValidityWarning {
            guideline: Guideline::ResistanceFloor,
            message: format!(
                "R = {:.3e} Ω may load the inverter output (floor {:.3e} Ω)",
                p.r, limits.min_resistance_ohm
            ),
        });
    }
    let (lo, hi) = limits.series_band;
    let k = p.rs / p.r;
    if !(lo..=hi).contains(&k) {
        out.push(ValidityWarning {
            guideline: Guideline::SeriesResistorBand,
            message: format!("Rs/R = {k:.3} outside the suggested [{lo}, {hi}] band"),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectorReading {
    pub oscillating: bool,
    /// Hz; zero when not oscillating.
    pub measured_frequency: f64,
    pub led_on: bool,
}

impl DetectorReading {
    pub const SILENT: Self = Self {
        oscillating: false,
        measured_frequency: 0.0,
        led_on: false,
    };
}

/// Everything the detector needs besides the field: its tuning, pickup
/// threshold and how close the tuned and line frequencies must be.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub tuned: OscillatorParams,
    pub threshold_v: f64,
    /// Allowed |tuned − line| as a fraction of the line frequency.
    pub match_tolerance: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            tuned: OscillatorParams::golden(),
            threshold_v: 1e-4,
            match_tolerance: 0.15,
        }
    }
}

/// Evaluates the detector against one field sample.
///
/// The circuit oscillates when the induced voltage reaches `threshold_v` and
/// the tuned frequency matches the field's within `match_tolerance`. While
/// oscillating the reported frequency is the field frequency plus one
/// Gaussian draw of standard deviation `noise_sigma` from `rng`; a silent
/// detector draws nothing.
pub fn detect<R: Rng + ?Sized>(
    field: &FieldSample,
    threshold_v: f64,
    tuned: &OscillatorParams,
    match_tolerance: f64,
    noise_sigma: f64,
    rng: &mut R,
) -> DetectorReading {
    debug_assert!(threshold_v > 0.0);
    debug_assert!(match_tolerance > 0.0 && match_tolerance < 1.0);
    let Ok(tuned_hz) = frequency(tuned) else {
        return DetectorReading::SILENT;
    };
    let energized = field.induced_voltage >= threshold_v && field.frequency > 0.0;
    let matched = (tuned_hz - field.frequency).abs() <= match_tolerance * field.frequency;
    if !(energized && matched) {
        return DetectorReading::SILENT;
    }
    let noise = if noise_sigma > 0.0 {
        Normal::new(0.0, noise_sigma)
            .expect("finite sigma")
            .sample(rng)
    } else {
        0.0
    };
    DetectorReading {
        oscillating: true,
        measured_frequency: (field.frequency + noise).max(f64::MIN_POSITIVE),
        led_on: true,
    }
}

impl DetectorConfig {
    pub fn read<R: Rng + ?Sized>(
        &self,
        field: &FieldSample,
        noise_sigma: f64,
        rng: &mut R,
    ) -> DetectorReading {
        detect(
            field,
            self.threshold_v,
            &self.tuned,
            self.match_tolerance,
            noise_sigma,
            rng,
        )
    }
}
