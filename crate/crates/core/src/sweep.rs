//! Tracer-method sweep: walk the robot along the cable, stop every `step`
//! metres, read the detector and localize the first dead stretch.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::oscillator::OscillatorParams;
use crate::robot::{normalize_angle, DriveCommand};
use crate::sim::{SimConfig, Simulation};
use crate::world::{CableRoute, WorldScenario};

pub const DEFAULT_DEAD_FRACTION: f64 = 0.1;
pub const DEFAULT_STEP_M: f64 = 0.5;

/// Tolerance for arc-length and angle bookkeeping while driving.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    /// Route arc length of the sample, m.
    pub distance: f64,
    /// Measured frequency, Hz (0 when the detector is silent).
    pub frequency: f64,
    pub fault: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultInterval {
    pub low: f64,
    pub high: f64,
}

impl FaultInterval {
    pub fn midpoint(&self) -> f64 {
        (self.low + self.high) / 2.0
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, s: f64) -> bool {
        (self.low..=self.high).contains(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultReport {
    /// `None` when every record was healthy.
    pub interval: Option<FaultInterval>,
}

impl FaultReport {
    pub fn found(&self) -> bool {
        self.interval.is_some()
    }

    pub fn midpoint(&self) -> Option<f64> {
        self.interval.map(|i| i.midpoint())
    }
}

impl fmt::Display for FaultReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.interval {
            Some(i) => write!(
                f,
                "fault found: interval [{:.3}, {:.3}] m, midpoint {:.3} m",
                i.low,
                i.high,
                i.midpoint()
            ),
            None => f.write_str("no fault found"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("sweep step {step} m must lie in (0, {length}] m")]
    StepOutOfRange { step: f64, length: f64 },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid robot parameters: {0}")]
    Robot(String),
    #[error("no sweep records to localize")]
    Empty,
    #[error("sweep records must be non-decreasing in distance (record {index})")]
    Unordered { index: usize },
}

/// `true` when `frequency` has dropped below `dead_fraction` of `expected`.
pub fn classify(frequency: f64, expected: f64, dead_fraction: f64) -> bool {
    debug_assert!(expected > 0.0);
    debug_assert!(dead_fraction > 0.0 && dead_fraction < 1.0);
    frequency < dead_fraction * expected
}

/// Sweep settings beyond the scenario itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPlan {
    pub step: f64,
    /// Keep going to the route end after the first fault record.
    pub full: bool,
    pub config: SimConfig,
}

impl SweepPlan {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            full: false,
            config: SimConfig::default(),
        }
    }
}

/// Sweeps `scenario` every `step` metres with the given detector tuning and
/// pickup threshold, halting at the first fault record.
pub fn run_sweep(
    scenario: &WorldScenario,
    step: f64,
    tuned: OscillatorParams,
    threshold_v: f64,
) -> Result<Vec<SweepRecord>, SweepError> {
    let mut plan = SweepPlan::new(step);
    plan.config.detector.tuned = tuned;
    plan.config.detector.threshold_v = threshold_v;
    sweep(scenario, &plan)
}

/// Sample arc lengths: `step, 2·step, …`, plus the route end when the step
/// does not divide the route.
fn stops(length: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 1u64;
    loop {
        let s = k as f64 * step;
        if s > length + EPS {
            break;
        }
        out.push(s.min(length));
        k += 1;
    }
    if out.last().is_none_or(|&s| s < length - EPS) {
        out.push(length);
    }
    out
}

/// Drives the chassis along the route with drive commands only.
///
/// The chassis centre follows the route trailing the probe by the probe
/// offset, so at a stop the probe tip sits over the sample point. Before
/// the first waypoint the centre runs on the backward extension of the
/// first segment. At a corner the robot stops and spins in place onto the
/// next segment; a sample taken within one probe offset past a corner is
/// read with the probe still pointing along the previous segment.
struct RouteDriver<'a> {
    sim: &'a mut Simulation,
    route: CableRoute,
    /// Arc length of the chassis centre, may start negative.
    centre: f64,
}

impl RouteDriver<'_> {
    fn turn_to(&mut self, heading: f64) {
        let params = self.sim.config().robot;
        let delta = normalize_angle(heading - self.sim.pose().heading);
        if delta.abs() <= EPS {
            return;
        }
        let cmd = if delta > 0.0 {
            DriveCommand::Left
        } else {
            DriveCommand::Right
        };
        let full = (delta.abs() / params.sweep_angle()).floor();
        for _ in 0..full as u64 {
            self.sim.drive(cmd, params.tick);
        }
        let rest = delta.abs() - full * params.sweep_angle();
        if rest > EPS {
            self.sim.drive(cmd, rest / params.turn_rate);
        }
    }

    fn forward(&mut self, distance: f64) {
        let params = self.sim.config().robot;
        let full = (distance / params.stride()).floor();
        for _ in 0..full as u64 {
            self.sim.drive(DriveCommand::Forward, params.tick);
        }
        let rest = distance - full * params.stride();
        if rest > EPS {
            self.sim.drive(DriveCommand::Forward, rest / params.speed);
        }
    }

    fn drive_to(&mut self, target: f64) {
        while self.centre < target - EPS {
            let route = &self.route;
            let seg = if self.centre < 0.0 {
                0
            } else {
                route.cumulative()[1..]
                    .iter()
                    .position(|&end| end > self.centre + EPS)
                    .unwrap_or(route.segment_count() - 1)
            };
            let (ux, uy) = route.direction(seg);
            let leg_end = target.min(route.cumulative()[seg + 1]);
            self.turn_to(uy.atan2(ux));
            self.forward(leg_end - self.centre);
            self.centre = leg_end;
        }
        self.sim.drive(DriveCommand::Stop, 0.0);
    }
}

/// Runs a sweep per `plan`.
pub fn sweep(scenario: &WorldScenario, plan: &SweepPlan) -> Result<Vec<SweepRecord>, SweepError> {
    scenario
        .validate()
        .map_err(|e| SweepError::Scenario(e.to_string()))?;
    plan.config.robot.validate().map_err(SweepError::Robot)?;
    let length = scenario.route.length();
    if !(plan.step > 0.0 && plan.step <= length) {
        return Err(SweepError::StepOutOfRange {
            step: plan.step,
            length,
        });
    }
    let offset = plan.config.robot.probe_offset;
    let mut sim = Simulation::new(scenario.clone(), plan.config);
    let mut driver = RouteDriver {
        sim: &mut sim,
        route: scenario.route.clone(),
        centre: -offset,
    };
    let mut records = Vec::new();
    for s in stops(length, plan.step) {
        driver.drive_to(s - offset);
        let (_, reading) = driver.sim.read();
        let fault = classify(
            reading.measured_frequency,
            scenario.line_frequency,
            plan.config.dead_fraction,
        );
        records.push(SweepRecord {
            distance: s,
            frequency: reading.measured_frequency,
            fault,
        });
        if fault && !plan.full {
            break;
        }
    }
    Ok(records)
}

/// Brackets the first fault record against the healthy record before it.
pub fn localize(records: &[SweepRecord]) -> Result<FaultReport, SweepError> {
    if records.is_empty() {
        return Err(SweepError::Empty);
    }
    if let Some(i) = records
        .windows(2)
        .position(|w| w[1].distance < w[0].distance)
    {
        return Err(SweepError::Unordered { index: i + 1 });
    }
    let Some(first) = records.iter().position(|r| r.fault) else {
        return Ok(FaultReport { interval: None });
    };
    let high = records[first].distance;
    let low = records[..first]
        .iter()
        .rev()
        .find(|r| r.distance < high)
        .map_or(0.0, |r| r.distance);
    Ok(FaultReport {
        interval: Some(FaultInterval { low, high }),
    })
}

pub const CSV_HEADER: &str = "distance_m,frequency_hz,fault";

/// Writes records as `distance_m,frequency_hz,fault` CSV with `Yes`/`No`
/// fault flags.
pub fn write_csv<W: Write>(mut out: W, records: &[SweepRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{:.6},{:.6},{}",
            r.distance,
            r.frequency,
            if r.fault { "Yes" } else { "No" }
        )?;
    }
    Ok(())
}
