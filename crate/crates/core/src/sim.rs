//! The fixed-step simulation loop shared by the headless replay, the sweep
//! engine and the protocol server.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::emfield::{FieldModel, FieldSample};
use crate::oscillator::{DetectorConfig, DetectorReading};
use crate::protocol::{encode_telemetry, KeyMap, TelemetryFrame};
use crate::robot::{self, DriveCommand, RobotParams, RobotPose};
use crate::sweep::{classify, DEFAULT_DEAD_FRACTION};
use crate::world::{Point, WorldScenario};

/// Robot, detector and field-model settings for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub robot: RobotParams,
    pub detector: DetectorConfig,
    pub field: FieldModel,
    /// Readings below this fraction of the line frequency count as a fault.
    pub dead_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            robot: RobotParams::default(),
            detector: DetectorConfig::default(),
            field: FieldModel::default(),
            dead_fraction: DEFAULT_DEAD_FRACTION,
        }
    }
}

/// Chassis pose that puts the probe tip on the first waypoint, facing
/// along the first segment.
pub fn start_pose(scenario: &WorldScenario, params: &RobotParams) -> RobotPose {
    let origin = scenario.route.waypoints()[0];
    let (ux, uy) = scenario.route.direction(0);
    RobotPose::new(
        origin.x - params.probe_offset * ux,
        origin.y - params.probe_offset * uy,
        uy.atan2(ux),
    )
}

#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: WorldScenario,
    config: SimConfig,
    pose: RobotPose,
    command: DriveCommand,
    rng: ChaCha8Rng,
    ticks: u64,
}

impl Simulation {
    pub fn new(scenario: WorldScenario, config: SimConfig) -> Self {
        let pose = start_pose(&scenario, &config.robot);
        let rng = ChaCha8Rng::seed_from_u64(scenario.noise_seed);
        Self {
            scenario,
            config,
            pose,
            command: DriveCommand::Stop,
            rng,
            ticks: 0,
        }
    }

    pub fn scenario(&self) -> &WorldScenario {
        &self.scenario
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn pose(&self) -> RobotPose {
        self.pose
    }

    pub fn command(&self) -> DriveCommand {
        self.command
    }

    /// Seconds of simulated time elapsed through [`Simulation::tick`].
    pub fn time(&self) -> f64 {
        self.ticks as f64 * self.config.robot.tick
    }

    /// Latches `cmd`; it stays in force until the next call.
    pub fn latch(&mut self, cmd: DriveCommand) {
        self.command = cmd;
    }

    /// Moves the robot under `cmd` for `dt` seconds without sampling the
    /// detector or advancing the tick clock.
    pub fn drive(&mut self, cmd: DriveCommand, dt: f64) {
        self.pose = robot::advance(self.pose, cmd, &self.config.robot, dt);
    }

    pub fn probe(&self) -> Point {
        robot::probe_position(&self.pose, &self.config.robot)
    }

    pub fn field(&self) -> FieldSample {
        self.config.field.field_at(&self.scenario, self.probe())
    }

    /// Samples the detector at the current probe position. Draws from the
    /// noise stream only when the detector oscillates.
    pub fn read(&mut self) -> (FieldSample, DetectorReading) {
        let field = self.field();
        let reading = self
            .config
            .detector
            .read(&field, self.scenario.noise_sigma, &mut self.rng);
        (field, reading)
    }

    /// One fixed step under the latched command, returning its telemetry.
    pub fn tick(&mut self) -> TelemetryFrame {
        self.pose = robot::step(self.pose, self.command, &self.config.robot);
        self.ticks += 1;
        let (_, reading) = self.read();
        TelemetryFrame {
            t: self.time(),
            x: self.pose.x,
            y: self.pose.y,
            heading: self.pose.heading,
            freq: reading.measured_frequency,
            led: reading.led_on,
            fault: classify(
                reading.measured_frequency,
                self.scenario.line_frequency,
                self.config.dead_fraction,
            ),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScriptError {
    #[error("script line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("script line {line}: time {t} s goes backwards (previous {previous} s)")]
    Backwards { line: usize, t: f64, previous: f64 },
}

/// A timestamped drive command from a replay script.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptEntry {
    pub t: f64,
    pub command: DriveCommand,
}

/// Parses `<t_seconds> <command_char>` lines. Blank lines and `#` comments
/// are skipped; times must be non-decreasing.
pub fn parse_script(text: &str, keymap: &KeyMap) -> Result<Vec<ScriptEntry>, ScriptError> {
    let mut out: Vec<ScriptEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let malformed = |reason: &str| ScriptError::Malformed {
            line,
            reason: reason.to_owned(),
        };
        let mut parts = body.split_whitespace();
        let (Some(t), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(malformed("expected `<t_seconds> <command_char>`"));
        };
        let t: f64 = t.parse().map_err(|_| malformed("time is not a number"))?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(malformed("time must be finite and >= 0"));
        }
        let mut chars = c.chars();
        let (Some(ch), None) = (chars.next(), chars.next()) else {
            return Err(malformed("command must be a single character"));
        };
        let command = keymap
            .command(ch)
            .ok_or_else(|| malformed(&format!("character {ch:?} is not in the keymap")))?;
        if let Some(prev) = out.last() {
            if t < prev.t {
                return Err(ScriptError::Backwards {
                    line,
                    t,
                    previous: prev.t,
                });
            }
        }
        out.push(ScriptEntry { t, command });
    }
    Ok(out)
}

/// Extra simulated time after the last scripted command when no explicit
/// duration is given.
pub const DEFAULT_TAIL_S: f64 = 1.0;

/// Replays `script` headlessly and returns one frame per tick.
///
/// A command stamped `t` is latched before the tick that starts at or after
/// `t`. Without `duration`, the run ends [`DEFAULT_TAIL_S`] after the last
/// command.
pub fn simulate(
    scenario: &WorldScenario,
    config: &SimConfig,
    script: &[ScriptEntry],
    duration: Option<f64>,
) -> Vec<TelemetryFrame> {
    const EPS: f64 = 1e-9;
    let tick = config.robot.tick;
    let duration = duration.unwrap_or_else(|| script.last().map_or(0.0, |e| e.t) + DEFAULT_TAIL_S);
    let n = ((duration / tick) - EPS).ceil().max(0.0) as u64;
    let mut sim = Simulation::new(scenario.clone(), *config);
    let mut pending = script.iter().peekable();
    let mut frames = Vec::with_capacity(n as usize);
    for k in 0..n {
        let start = k as f64 * tick;
        while let Some(e) = pending.next_if(|e| e.t <= start + EPS) {
            sim.latch(e.command);
        }
        frames.push(sim.tick());
    }
    frames
}

/// Telemetry log text: one encoded frame per line.
pub fn render_log(frames: &[TelemetryFrame]) -> String {
    let mut out = String::with_capacity(frames.len() * 64);
    for f in frames {
        out.push_str(&encode_telemetry(f));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{CableRoute, FaultKind, FaultSpec};

    fn scenario() -> WorldScenario {
        WorldScenario::new(
            CableRoute::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0)], 0.05).unwrap(),
            1.0,
            230.0,
            45.0,
            Some(FaultSpec {
                kind: FaultKind::Open,
                position: 1.5,
            }),
            4,
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn start_pose_puts_probe_on_first_waypoint() {
        let s = scenario();
        let sim = Simulation::new(s, SimConfig::default());
        assert!(sim.probe().distance(Point::new(0.0, 0.0)) < 1e-15);
        assert_eq!(sim.pose().heading, 0.0);
    }

    #[test]
    fn script_parsing() {
        let km = KeyMap::default();
        let entries = parse_script("# teleop\n0.0 F\n\n1.5 L  # turn\n1.5 S\n", &km).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(
            entries[1],
            ScriptEntry {
                t: 1.5,
                command: DriveCommand::Left
            }
        );
        assert_eq!(
            parse_script("1.0 F\n0.5 S\n", &km),
            Err(ScriptError::Backwards {
                line: 2,
                t: 0.5,
                previous: 1.0
            })
        );
        assert!(matches!(
            parse_script("0.0 F\nabc F\n", &km),
            Err(ScriptError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            parse_script("0.0 Q\n", &km),
            Err(ScriptError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_script("0.0 F S\n", &km),
            Err(ScriptError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn empty_script_yields_stopped_frames() {
        let frames = simulate(&scenario(), &SimConfig::default(), &[], None);
        assert_eq!(frames.len(), 10);
        let start = start_pose(&scenario(), &RobotParams::default());
        for (k, f) in frames.iter().enumerate() {
            assert_eq!((f.x, f.y, f.heading), (start.x, start.y, start.heading));
            assert!((f.t - (k + 1) as f64 * 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn latched_command_persists_until_replaced() {
        let script = [
            ScriptEntry {
                t: 0.0,
                command: DriveCommand::Forward,
            },
            ScriptEntry {
                t: 0.5,
                command: DriveCommand::Stop,
            },
        ];
        let frames = simulate(&scenario(), &SimConfig::default(), &script, Some(1.0));
        assert_eq!(frames.len(), 10);
        // five forward ticks bring the chassis from -0.05 m to 0
        assert!(frames[4].x.abs() < 1e-12);
        assert_eq!(frames[9].x, frames[4].x);
    }

    #[test]
    fn led_and_fault_follow_the_reading() {
        let script = [ScriptEntry {
            t: 0.0,
            command: DriveCommand::Forward,
        }];
        let frames = simulate(&scenario(), &SimConfig::default(), &script, Some(20.0));
        for f in &frames {
            assert_eq!(f.led, f.freq > 0.0);
            assert_eq!(f.fault, !f.led);
        }
        assert!(frames.first().unwrap().led);
        assert!(frames.last().unwrap().fault);
    }
}
