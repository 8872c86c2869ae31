//! Differential-drive chassis carrying the probe.
//!
//! Both motors run through an H-bridge, so the robot either drives straight
//! (wheels in the same direction) or spins in place (wheels opposed).

use std::f64::consts::PI;
use std::fmt;

use crate::world::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveCommand {
    Forward,
    Backward,
    Left,
    Right,
    Stop,
}

impl DriveCommand {
    pub const ALL: [DriveCommand; 5] = [
        DriveCommand::Forward,
        DriveCommand::Backward,
        DriveCommand::Left,
        DriveCommand::Right,
        DriveCommand::Stop,
    ];
}

impl fmt::Display for DriveCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    /// Radians in (−π, π], counter-clockwise from +x.
    pub heading: f64,
}

impl RobotPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    /// m/s
    pub speed: f64,
    /// rad/s
    pub turn_rate: f64,
    /// Simulation step, s.
    pub tick: f64,
    /// Probe tip distance ahead of the chassis centre, m.
    pub probe_offset: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            speed: 0.1,
            turn_rate: 1.0,
            tick: 0.1,
            probe_offset: 0.05,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed > 0.0
            && self.turn_rate > 0.0
            && self.tick > 0.0
            && self.probe_offset >= 0.0)
        {
            return Err(format!("invalid robot params {self:?}"));
        }
        Ok(())
    }

    /// Distance covered by one full tick of driving.
    pub fn stride(&self) -> f64 {
        self.speed * self.tick
    }

    /// Angle swept by one full tick of turning.
    pub fn sweep_angle(&self) -> f64 {
        self.turn_rate * self.tick
    }
}

/// Applies `cmd` for `dt` seconds.
///
/// Used with `dt < tick` for the final partial step of a manoeuvre.
pub fn advance(pose: RobotPose, cmd: DriveCommand, params: &RobotParams, dt: f64) -> RobotPose {
    match cmd {
        DriveCommand::Stop => pose,
        DriveCommand::Forward | DriveCommand::Backward => {
            let sign = if cmd == DriveCommand::Forward {
                1.0
            } else {
                -1.0
            };
            let d = sign * params.speed * dt;
            RobotPose {
                x: pose.x + d * pose.heading.cos(),
                y: pose.y + d * pose.heading.sin(),
                heading: pose.heading,
            }
        }
        DriveCommand::Left | DriveCommand::Right => {
            let sign = if cmd == DriveCommand::Left { 1.0 } else { -1.0 };
            RobotPose {
                x: pose.x,
                y: pose.y,
                heading: normalize_angle(pose.heading + sign * params.turn_rate * dt),
            }
        }
    }
}

/// One simulation tick under `cmd`.
pub fn step(pose: RobotPose, cmd: DriveCommand, params: &RobotParams) -> RobotPose {
    advance(pose, cmd, params, params.tick)
}

/// Where the probe tip sits for a given chassis pose.
pub fn probe_position(pose: &RobotPose, params: &RobotParams) -> Point {
    Point::new(
        pose.x + params.probe_offset * pose.heading.cos(),
        pose.y + params.probe_offset * pose.heading.sin(),
    )
}
