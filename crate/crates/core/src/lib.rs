//! Simulator for a tracer-method underground cable fault detector: a buried
//! live cable, a CMOS-inverter oscillator detector riding on a teleoperated
//! differential-drive robot, and the sweep that localizes open-circuit
//! faults along the cable route.
//!
//! The modules build on each other:
//!
//! - [`world`]: scenario files, route geometry and the injected fault
//! - [`emfield`]: field and probe voltage above the cable
//! - [`oscillator`]: astable period/frequency and the detector decision
//! - [`robot`]: differential-drive kinematics
//! - [`sim`]: the fixed-step loop tying them together, plus script replay
//! - [`protocol`]: the serial-link emulation and its TCP/WebSocket server
//! - [`sweep`]: route sweep, fault classification and localization
//! - [`cli`]: the `cabletrace` command-line entry point

pub mod cli;
pub mod emfield;
pub mod oscillator;
pub mod protocol;
pub mod robot;
pub mod sim;
pub mod sweep;
pub mod world;

pub use emfield::{FieldModel, FieldSample};
pub use oscillator::{DetectorConfig, DetectorReading, OscillatorParams};
pub use protocol::{KeyMap, SessionState, TelemetryFrame};
pub use robot::{DriveCommand, RobotParams, RobotPose};
pub use sim::{SimConfig, Simulation};
pub use sweep::{FaultReport, SweepPlan, SweepRecord};
pub use world::{
    load_scenario, CableRoute, FaultKind, FaultSpec, Point, ScenarioError, WorldScenario,
};
