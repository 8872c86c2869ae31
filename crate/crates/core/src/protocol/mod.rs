//! Line-oriented emulation of the HC-05 serial link.
//!
//! Frames are newline-terminated ASCII. A session must pair, then enter
//! controller mode, before single-character drive frames are accepted:
//!
//! ```text
//! > PAIR HC-05          < OK PAIRED
//! > MODE CONTROLLER     < OK
//! > F                   < ACK F
//!                       < TLM 0.100000 0.010000 0.000000 0.000000 45.312000 1 0
//! ```
//!
//! Any error replies `ERR <reason>` and drops the session back to
//! `Unpaired`.

pub mod server;

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::robot::DriveCommand;

pub const PAIR_FRAME: &str = "PAIR HC-05";
pub const MODE_FRAME: &str = "MODE CONTROLLER";
pub const DEFAULT_TCP_PORT: u16 = 7305;
pub const DEFAULT_HTTP_PORT: u16 = 8080;
pub const WS_PATH: &str = "/bt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SessionState {
    #[default]
    Unpaired,
    Paired,
    ControllerMode,
}

#[derive(Debug, Error, PartialEq)]
pub enum KeyMapError {
    #[error("keymap has no character for {0}")]
    Missing(DriveCommand),
    #[error("character {0:?} is bound to both {1} and {2}")]
    Duplicate(char, DriveCommand, DriveCommand),
    #[error("keymap binding {0:?} must be a single printable ASCII character")]
    BadChar(String),
    #[error("keymap parse error: {0}")]
    Parse(String),
}

/// Injective binding of command characters to drive commands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMap {
    bindings: BTreeMap<char, DriveCommand>,
}

impl Default for KeyMap {
    fn default() -> Self {
        Self::new([
            ('F', DriveCommand::Forward),
            ('B', DriveCommand::Backward),
            ('L', DriveCommand::Left),
            ('R', DriveCommand::Right),
            ('S', DriveCommand::Stop),
        ])
        .expect("default keymap is valid")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyMapFile {
    forward: String,
    backward: String,
    left: String,
    right: String,
    stop: String,
}

impl KeyMap {
    pub fn new(pairs: impl IntoIterator<Item = (char, DriveCommand)>) -> Result<Self, KeyMapError> {
        let mut bindings = BTreeMap::new();
        for (c, cmd) in pairs {
            if !c.is_ascii_graphic() {
                return Err(KeyMapError::BadChar(c.to_string()));
            }
            if let Some(prev) = bindings.insert(c, cmd) {
                return Err(KeyMapError::Duplicate(c, prev, cmd));
            }
        }
        for cmd in DriveCommand::ALL {
            if !bindings.values().any(|&v| v == cmd) {
                return Err(KeyMapError::Missing(cmd));
            }
        }
        if bindings.len() != DriveCommand::ALL.len() {
            let (c, cmd) = bindings
                .iter()
                .find(|(_, v)| bindings.values().filter(|w| w == v).count() > 1)
                .map(|(c, v)| (*c, *v))
                .expect("surplus binding implies a repeated command");
            return Err(KeyMapError::Duplicate(c, cmd, cmd));
        }
        Ok(Self { bindings })
    }

    /// Parses a keymap file:
    ///
    /// ```toml
    /// forward = "W"
    /// backward = "X"
    /// left = "A"
    /// right = "D"
    /// stop = "S"
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, KeyMapError> {
        let file: KeyMapFile =
            toml::from_str(text).map_err(|e| KeyMapError::Parse(e.to_string()))?;
        let one = |s: String| {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(KeyMapError::BadChar(s)),
            }
        };
        Self::new([
            (one(file.forward)?, DriveCommand::Forward),
            (one(file.backward)?, DriveCommand::Backward),
            (one(file.left)?, DriveCommand::Left),
            (one(file.right)?, DriveCommand::Right),
            (one(file.stop)?, DriveCommand::Stop),
        ])
    }

    pub fn command(&self, c: char) -> Option<DriveCommand> {
        self.bindings.get(&c).copied()
    }

    pub fn char_for(&self, cmd: DriveCommand) -> char {
        self.bindings
            .iter()
            .find(|(_, &v)| v == cmd)
            .map(|(&c, _)| c)
            .expect("keymap covers every command")
    }
}

/// Result of one inbound frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: SessionState,
    pub reply: String,
    pub command: Option<DriveCommand>,
}

impl Transition {
    fn ok(state: SessionState, reply: impl Into<String>) -> Self {
        Self {
            state,
            reply: reply.into(),
            command: None,
        }
    }

    fn err(reason: &str) -> Self {
        Self {
            state: SessionState::Unpaired,
            reply: format!("ERR {reason}"),
            command: None,
        }
    }
}

/// Advances the session state machine by one frame.
///
/// `line` may carry its trailing `\n` (and `\r`); the reply is returned
/// without a terminator.
pub fn handle_line(state: SessionState, line: &str, keymap: &KeyMap) -> Transition {
    use SessionState::*;
    let frame = line.strip_suffix('\n').unwrap_or(line);
    let frame = frame.strip_suffix('\r').unwrap_or(frame);
    let single = {
        let mut chars = frame.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Some(c),
            _ => None,
        }
    };
    match (state, frame, single) {
        (Unpaired, PAIR_FRAME, _) => Transition::ok(Paired, "OK PAIRED"),
        (Paired, MODE_FRAME, _) => Transition::ok(ControllerMode, "OK"),
        (_, PAIR_FRAME | MODE_FRAME, _) => Transition::err("wrong state"),
        (ControllerMode, _, Some(c)) => match keymap.command(c) {
            Some(cmd) => Transition {
                state: ControllerMode,
                reply: format!("ACK {c}"),
                command: Some(cmd),
            },
            None => Transition::err("unmapped character"),
        },
        (Unpaired | Paired, _, Some(c)) if c.is_ascii_graphic() => Transition::err("wrong state"),
        _ => Transition::err("unknown frame"),
    }
}

/// One telemetry line: pose, detector output and fault flag at sim time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TelemetryFrame {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub freq: f64,
    pub led: bool,
    pub fault: bool,
}

/// Rounds to the 6-decimal wire resolution, folding −0 into +0.
pub fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6 + 0.0
}

impl TelemetryFrame {
    /// The frame as it will read back from the wire.
    pub fn quantized(self) -> Self {
        Self {
            t: quantize(self.t),
            x: quantize(self.x),
            y: quantize(self.y),
            heading: quantize(self.heading),
            freq: quantize(self.freq),
            ..self
        }
    }
}

/// `TLM <t> <x> <y> <heading> <freq> <led> <fault>`, without newline.
pub fn encode_telemetry(frame: &TelemetryFrame) -> String {
    let f = frame.quantized();
    format!(
        "TLM {:.6} {:.6} {:.6} {:.6} {:.6} {} {}",
        f.t,
        f.x,
        f.y,
        f.heading,
        f.freq,
        u8::from(f.led),
        u8::from(f.fault)
    )
}

#[derive(Debug, Error, PartialEq)]
#[error("bad telemetry frame {line:?}: {reason}")]
pub struct TelemetryParseError {
    pub line: String,
    pub reason: String,
}

pub fn parse_telemetry(line: &str) -> Result<TelemetryFrame, TelemetryParseError> {
    let bad = |reason: &str| TelemetryParseError {
        line: line.to_owned(),
        reason: reason.to_owned(),
    };
    let trimmed = line.strip_suffix('\n').unwrap_or(line);
    let fields: Vec<&str> = trimmed.split(' ').collect();
    if fields.len() != 8 || fields[0] != "TLM" {
        return Err(bad("expected `TLM` followed by 7 fields"));
    }
    let num = |i: usize| {
        fields[i]
            .parse::<f64>()
            .map_err(|_| bad("non-numeric field"))
    };
    let flag = |i: usize| match fields[i] {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(bad("flag must be 0 or 1")),
    };
    Ok(TelemetryFrame {
        t: num(1)?,
        x: num(2)?,
        y: num(3)?,
        heading: num(4)?,
        freq: num(5)?,
        led: flag(6)?,
        fault: flag(7)?,
    })
}

impl fmt::Display for TelemetryFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_telemetry(self))
    }
}
