//! Simulated ground truth: cable geometry, line electrical parameters and
//! the injected fault.
//!
//! Scenarios are loaded from a small TOML document:
//!
//! ```toml
//! [route]
//! waypoints = [[0.0, 0.0], [2.0, 0.0]]
//! depth_m = 0.05
//!
//! [line]
//! current_a = 1.0
//! voltage_v = 230.0
//! frequency_hz = 45.0
//!
//! [noise]
//! seed = 7
//! sigma_hz = 0.5
//!
//! [fault]            # optional
//! kind = "open"      # "open" | "short" | "earth"
//! position_m = 1.5
//! ```
//!
//! Every invariant is checked at load time and reported through
//! [`ScenarioError::Invalid`] with the name of the violated rule.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default burial depth, 25 inches.
pub const DEFAULT_DEPTH_M: f64 = 0.635;
/// Highest line voltage the detector is rated for (RMS).
pub const MAX_LINE_VOLTAGE_V: f64 = 440.0;
/// Accepted line-frequency band (Hz), inclusive.
pub const LINE_FREQUENCY_RANGE_HZ: (f64, f64) = (40.0, 70.0);

/// A point on the ground surface, metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {rule}: {detail}")]
    Invalid { rule: &'static str, detail: String },
    #[error("arc length {s} m outside route [0, {length}] m")]
    OutOfRange { s: f64, length: f64 },
}

fn invalid(rule: &'static str, detail: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        rule,
        detail: detail.into(),
    }
}

/// A piecewise-linear cable run at uniform burial depth.
#[derive(Debug, Clone, PartialEq)]
pub struct CableRoute {
    waypoints: Vec<Point>,
    depth: f64,
    /// Cumulative arc length at each waypoint; `cumulative[0] == 0`.
    cumulative: Vec<f64>,
}

impl CableRoute {
    pub fn new(waypoints: Vec<Point>, depth: f64) -> Result<Self, ScenarioError> {
        if waypoints.len() < 2 {
            return Err(invalid(
                "route.min_waypoints",
                format!("need at least 2 waypoints, got {}", waypoints.len()),
            ));
        }
        if let Some(p) = waypoints.iter().find(|p| !p.is_finite()) {
            return Err(invalid(
                "route.finite_waypoints",
                format!("waypoint {p} is not finite"),
            ));
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(invalid(
                "route.depth_positive",
                format!("depth {depth} m must be > 0"),
            ));
        }
        let mut cumulative = Vec::with_capacity(waypoints.len());
        cumulative.push(0.0);
        for (i, pair) in waypoints.windows(2).enumerate() {
            let len = pair[0].distance(pair[1]);
            if len <= 0.0 {
                return Err(invalid(
                    "route.distinct_waypoints",
                    format!("waypoints {i} and {} coincide at {}", i + 1, pair[0]),
                ));
            }
            cumulative.push(cumulative[i] + len);
        }
        Ok(Self {
            waypoints,
            depth,
            cumulative,
        })
    }

    pub fn waypoints(&self) -> &[Point] {
        &self.waypoints
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("route has waypoints")
    }

    pub fn segment_count(&self) -> usize {
        self.waypoints.len() - 1
    }

    /// Endpoints and starting arc length of segment `i`.
    pub fn segment(&self, i: usize) -> (Point, Point, f64) {
        (self.waypoints[i], self.waypoints[i + 1], self.cumulative[i])
    }

    /// Arc length at each waypoint.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Unit direction of segment `i`.
    pub fn direction(&self, i: usize) -> (f64, f64) {
        let (a, b, _) = self.segment(i);
        let len = a.distance(b);
        ((b.x - a.x) / len, (b.y - a.y) / len)
    }

    /// Index of the segment containing arc length `s` (clamped to the route).
    pub fn segment_at(&self, s: f64) -> usize {
        let last = self.segment_count() - 1;
        // first segment whose end lies at or beyond s
        self.cumulative[1..]
            .iter()
            .position(|&end| s <= end)
            .unwrap_or(last)
            .min(last)
    }

    /// Surface point at arc length `s`.
    pub fn point_at(&self, s: f64) -> Result<Point, ScenarioError> {
        let length = self.length();
        if !(0.0..=length).contains(&s) {
            return Err(ScenarioError::OutOfRange { s, length });
        }
        let i = self.segment_at(s);
        let (a, b, start) = self.segment(i);
        if s == self.cumulative[i + 1] {
            return Ok(b);
        }
        let t = (s - start) / (self.cumulative[i + 1] - start);
        Ok(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
    }

    /// Arc length of the route point closest to `p`, with that distance.
    pub fn nearest_arc_length(&self, p: Point) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for i in 0..self.segment_count() {
            let (a, b, start) = self.segment(i);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
            let q = Point::new(a.x + t * dx, a.y + t * dy);
            let d = q.distance(p);
            if d < best.1 {
                best = (start + t * len2.sqrt(), d);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultKind {
    Open,
    Short,
    Earth,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::Open => "open",
            FaultKind::Short => "short",
            FaultKind::Earth => "earth",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    pub kind: FaultKind,
    /// Arc length along the route, metres.
    pub position: f64,
}

/// Validated, immutable ground truth for one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldScenario {
    pub route: CableRoute,
    /// RMS amperes.
    pub line_current: f64,
    /// RMS volts.
    pub line_voltage: f64,
    pub line_frequency: f64,
    pub fault: Option<FaultSpec>,
    pub noise_seed: u64,
    pub noise_sigma: f64,
}

impl WorldScenario {
    pub fn new(
        route: CableRoute,
        line_current: f64,
        line_voltage: f64,
        line_frequency: f64,
        fault: Option<FaultSpec>,
        noise_seed: u64,
        noise_sigma: f64,
    ) -> Result<Self, ScenarioError> {
        let scenario = Self {
            route,
            line_current,
            line_voltage,
            line_frequency,
            fault,
            noise_seed,
            noise_sigma,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Re-checks every invariant; useful after mutating a public field.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.line_current > 0.0 && self.line_current.is_finite()) {
            return Err(invalid(
                "line.current_positive",
                format!("line current {} A must be > 0", self.line_current),
            ));
        }
        if !self.line_voltage.is_finite() || self.line_voltage < 0.0 {
            return Err(invalid(
                "line.voltage_nonnegative",
                format!(
                    "line voltage {} V must be a finite non-negative value",
                    self.line_voltage
                ),
            ));
        }
        if self.line_voltage > MAX_LINE_VOLTAGE_V {
            return Err(invalid(
                "line.voltage_max_440",
                format!(
                    "line voltage {} V exceeds {MAX_LINE_VOLTAGE_V} V",
                    self.line_voltage
                ),
            ));
        }
        let (lo, hi) = LINE_FREQUENCY_RANGE_HZ;
        if !(lo..=hi).contains(&self.line_frequency) {
            return Err(invalid(
                "line.frequency_range",
                format!(
                    "line frequency {} Hz outside [{lo}, {hi}] Hz",
                    self.line_frequency
                ),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid(
                "noise.sigma_nonnegative",
                format!("noise sigma {} Hz must be >= 0", self.noise_sigma),
            ));
        }
        if let Some(fault) = self.fault {
            let length = self.route.length();
            if !(fault.position > 0.0 && fault.position < length) {
                return Err(invalid(
                    "fault.position_in_route",
                    format!(
                        "fault position {} m must lie strictly inside (0, {length}) m",
                        fault.position
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Surface point and burial depth at arc length `s`.
    pub fn point_on_route(&self, s: f64) -> Result<(Point, f64), ScenarioError> {
        Ok((self.route.point_at(s)?, self.route.depth()))
    }

    pub fn to_toml(&self) -> String {
        let file = ScenarioFile {
            route: RouteTable {
                waypoints: self.route.waypoints().iter().map(|p| [p.x, p.y]).collect(),
                depth_m: self.route.depth(),
            },
            line: LineTable {
                current_a: self.line_current,
                voltage_v: self.line_voltage,
                frequency_hz: self.line_frequency,
            },
            noise: NoiseTable {
                seed: self.noise_seed,
                sigma_hz: self.noise_sigma,
            },
            fault: self.fault.map(|f| {
                FaultField::One(FaultTable {
                    kind: f.kind,
                    position_m: f.position,
                })
            }),
        };
        toml::to_string(&file).expect("scenario serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    route: RouteTable,
    line: LineTable,
    noise: NoiseTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fault: Option<FaultField>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteTable {
    waypoints: Vec<[f64; 2]>,
    depth_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineTable {
    current_a: f64,
    voltage_v: f64,
    frequency_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseTable {
    seed: u64,
    sigma_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum FaultField {
    One(FaultTable),
    Many(Vec<FaultTable>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaultTable {
    kind: FaultKind,
    position_m: f64,
}

/// Parses and validates scenario-file text.
pub fn load_scenario(text: &str) -> Result<WorldScenario, ScenarioError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let fault = match file.fault {
        None => None,
        Some(FaultField::One(f)) => Some(f),
        Some(FaultField::Many(mut v)) => match v.len() {
            0 => None,
            1 => v.pop(),
            n => {
                return Err(invalid(
                    "fault.single",
                    format!("at most one fault per scenario, got {n}"),
                ))
            }
        },
    };
    let route = CableRoute::new(
        file.route
            .waypoints
            .iter()
            .map(|&[x, y]| Point::new(x, y))
            .collect(),
        file.route.depth_m,
    )?;
    WorldScenario::new(
        route,
        file.line.current_a,
        file.line.voltage_v,
        file.line.frequency_hz,
        fault.map(|f| FaultSpec {
            kind: f.kind,
            position: f.position_m,
        }),
        file.noise.seed,
        file.noise.sigma_hz,
    )
}
