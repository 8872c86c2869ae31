//! Magnetic field of the buried conductor and the voltage it induces in the
//! detector probe.
//!
//! The cable is treated as a chain of straight filaments at burial depth
//! below the surface polyline. Each filament contributes the closed-form
//! finite-segment Biot–Savart field; contributions are summed as vectors.
//! Return-path current is not modelled.
//!
//! A fault splits the route into an upstream and a downstream stretch with
//! separate current multipliers:
//!
//! | fault | upstream        | downstream            |
//! |-------|-----------------|-----------------------|
//! | open  | 1               | 0                     |
//! | short | `short_surge`   | 0                     |
//! | earth | 1               | `earth_attenuation`   |
//!
//! Where the downstream stretch is dead, a probe whose nearest route point
//! lies past the fault reads no field at all: the end tail of the upstream
//! filament is suppressed there, as a de-energized conductor would be.

use std::f64::consts::PI;

use crate::world::{FaultKind, Point, WorldScenario};

/// Vacuum permeability (H/m).
pub const MU0: f64 = 4.0e-7 * PI;

/// How far past a dead-downstream fault (m) a probe may sit and still be
/// read as over the live stretch; absorbs odometry rounding.
pub const FAULT_EDGE_TOLERANCE_M: f64 = 1e-6;

/// Probe and fault-behaviour constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldModel {
    /// Effective turns × area of the pickup probe (m²).
    pub probe_coupling_m2: f64,
    /// Upstream current multiplier for a short-circuit fault.
    pub short_surge: f64,
    /// Downstream current multiplier for an earth fault.
    pub earth_attenuation: f64,
}

impl Default for FieldModel {
    fn default() -> Self {
        Self {
            probe_coupling_m2: 1.0,
            short_surge: 3.0,
            earth_attenuation: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    /// Magnetic flux density, tesla RMS.
    pub b_rms: f64,
    /// Hz; zero when there is no field.
    pub frequency: f64,
    /// Volts RMS across the probe.
    pub induced_voltage: f64,
}

/// A straight current filament carrying `current` amperes from `a` to `b`.
#[derive(Debug, Clone, Copy)]
struct Filament {
    a: [f64; 3],
    b: [f64; 3],
    current: f64,
}

fn sub(p: [f64; 3], q: [f64; 3]) -> [f64; 3] {
    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
}

fn dot(p: [f64; 3], q: [f64; 3]) -> f64 {
    p[0] * q[0] + p[1] * q[1] + p[2] * q[2]
}

fn cross(p: [f64; 3], q: [f64; 3]) -> [f64; 3] {
    [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ]
}

fn norm(p: [f64; 3]) -> f64 {
    dot(p, p).sqrt()
}

impl Filament {
    /// Flux density vector at `p`.
    fn field(&self, p: [f64; 3]) -> [f64; 3] {
        if self.current == 0.0 {
            return [0.0; 3];
        }
        let ab = sub(self.b, self.a);
        let len = norm(ab);
        let u = [ab[0] / len, ab[1] / len, ab[2] / len];
        let ap = sub(p, self.a);
        let bp = sub(p, self.b);
        // perpendicular from the filament's line to p
        let along = dot(ap, u);
        let perp = [
            ap[0] - along * u[0],
            ap[1] - along * u[1],
            ap[2] - along * u[2],
        ];
        let rho = norm(perp);
        // B = μ0 I / (4π ρ) · (cos α1 − cos α2), direction u × ρ̂
        let span = along / norm(ap) - dot(bp, u) / norm(bp);
        let mag = MU0 * self.current / (4.0 * PI * rho) * span;
        let dir = cross(u, perp);
        [dir[0] / rho * mag, dir[1] / rho * mag, dir[2] / rho * mag]
    }
}

impl FieldModel {
    /// `(fault position, upstream multiplier, downstream multiplier)`.
    fn multipliers(&self, scenario: &WorldScenario) -> Option<(f64, f64, f64)> {
        scenario.fault.map(|f| match f.kind {
            FaultKind::Open => (f.position, 1.0, 0.0),
            FaultKind::Short => (f.position, self.short_surge, 0.0),
            FaultKind::Earth => (f.position, 1.0, self.earth_attenuation),
        })
    }

    fn filaments(&self, scenario: &WorldScenario) -> Vec<Filament> {
        let route = &scenario.route;
        let depth = route.depth();
        let at_depth = |p: Point| [p.x, p.y, -depth];
        let current = scenario.line_current;
        let split = self.multipliers(scenario);
        let mut out = Vec::with_capacity(route.segment_count() + 1);
        for i in 0..route.segment_count() {
            let (a, b, start) = route.segment(i);
            let end = route.cumulative()[i + 1];
            match split {
                None => out.push(Filament {
                    a: at_depth(a),
                    b: at_depth(b),
                    current,
                }),
                Some((pos, up, down)) => {
                    if end <= pos {
                        out.push(Filament {
                            a: at_depth(a),
                            b: at_depth(b),
                            current: current * up,
                        });
                    } else if start >= pos {
                        out.push(Filament {
                            a: at_depth(a),
                            b: at_depth(b),
                            current: current * down,
                        });
                    } else {
                        let cut = route.point_at(pos).expect("fault lies on the route");
                        out.push(Filament {
                            a: at_depth(a),
                            b: at_depth(cut),
                            current: current * up,
                        });
                        out.push(Filament {
                            a: at_depth(cut),
                            b: at_depth(b),
                            current: current * down,
                        });
                    }
                }
            }
        }
        out
    }

    /// Field and probe voltage at a surface point.
    pub fn field_at(&self, scenario: &WorldScenario, probe: Point) -> FieldSample {
        if let Some((pos, _, 0.0)) = self.multipliers(scenario) {
            let (nearest, _) = scenario.route.nearest_arc_length(probe);
            if nearest > pos + FAULT_EDGE_TOLERANCE_M {
                return FieldSample::default();
            }
        }
        let p = [probe.x, probe.y, 0.0];
        let total = self
            .filaments(scenario)
            .iter()
            .map(|f| f.field(p))
            .fold([0.0; 3], |acc, b| {
                [acc[0] + b[0], acc[1] + b[1], acc[2] + b[2]]
            });
        let b_rms = norm(total);
        if b_rms > 0.0 {
            FieldSample {
                b_rms,
                frequency: scenario.line_frequency,
                induced_voltage: self.probe_coupling_m2
                    * 2.0
                    * PI
                    * scenario.line_frequency
                    * b_rms,
            }
        } else {
            FieldSample::default()
        }
    }

    /// Largest lateral offset (m) from the cable at which the probe voltage
    /// still reaches `threshold_v`, to 1 mm.
    ///
    /// Measured perpendicular to the route at the middle of its energized
    /// stretch. Returns 0 when even the point directly above is below the
    /// threshold.
    pub fn detection_range(&self, scenario: &WorldScenario, threshold_v: f64) -> f64 {
        const TOLERANCE_M: f64 = 1e-3;
        const MAX_RANGE_M: f64 = 1e6;
        assert!(threshold_v > 0.0, "threshold must be positive");

        let route = &scenario.route;
        let energized_end = match self.multipliers(scenario) {
            Some((pos, _, 0.0)) => pos,
            _ => route.length(),
        };
        let mid = energized_end / 2.0;
        let centre = route.point_at(mid).expect("midpoint lies on the route");
        let (ux, uy) = route.direction(route.segment_at(mid));
        let (nx, ny) = (-uy, ux);
        let voltage = |offset: f64| {
            self.field_at(
                scenario,
                Point::new(centre.x + offset * nx, centre.y + offset * ny),
            )
            .induced_voltage
        };

        if voltage(0.0) < threshold_v {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = route.depth();
        while voltage(hi) >= threshold_v {
            lo = hi;
            hi *= 2.0;
            if hi > MAX_RANGE_M {
                return lo;
            }
        }
        while hi - lo > TOLERANCE_M {
            let m = 0.5 * (lo + hi);
            if voltage(m) >= threshold_v {
                lo = m;
            } else {
                hi = m;
            }
        }
        lo
    }
}

/// [`FieldModel::field_at`] with the default model.
pub fn field_at(scenario: &WorldScenario, probe: Point) -> FieldSample {
    FieldModel::default().field_at(scenario, probe)
}

/// [`FieldModel::detection_range`] with the default model.
pub fn detection_range(scenario: &WorldScenario, threshold_v: f64) -> f64 {
    FieldModel::default().detection_range(scenario, threshold_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{CableRoute, FaultSpec};

    fn straight(length: f64, depth: f64, current: f64, fault: Option<FaultSpec>) -> WorldScenario {
        WorldScenario::new(
            CableRoute::new(vec![Point::new(0.0, 0.0), Point::new(length, 0.0)], depth).unwrap(),
            current,
            230.0,
            45.0,
            fault,
            0,
            0.5,
        )
        .unwrap()
    }

    fn open_at(position: f64) -> Option<FaultSpec> {
        Some(FaultSpec {
            kind: FaultKind::Open,
            position,
        })
    }

    /// μ0 I / (2π r), the infinite straight wire.
    fn infinite_wire(current: f64, r: f64) -> f64 {
        2.0e-7 * current / r
    }

    #[test]
    fn long_wire_matches_closed_form() {
        // 10 A at 0.635 m: 3.1496 µT
        let s = straight(1000.0, 0.635, 10.0, None);
        let b = field_at(&s, Point::new(500.0, 0.0)).b_rms;
        let oracle = infinite_wire(10.0, 0.635);
        assert!((oracle - 3.1496e-6).abs() < 1e-9);
        assert!((b - oracle).abs() / oracle < 1e-5, "{b} vs {oracle}");
    }

    #[test]
    fn twenty_to_one_route_within_two_percent() {
        for &depth in &[0.05, 0.2, 0.635] {
            let s = straight(20.0 * depth, depth, 3.0, None);
            let b = field_at(&s, Point::new(10.0 * depth, 0.0)).b_rms;
            let oracle = infinite_wire(3.0, depth);
            assert!((b - oracle).abs() / oracle <= 0.02);
        }
    }

    #[test]
    fn end_of_wire_is_half_field() {
        // above the open end of a semi-infinite wire
        let s = straight(2000.0, 0.1, 1.0, open_at(1000.0));
        let b = field_at(&s, Point::new(1000.0, 0.0)).b_rms;
        let oracle = 0.5 * infinite_wire(1.0, 0.1);
        assert!((b - oracle).abs() / oracle < 1e-6);
    }

    #[test]
    fn zero_current_gives_zero_field() {
        let mut s = straight(2.0, 0.05, 1.0, None);
        s.line_current = 0.0;
        let f = field_at(&s, Point::new(1.0, 0.0));
        assert_eq!(f, FieldSample::default());
    }

    #[test]
    fn past_open_fault_is_dead() {
        let s = straight(2.0, 0.05, 1.0, open_at(1.5));
        let f = field_at(&s, Point::new(1.7, 0.0));
        assert_eq!(f.b_rms, 0.0);
        assert_eq!(f.induced_voltage, 0.0);
        assert_eq!(f.frequency, 0.0);
        let live = field_at(&s, Point::new(1.5, 0.0));
        assert!(live.b_rms > 0.0);
        assert_eq!(live.frequency, 45.0);
    }

    #[test]
    fn short_and_earth_scale_current() {
        let base = straight(2.0, 0.05, 1.0, None);
        let short = straight(
            2.0,
            0.05,
            1.0,
            Some(FaultSpec {
                kind: FaultKind::Short,
                position: 1.5,
            }),
        );
        let earth = straight(
            2.0,
            0.05,
            1.0,
            Some(FaultSpec {
                kind: FaultKind::Earth,
                position: 0.5,
            }),
        );
        // far upstream of the short the field is roughly tripled
        let near = Point::new(0.2, 0.0);
        let ratio = field_at(&short, near).b_rms / field_at(&base, near).b_rms;
        assert!((2.9..3.0).contains(&ratio), "{ratio}");
        assert_eq!(field_at(&short, Point::new(1.8, 0.0)).b_rms, 0.0);
        let down = Point::new(1.5, 0.0);
        let ratio = field_at(&earth, down).b_rms / field_at(&base, down).b_rms;
        assert!((0.5..0.51).contains(&ratio), "{ratio}");
    }

    #[test]
    fn corner_field_is_finite_and_positive() {
        let s = WorldScenario::new(
            CableRoute::new(
                vec![
                    Point::new(0.0, 0.0),
                    Point::new(1.0, 0.0),
                    Point::new(1.0, 1.0),
                ],
                0.3,
            )
            .unwrap(),
            2.0,
            230.0,
            50.0,
            None,
            0,
            0.0,
        )
        .unwrap();
        let f = field_at(&s, Point::new(1.0, 0.0));
        assert!(f.b_rms.is_finite() && f.b_rms > 0.0);
        assert!(f.induced_voltage > 0.0);
    }

    #[test]
    fn detection_range_cases() {
        let s = straight(2.0, 0.05, 1.0, open_at(1.5));
        let above = field_at(&s, Point::new(0.75, 0.0)).induced_voltage;
        assert_eq!(detection_range(&s, above * 1.01), 0.0);
        let r = detection_range(&s, 1e-4);
        assert!(r >= 0.1, "{r}");
        // the range boundary brackets the threshold to 1 mm
        let v = |x: f64| field_at(&s, Point::new(0.75, x)).induced_voltage;
        assert!(v(r) >= 1e-4 && v(r + 1e-3) < 1e-4);
    }

    #[test]
    fn deeper_cable_has_shorter_range() {
        let shallow = straight(10.0, 0.2, 5.0, None);
        let deep = straight(10.0, 0.6, 5.0, None);
        assert!(detection_range(&deep, 1e-4) <= detection_range(&shallow, 1e-4));
    }
}
