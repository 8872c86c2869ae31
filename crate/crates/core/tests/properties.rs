use std::f64::consts::PI;

use cabletrace::emfield::{field_at, FieldSample};
use cabletrace::oscillator::{self, detect, OscillatorParams};
use cabletrace::protocol::{
    encode_telemetry, handle_line, parse_telemetry, KeyMap, SessionState, TelemetryFrame,
};
use cabletrace::robot::{step, DriveCommand, RobotParams, RobotPose};
use cabletrace::sweep::{self, localize, SweepPlan};
use cabletrace::world::{load_scenario, CableRoute, FaultKind, FaultSpec, Point, WorldScenario};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn valid_params() -> impl Strategy<Value = OscillatorParams> {
    (
        4.0..6.0f64,
        2.0..10.0f64,
        -9.0..-5.0f64,
        3.0..15.0f64,
        0.3..0.8f64,
        0.3..0.7f64,
    )
        .prop_map(|(log_r, k, log_c, v_dd, v_d, vt_frac)| {
            let r = 10f64.powf(log_r);
            OscillatorParams {
                r,
                rs: k * r,
                c: 10f64.powf(log_c),
                v_dd,
                v_d,
                v_t: vt_frac * v_dd,
            }
        })
}

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

fn polyline() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0.2..3.0f64, -PI..PI), 1..5).prop_map(|legs| {
        let mut pts = vec![Point::new(0.0, 0.0)];
        for (len, ang) in legs {
            let last = *pts.last().unwrap();
            pts.push(Point::new(
                last.x + len * ang.cos(),
                last.y + len * ang.sin(),
            ));
        }
        pts
    })
}

proptest! {
    #[test]
    fn period_is_linear_in_capacitance(p in valid_params(), alpha in 0.01..100.0f64) {
        let scaled = OscillatorParams { c: alpha * p.c, ..p };
        let t = oscillator::period(&p).unwrap();
        let ts = oscillator::period(&scaled).unwrap();
        prop_assert!((ts - alpha * t).abs() <= 1e-12 * ts);
    }

    #[test]
    fn frequency_times_period_is_one(p in valid_params()) {
        let t = oscillator::period(&p).unwrap();
        let f = oscillator::frequency(&p).unwrap();
        prop_assert!((f * t - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn detection_is_monotone_in_voltage(
        v in 0.0..2e-3f64,
        extra in 0.0..1e-2f64,
        freq in 35.0..60.0f64,
        seed in any::<u64>(),
    ) {
        let tuned = OscillatorParams::golden();
        let at = |volts: f64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let field = FieldSample { b_rms: 1e-6, frequency: freq, induced_voltage: volts };
            detect(&field, 1e-4, &tuned, 0.15, 0.5, &mut rng)
        };
        let low = at(v);
        let high = at(v + extra);
        if low.oscillating {
            prop_assert!(high.oscillating);
        }
        for r in [low, high] {
            prop_assert_eq!(r.led_on, r.oscillating);
            if !r.oscillating {
                prop_assert_eq!(r.measured_frequency, 0.0);
            }
        }
    }

    #[test]
    fn field_decays_with_distance(
        depth in 0.02..1.5f64,
        current in 0.1..100.0f64,
        r1 in 0.0..3.0f64,
        gap in 1e-3..3.0f64,
    ) {
        let s = straight(20.0, depth, current, None);
        let near = field_at(&s, Point::new(10.0, r1)).b_rms;
        let far = field_at(&s, Point::new(10.0, r1 + gap)).b_rms;
        prop_assert!(near > far, "{near} <= {far}");
    }

    #[test]
    fn field_is_linear_in_current(pts in polyline(), depth in 0.05..1.0f64, current in 0.1..50.0f64, px in -3.0..6.0f64, py in -3.0..6.0f64) {
        let route = CableRoute::new(pts, depth).unwrap();
        let one = WorldScenario::new(route.clone(), current, 230.0, 50.0, None, 0, 0.5).unwrap();
        let two = WorldScenario { line_current: 2.0 * current, ..one.clone() };
        let p = Point::new(px, py);
        let a = field_at(&one, p);
        let b = field_at(&two, p);
        prop_assert!((b.b_rms - 2.0 * a.b_rms).abs() <= 1e-12 * b.b_rms);
        prop_assert!((b.induced_voltage - 2.0 * a.induced_voltage).abs() <= 1e-12 * b.induced_voltage);
    }

    #[test]
    fn nothing_past_an_open_fault(pts in polyline(), depth in 0.05..1.0f64, frac in 0.05..0.95f64, px in -3.0..6.0f64, py in -3.0..6.0f64) {
        let route = CableRoute::new(pts, depth).unwrap();
        let position = frac * route.length();
        let s = WorldScenario::new(route, 5.0, 230.0, 50.0, Some(FaultSpec { kind: FaultKind::Open, position }), 0, 0.5).unwrap();
        let p = Point::new(px, py);
        let (nearest, _) = s.route.nearest_arc_length(p);
        let f = field_at(&s, p);
        if nearest > position + 1e-6 {
            prop_assert_eq!(f, FieldSample::default());
        } else {
            prop_assert!(f.b_rms > 0.0);
            prop_assert_eq!(f.frequency, 50.0);
        }
    }

    #[test]
    fn point_on_route_is_continuous(pts in polyline(), a in 0.0..1.0f64, eps in 0.0..0.2f64) {
        let route = CableRoute::new(pts, 0.635).unwrap();
        let s = a * route.length();
        let s2 = (s + eps).min(route.length());
        let d = route.point_at(s).unwrap().distance(route.point_at(s2).unwrap());
        prop_assert!(d <= (s2 - s) + 1e-12);
    }

    #[test]
    fn robot_moves_are_reversible(x in -5.0..5.0f64, y in -5.0..5.0f64, h in -3.1..3.1f64, n in 1usize..200) {
        let params = RobotParams::default();
        let start = RobotPose::new(x, y, h);
        for (there, back) in [
            (DriveCommand::Forward, DriveCommand::Backward),
            (DriveCommand::Left, DriveCommand::Right),
        ] {
            let mut p = start;
            for _ in 0..n { p = step(p, there, &params); }
            if there == DriveCommand::Forward {
                prop_assert_eq!(p.heading, start.heading);
            } else {
                prop_assert_eq!((p.x, p.y), (start.x, start.y));
            }
            for _ in 0..n { p = step(p, back, &params); }
            prop_assert!((p.x - start.x).abs() < 1e-9 && (p.y - start.y).abs() < 1e-9);
            let dh = (p.heading - start.heading).abs();
            prop_assert!(dh < 1e-9 || (2.0 * PI - dh) < 1e-9);
        }
    }

    #[test]
    fn trajectories_are_deterministic(cmds in prop::collection::vec(0usize..5, 0..300)) {
        let params = RobotParams::default();
        let run = || cmds.iter().fold(RobotPose::default(), |p, &i| step(p, DriveCommand::ALL[i], &params));
        let (a, b) = (run(), run());
        prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
        prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
        prop_assert_eq!(a.heading.to_bits(), b.heading.to_bits());
    }

    #[test]
    fn telemetry_round_trips(
        t in 0.0..1e5f64, x in -1e3..1e3f64, y in -1e3..1e3f64, heading in -PI..PI,
        freq in 0.0..100.0f64, led in any::<bool>(), fault in any::<bool>(),
    ) {
        let frame = TelemetryFrame { t, x, y, heading, freq, led, fault }.quantized();
        let line = encode_telemetry(&frame);
        prop_assert_eq!(parse_telemetry(&line).unwrap(), frame);
        prop_assert_eq!(encode_telemetry(&parse_telemetry(&line).unwrap()), line);
    }

    #[test]
    fn scenario_text_round_trips(pts in polyline(), depth in 0.01..2.0f64, current in 0.01..100.0f64,
        voltage in 0.0..440.0f64, freq in 40.0..70.0f64, seed in any::<u64>(), sigma in 0.0..2.0f64,
        fault in prop::option::of((0usize..3, 0.05..0.95f64))) {
        let route = CableRoute::new(pts, depth).unwrap();
        let fault = fault.map(|(k, frac)| FaultSpec {
            kind: [FaultKind::Open, FaultKind::Short, FaultKind::Earth][k],
            position: frac * route.length(),
        });
        let s = WorldScenario::new(route, current, voltage, freq, fault, seed, sigma).unwrap();
        prop_assert_eq!(load_scenario(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn sweep_brackets_open_faults(frac in 0.1..0.9f64, step in 0.05..0.6f64, seed in any::<u64>()) {
        let mut s = straight(3.0, 0.05, 1.0, Some(FaultSpec { kind: FaultKind::Open, position: 3.0 * frac }));
        s.noise_seed = seed;
        let records = sweep::sweep(&s, &SweepPlan::new(step)).unwrap();
        let again = sweep::sweep(&s, &SweepPlan::new(step)).unwrap();
        prop_assert_eq!(&records, &again);
        prop_assert!(records.windows(2).all(|w| w[0].distance <= w[1].distance));
        let interval = localize(&records).unwrap().interval.expect("fault found");
        prop_assert!(interval.contains(3.0 * frac), "{interval:?}");
        prop_assert!(interval.width() <= step + 1e-9);
    }
}

const ALPHABET: [&str; 9] = [
    "PAIR HC-05",
    "MODE CONTROLLER",
    "F",
    "B",
    "L",
    "R",
    "S",
    "X",
    "garbage",
];

#[test]
fn controller_mode_only_reached_through_paired() {
    let km = KeyMap::default();
    let mut sequences = 0;
    for a in ALPHABET {
        for b in ALPHABET {
            for c in ALPHABET {
                let mut state = SessionState::Unpaired;
                for frame in [a, b, c] {
                    let next = handle_line(state, frame, &km).state;
                    if next == SessionState::ControllerMode {
                        assert!(
                            matches!(state, SessionState::Paired | SessionState::ControllerMode),
                            "{a:?} {b:?} {c:?}"
                        );
                    }
                    if next == SessionState::ControllerMode && state != SessionState::ControllerMode
                    {
                        assert_eq!(state, SessionState::Paired);
                        assert_eq!(frame, "MODE CONTROLLER");
                    }
                    state = next;
                }
                sequences += 1;
            }
        }
    }
    assert_eq!(sequences, 729);
}
