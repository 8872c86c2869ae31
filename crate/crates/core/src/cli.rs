//! `cabletrace` command line.
//!
//! Exit codes: 0 success, 1 invalid arguments or inputs, 2 runtime failure.
//! Machine-readable output (CSV, telemetry) goes to stdout or `--out`;
//! everything meant for a person goes to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::oscillator::{self, OscillatorParams};
use crate::protocol::server::{self, Clock, ServerConfig};
use crate::protocol::{KeyMap, DEFAULT_HTTP_PORT, DEFAULT_TCP_PORT};
use crate::sim::{self, SimConfig};
use crate::sweep::{self, SweepPlan, DEFAULT_STEP_M};
use crate::world::{self, Point, WorldScenario};

#[derive(Debug, Parser)]
#[command(
    name = "cabletrace",
    version,
    about = "Underground cable fault-tracer simulator"
)]
pub struct Cli {
    /// Override the scenario's noise seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a timestamped command script headlessly and emit telemetry.
    Simulate(SimulateArgs),
    /// Run the TCP protocol server with its WebSocket mirror.
    Serve(ServeArgs),
    /// Sweep the cable route and localize the fault.
    Sweep(SweepArgs),
    /// Period, frequency and guideline check for an astable oscillator.
    Oscillator(OscillatorArgs),
    /// Field and probe voltage at one surface point.
    Field(FieldArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Lines of `<t_seconds> <command_char>`.
    #[arg(long)]
    pub script: PathBuf,
    /// Simulated seconds; defaults to one second past the last command.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub keymap: Option<PathBuf>,
    /// Write the log here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TCP_PORT)]
    pub tcp_port: u16,
    #[arg(long, default_value_t = DEFAULT_HTTP_PORT)]
    pub http_port: u16,
    #[arg(long)]
    pub keymap: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = DEFAULT_STEP_M)]
    pub step: f64,
    /// Continue past the first fault to the route end.
    #[arg(long)]
    pub full: bool,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OscillatorArgs {
    /// Timing resistor (Ω).
    #[arg(long)]
    pub r: f64,
    /// Series resistor (Ω).
    #[arg(long)]
    pub rs: f64,
    /// Timing capacitor (F).
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub vdd: f64,
    #[arg(long)]
    pub vd: f64,
    #[arg(long)]
    pub vt: f64,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Runtime(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn scenario_from(path: &Path, seed: Option<u64>) -> Result<WorldScenario, Failure> {
    let mut scenario = world::load_scenario(&read_input(path)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        scenario.noise_seed = seed;
    }
    Ok(scenario)
}

fn keymap_from(path: Option<&Path>) -> Result<KeyMap, Failure> {
    match path {
        None => Ok(KeyMap::default()),
        Some(p) => KeyMap::from_toml(&read_input(p)?)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
    }
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => fs::write(p, bytes)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(bytes)
            .map_err(|e| Failure::Runtime(format!("cannot write output: {e}"))),
    }
}

fn simulate(
    args: &SimulateArgs,
    seed: Option<u64>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Outcome {
    let scenario = scenario_from(&args.scenario, seed)?;
    let keymap = keymap_from(args.keymap.as_deref())?;
    let script = sim::parse_script(&read_input(&args.script)?, &keymap)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", args.script.display())))?;
    if let Some(d) = args.duration {
        if !(d.is_finite() && d >= 0.0) {
            return Err(Failure::Invalid(format!("--duration {d} must be >= 0")));
        }
    }
    let frames = sim::simulate(&scenario, &SimConfig::default(), &script, args.duration);
    let _ = writeln!(stderr, "simulated {} ticks", frames.len());
    emit(
        args.out.as_deref(),
        stdout,
        sim::render_log(&frames).as_bytes(),
    )
}

fn serve(args: &ServeArgs, seed: Option<u64>, stderr: &mut dyn Write) -> Outcome {
    let scenario = scenario_from(&args.scenario, seed)?;
    let keymap = keymap_from(args.keymap.as_deref())?;
    let handle = server::start(ServerConfig {
        scenario,
        sim: SimConfig::default(),
        keymap,
        tcp_addr: SocketAddr::from((Ipv4Addr::UNSPECIFIED, args.tcp_port)),
        http_addr: Some(SocketAddr::from((Ipv4Addr::UNSPECIFIED, args.http_port))),
        clock: Clock::RealTime,
    })
    .map_err(|e| Failure::Runtime(format!("cannot start server: {e}")))?;
    let _ = writeln!(
        stderr,
        "listening on tcp {} and ws://{}/bt",
        handle.tcp_addr(),
        handle.http_addr().expect("http enabled")
    );
    handle.join();
    Ok(())
}

fn sweep(
    args: &SweepArgs,
    seed: Option<u64>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Outcome {
    let scenario = scenario_from(&args.scenario, seed)?;
    let plan = SweepPlan {
        full: args.full,
        ..SweepPlan::new(args.step)
    };
    let records = sweep::sweep(&scenario, &plan).map_err(|e| Failure::Invalid(e.to_string()))?;
    let report = sweep::localize(&records).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut csv = Vec::new();
    sweep::write_csv(&mut csv, &records).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(args.out.as_deref(), stdout, &csv)?;
    let _ = writeln!(stderr, "{report}");
    Ok(())
}

fn oscillator(args: &OscillatorArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let params = OscillatorParams {
        r: args.r,
        rs: args.rs,
        c: args.c,
        v_dd: args.vdd,
        v_d: args.vd,
        v_t: args.vt,
    };
    let period = oscillator::period(&params).map_err(|e| Failure::Invalid(e.to_string()))?;
    let text = format!("period_s,frequency_hz\n{period:.9e},{:.6}\n", 1.0 / period);
    emit(None, stdout, text.as_bytes())?;
    let report = oscillator::validity_report(&params);
    if report.is_empty() {
        let _ = writeln!(stderr, "all accuracy guidelines satisfied");
    }
    for w in report {
        let _ = writeln!(stderr, "warning: {w}");
    }
    Ok(())
}

fn field(args: &FieldArgs, seed: Option<u64>, stdout: &mut dyn Write) -> Outcome {
    let scenario = scenario_from(&args.scenario, seed)?;
    let probe = Point::new(args.x, args.y);
    if !probe.is_finite() {
        return Err(Failure::Invalid("probe coordinates must be finite".into()));
    }
    let f = crate::emfield::field_at(&scenario, probe);
    let text = format!("{:e},{:e},{}\n", f.b_rms, f.induced_voltage, f.frequency);
    emit(None, stdout, text.as_bytes())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a, cli.seed, stdout, stderr),
        Command::Serve(a) => serve(a, cli.seed, stderr),
        Command::Sweep(a) => sweep(a, cli.seed, stdout, stderr),
        Command::Oscillator(a) => oscillator(a, stdout, stderr),
        Command::Field(a) => field(a, cli.seed, stdout),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}
