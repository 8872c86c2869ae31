//! TCP server for the serial-link emulation, with a WebSocket mirror at
//! `/bt` carrying the same frames for browser clients.
//!
//! Connections are accepted concurrently but only one controller session is
//! live at a time; later connections get `ERR busy` and are closed. Drive
//! commands from the session go through a single queue into the simulation
//! loop, which owns the robot and pushes a telemetry frame to the session
//! every tick while it is in controller mode.

use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, unbounded, Receiver, RecvTimeoutError, Sender};
use tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tungstenite::http::StatusCode;
use tungstenite::{Message, WebSocket};

use super::{encode_telemetry, handle_line, KeyMap, SessionState, WS_PATH};
use crate::robot::DriveCommand;
use crate::sim::{SimConfig, Simulation};
use crate::world::WorldScenario;

const POLL: Duration = Duration::from_millis(10);

/// How the simulation loop advances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    /// One tick every `tick` seconds of wall time.
    RealTime,
    /// Wall time scaled: `RealTime` at 1.0, faster above.
    Scaled(f64),
    /// Ticks only when [`ServerHandle::tick`] is called.
    Manual,
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub scenario: WorldScenario,
    pub sim: SimConfig,
    pub keymap: KeyMap,
    pub tcp_addr: SocketAddr,
    /// `None` disables the WebSocket mirror.
    pub http_addr: Option<SocketAddr>,
    pub clock: Clock,
}

enum LoopEvent {
    Command(DriveCommand),
    Disconnected,
    /// Carries an acknowledgement channel for manual ticks.
    Tick(Option<Sender<()>>),
    Shutdown,
}

struct ActiveSession {
    id: u64,
    out: Sender<String>,
    controller: bool,
}

/// The single controller slot shared by listeners, sessions and the loop.
#[derive(Default)]
struct Hub {
    active: Mutex<Option<ActiveSession>>,
    next_id: AtomicU64,
}

impl Hub {
    fn claim(&self, out: Sender<String>) -> Option<u64> {
        let mut active = self.active.lock().expect("hub lock");
        if active.is_some() {
            return None;
        }
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        *active = Some(ActiveSession {
            id,
            out,
            controller: false,
        });
        Some(id)
    }

    /// Queues `reply` and records the session's mode in one step, so no
    /// telemetry can slip in ahead of the `OK` that enables it.
    fn respond(&self, id: u64, reply: String, controller: bool) {
        let mut active = self.active.lock().expect("hub lock");
        if let Some(s) = active.as_mut().filter(|s| s.id == id) {
            let _ = s.out.send(reply);
            s.controller = controller;
        }
    }

    fn release(&self, id: u64) {
        let mut active = self.active.lock().expect("hub lock");
        if active.as_ref().is_some_and(|s| s.id == id) {
            *active = None;
        }
    }

    fn publish(&self, frame: &str) {
        let active = self.active.lock().expect("hub lock");
        if let Some(s) = active.as_ref().filter(|s| s.controller) {
            let _ = s.out.send(frame.to_owned());
        }
    }
}

/// Per-connection protocol state, transport-independent.
struct Session {
    id: u64,
    state: SessionState,
    keymap: KeyMap,
    hub: Arc<Hub>,
    events: Sender<LoopEvent>,
}

impl Session {
    fn on_line(&mut self, line: &str) {
        let t = handle_line(self.state, line, &self.keymap);
        self.state = t.state;
        if let Some(cmd) = t.command {
            let _ = self.events.send(LoopEvent::Command(cmd));
        }
        self.hub.respond(
            self.id,
            format!("{}\n", t.reply),
            self.state == SessionState::ControllerMode,
        );
    }

    fn close(&self) {
        self.hub.release(self.id);
        let _ = self.events.send(LoopEvent::Disconnected);
    }
}

struct Shared {
    hub: Arc<Hub>,
    events: Sender<LoopEvent>,
    keymap: KeyMap,
    stop: Arc<AtomicBool>,
}

impl Shared {
    fn open(&self) -> Option<(Session, Receiver<String>)> {
        let (tx, rx) = unbounded();
        let id = self.hub.claim(tx)?;
        Some((
            Session {
                id,
                state: SessionState::Unpaired,
                keymap: self.keymap.clone(),
                hub: Arc::clone(&self.hub),
                events: self.events.clone(),
            },
            rx,
        ))
    }
}

/// A running server; dropping it without [`ServerHandle::shutdown`] leaves
/// the threads running.
pub struct ServerHandle {
    tcp_addr: SocketAddr,
    http_addr: Option<SocketAddr>,
    events: Sender<LoopEvent>,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp_addr
    }

    pub fn http_addr(&self) -> Option<SocketAddr> {
        self.http_addr
    }

    /// Advances a [`Clock::Manual`] loop by one tick and returns once the
    /// frame has been queued for the controller.
    pub fn tick(&self) {
        let (done_tx, done_rx) = bounded(1);
        if self.events.send(LoopEvent::Tick(Some(done_tx))).is_ok() {
            let _ = done_rx.recv();
        }
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self.events.send(LoopEvent::Shutdown);
        for t in self.threads {
            let _ = t.join();
        }
    }

    /// Blocks until the server stops.
    pub fn join(self) {
        for t in self.threads {
            let _ = t.join();
        }
    }
}

/// Binds the listeners and starts the loop and accept threads.
pub fn start(config: ServerConfig) -> io::Result<ServerHandle> {
    let tcp = TcpListener::bind(config.tcp_addr)?;
    tcp.set_nonblocking(true)?;
    let http = config.http_addr.map(TcpListener::bind).transpose()?;
    if let Some(l) = &http {
        l.set_nonblocking(true)?;
    }
    let tcp_addr = tcp.local_addr()?;
    let http_addr = http.as_ref().map(TcpListener::local_addr).transpose()?;

    let (events_tx, events_rx) = unbounded();
    let shared = Arc::new(Shared {
        hub: Arc::new(Hub::default()),
        events: events_tx.clone(),
        keymap: config.keymap.clone(),
        stop: Arc::new(AtomicBool::new(false)),
    });
    let stop = Arc::clone(&shared.stop);

    let mut threads = Vec::new();
    let sim = Simulation::new(config.scenario.clone(), config.sim);
    let hub = Arc::clone(&shared.hub);
    let clock = config.clock;
    threads.push(thread::spawn(move || run_loop(sim, clock, events_rx, &hub)));

    let s = Arc::clone(&shared);
    threads.push(thread::spawn(move || accept_loop(tcp, &s, serve_tcp)));
    if let Some(http) = http {
        let s = Arc::clone(&shared);
        threads.push(thread::spawn(move || accept_loop(http, &s, serve_ws)));
    }
    Ok(ServerHandle {
        tcp_addr,
        http_addr,
        events: events_tx,
        stop,
        threads,
    })
}

fn run_loop(mut sim: Simulation, clock: Clock, events: Receiver<LoopEvent>, hub: &Hub) {
    let period = match clock {
        Clock::RealTime => Some(Duration::from_secs_f64(sim.config().robot.tick)),
        Clock::Scaled(k) => Some(Duration::from_secs_f64(sim.config().robot.tick / k)),
        Clock::Manual => None,
    };
    let mut deadline = period.map(|p| Instant::now() + p);
    loop {
        let event = match deadline {
            Some(d) => match events.recv_deadline(d) {
                Ok(e) => e,
                Err(RecvTimeoutError::Timeout) => LoopEvent::Tick(None),
                Err(RecvTimeoutError::Disconnected) => return,
            },
            None => match events.recv() {
                Ok(e) => e,
                Err(_) => return,
            },
        };
        match event {
            LoopEvent::Command(cmd) => sim.latch(cmd),
            LoopEvent::Disconnected => sim.latch(DriveCommand::Stop),
            LoopEvent::Shutdown => return,
            LoopEvent::Tick(done) => {
                let frame = sim.tick();
                hub.publish(&format!("{}\n", encode_telemetry(&frame)));
                if let Some(done) = done {
                    let _ = done.send(());
                }
                if let (Some(d), Some(p)) = (deadline.as_mut(), period) {
                    *d += p;
                }
            }
        }
    }
}

fn accept_loop(listener: TcpListener, shared: &Arc<Shared>, serve: fn(TcpStream, Arc<Shared>)) {
    let mut workers: Vec<JoinHandle<()>> = Vec::new();
    while !shared.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let s = Arc::clone(shared);
                workers.push(thread::spawn(move || {
                    if stream.set_nonblocking(false).is_ok() {
                        serve(stream, s);
                    }
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(_) => thread::sleep(POLL),
        }
        workers.retain(|w| !w.is_finished());
    }
    for w in workers {
        let _ = w.join();
    }
}

fn serve_tcp(stream: TcpStream, shared: Arc<Shared>) {
    let Some((mut session, outbound)) = shared.open() else {
        let mut stream = stream;
        let _ = stream.write_all(b"ERR busy\n");
        return;
    };
    let Ok(mut writer) = stream.try_clone() else {
        session.close();
        return;
    };
    let stop = Arc::clone(&shared.stop);
    let pump = thread::spawn(move || {
        // ends when the hub drops the sender
        for frame in outbound {
            if writer.write_all(frame.as_bytes()).is_err() {
                break;
            }
        }
    });
    let _ = stream.set_read_timeout(Some(POLL));
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    while !stop.load(Ordering::SeqCst) {
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) if line.ends_with('\n') => {
                session.on_line(&line);
                line.clear();
            }
            Ok(_) => {}
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
    }
    session.close();
    let _ = reader.get_ref().shutdown(std::net::Shutdown::Both);
    let _ = pump.join();
}

fn serve_ws(stream: TcpStream, shared: Arc<Shared>) {
    // the error type is dictated by tungstenite's callback
    #[allow(clippy::result_large_err)]
    let check_path = |req: &Request, resp: Response| -> Result<Response, ErrorResponse> {
        if req.uri().path() == WS_PATH {
            Ok(resp)
        } else {
            let mut err = ErrorResponse::new(Some(format!("no endpoint at {}", req.uri().path())));
            *err.status_mut() = StatusCode::NOT_FOUND;
            Err(err)
        }
    };
    let Ok(mut ws) = tungstenite::accept_hdr(stream, check_path) else {
        return;
    };
    let Some((mut session, outbound)) = shared.open() else {
        let _ = ws.send(Message::text("ERR busy\n"));
        let _ = ws.close(None);
        let _ = ws.flush();
        return;
    };
    let _ = ws.get_ref().set_read_timeout(Some(POLL));
    while !shared.stop.load(Ordering::SeqCst) {
        match ws.read() {
            Ok(Message::Text(text)) => {
                for line in text.as_str().split_inclusive('\n') {
                    session.on_line(line);
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
        if !flush_outbound(&mut ws, &outbound) {
            break;
        }
    }
    session.close();
    let _ = ws.close(None);
    let _ = ws.flush();
}

fn flush_outbound(ws: &mut WebSocket<TcpStream>, outbound: &Receiver<String>) -> bool {
    for frame in outbound.try_iter() {
        if ws.send(Message::text(frame)).is_err() {
            return false;
        }
    }
    true
}
