use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use cabletrace::protocol::server::{self, Clock, ServerConfig, ServerHandle};
use cabletrace::protocol::{parse_telemetry, KeyMap};
use cabletrace::sim::SimConfig;
use cabletrace::world::load_scenario;
use tungstenite::Message;

const GOLDEN: &str = include_str!("../fixtures/golden.toml");

fn start(clock: Clock) -> ServerHandle {
    server::start(ServerConfig {
        scenario: load_scenario(GOLDEN).unwrap(),
        sim: SimConfig::default(),
        keymap: KeyMap::default(),
        tcp_addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        http_addr: Some(SocketAddr::from(([127, 0, 0, 1], 0))),
        clock,
    })
    .unwrap()
}

struct TcpClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl TcpClient {
    fn connect(addr: SocketAddr) -> Self {
        let stream = TcpStream::connect(addr).unwrap();
        stream
            .set_read_timeout(Some(Duration::from_secs(5)))
            .unwrap();
        Self {
            writer: stream.try_clone().unwrap(),
            reader: BufReader::new(stream),
        }
    }

    fn send(&mut self, frame: &str) {
        self.writer
            .write_all(format!("{frame}\n").as_bytes())
            .unwrap();
    }

    fn recv(&mut self) -> String {
        let mut line = String::new();
        self.reader.read_line(&mut line).unwrap();
        line
    }

    fn exchange(&mut self, frame: &str) -> String {
        self.send(frame);
        self.recv()
    }
}

type Ws = tungstenite::WebSocket<tungstenite::stream::MaybeTlsStream<TcpStream>>;

fn ws_connect(addr: SocketAddr) -> Ws {
    let (ws, _) = tungstenite::connect(format!("ws://{addr}/bt")).unwrap();
    if let tungstenite::stream::MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    }
    ws
}

fn ws_recv(ws: &mut Ws) -> String {
    loop {
        match ws.read().unwrap() {
            Message::Text(t) => return t.as_str().to_owned(),
            Message::Close(_) => return String::new(),
            _ => {}
        }
    }
}

fn ws_exchange(ws: &mut Ws, frame: &str) -> String {
    ws.send(Message::text(format!("{frame}\n"))).unwrap();
    ws_recv(ws)
}

#[test]
fn handshake_drive_and_telemetry_over_tcp() {
    let server = start(Clock::Manual);
    let mut c = TcpClient::connect(server.tcp_addr());
    assert_eq!(c.exchange("F"), "ERR wrong state\n");
    assert_eq!(c.exchange("PAIR HC-05"), "OK PAIRED\n");
    // no telemetry before controller mode
    server.tick();
    assert_eq!(c.exchange("MODE CONTROLLER"), "OK\n");
    assert_eq!(c.exchange("F"), "ACK F\n");
    let mut last_t = 0.0;
    let mut last_x = f64::NEG_INFINITY;
    for _ in 0..5 {
        server.tick();
        let frame = parse_telemetry(&c.recv()).unwrap();
        assert!(frame.t > last_t);
        assert!(frame.x > last_x);
        assert!(frame.led && frame.freq > 0.0 && !frame.fault);
        last_t = frame.t;
        last_x = frame.x;
    }
    assert_eq!(c.exchange("Q"), "ERR unmapped character\n");
    assert_eq!(c.exchange("F"), "ERR wrong state\n");
    server.shutdown();
}

#[test]
fn first_frame_after_pairing_is_pinned() {
    let server = start(Clock::Manual);
    let mut c = TcpClient::connect(server.tcp_addr());
    c.exchange("PAIR HC-05");
    c.exchange("MODE CONTROLLER");
    server.tick();
    assert_eq!(
        c.recv(),
        "TLM 0.100000 -0.050000 0.000000 0.000000 44.494909 1 0\n"
    );
    server.shutdown();
}

#[test]
fn second_controller_is_busy() {
    let server = start(Clock::Manual);
    let mut first = TcpClient::connect(server.tcp_addr());
    assert_eq!(first.exchange("PAIR HC-05"), "OK PAIRED\n");
    let mut second = TcpClient::connect(server.tcp_addr());
    assert_eq!(second.recv(), "ERR busy\n");
    assert_eq!(second.recv(), "", "busy connection is closed");
    let mut ws = ws_connect(server.http_addr().unwrap());
    assert_eq!(ws_recv(&mut ws), "ERR busy\n");
    drop(first);
    // the slot frees once the first session's reader sees EOF
    let mut third = None;
    for _ in 0..100 {
        std::thread::sleep(Duration::from_millis(20));
        let mut c = TcpClient::connect(server.tcp_addr());
        let reply = c.exchange("PAIR HC-05");
        if reply == "OK PAIRED\n" {
            third = Some(c);
            break;
        }
    }
    assert!(third.is_some());
    server.shutdown();
}

#[test]
fn websocket_mirror_is_byte_identical() {
    let script = [
        "PAIR HC-05",
        "MODE CONTROLLER",
        "F",
        "L",
        "R",
        "S",
        "nonsense",
        "PAIR HC-05",
        "MODE CONTROLLER",
        "B",
    ];

    let server = start(Clock::Manual);
    let mut tcp = TcpClient::connect(server.tcp_addr());
    let mut tcp_log = String::new();
    for frame in script {
        tcp_log.push_str(&tcp.exchange(frame));
        if tcp_log.ends_with("ACK F\n")
            || tcp_log.ends_with("ACK L\n")
            || tcp_log.ends_with("ACK B\n")
        {
            for _ in 0..3 {
                server.tick();
                tcp_log.push_str(&tcp.recv());
            }
        }
    }
    server.shutdown();

    let server = start(Clock::Manual);
    let mut ws = ws_connect(server.http_addr().unwrap());
    let mut ws_log = String::new();
    for frame in script {
        ws_log.push_str(&ws_exchange(&mut ws, frame));
        if ws_log.ends_with("ACK F\n") || ws_log.ends_with("ACK L\n") || ws_log.ends_with("ACK B\n")
        {
            for _ in 0..3 {
                server.tick();
                ws_log.push_str(&ws_recv(&mut ws));
            }
        }
    }
    server.shutdown();

    assert_eq!(tcp_log.lines().filter(|l| l.starts_with("TLM")).count(), 9);
    assert!(tcp_log.contains("ERR unknown frame\n"));
    assert_eq!(tcp_log, ws_log);
}

#[test]
fn websocket_rejects_other_paths() {
    let server = start(Clock::Manual);
    let addr = server.http_addr().unwrap();
    assert!(tungstenite::connect(format!("ws://{addr}/elsewhere")).is_err());
    server.shutdown();
}

#[test]
fn real_time_clock_streams_telemetry() {
    let server = start(Clock::Scaled(20.0));
    let mut c = TcpClient::connect(server.tcp_addr());
    c.exchange("PAIR HC-05");
    c.exchange("MODE CONTROLLER");
    let frames: Vec<_> = (0..5)
        .map(|_| parse_telemetry(&c.recv()).unwrap())
        .collect();
    assert!(frames.windows(2).all(|w| w[0].t < w[1].t));
    server.shutdown();
}
