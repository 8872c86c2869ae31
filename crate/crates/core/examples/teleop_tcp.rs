//! In-process protocol server driven by a TCP client, with the clock
//! advanced manually: pair, enter controller mode, drive, read telemetry.
//! A second client is turned away while the first holds the session.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};

use cabletrace::protocol::server::{self, Clock, ServerConfig};
use cabletrace::protocol::{parse_telemetry, KeyMap};
use cabletrace::sim::SimConfig;
use cabletrace::world::load_scenario;

fn recv(reader: &mut impl BufRead) -> std::io::Result<String> {
    let mut line = String::new();
    reader.read_line(&mut line)?;
    Ok(line)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = server::start(ServerConfig {
        scenario: load_scenario(include_str!("../fixtures/golden.toml"))?,
        sim: SimConfig::default(),
        keymap: KeyMap::default(),
        tcp_addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        http_addr: None,
        clock: Clock::Manual,
    })?;

    let stream = TcpStream::connect(server.tcp_addr())?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);

    // the first F arrives before pairing and is refused
    for frame in ["F", "PAIR HC-05", "MODE CONTROLLER", "F"] {
        writeln!(writer, "{frame}")?;
        print!("> {frame}\n< {}", recv(&mut reader)?);
    }

    for _ in 0..5 {
        server.tick();
        let frame = parse_telemetry(&recv(&mut reader)?)?;
        println!(
            "t={:.1} x={:+.3} freq={:.3} led={}",
            frame.t, frame.x, frame.freq, frame.led
        );
    }

    let mut other = BufReader::new(TcpStream::connect(server.tcp_addr())?);
    print!("second client < {}", recv(&mut other)?);

    server.shutdown();
    Ok(())
}
