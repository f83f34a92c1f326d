//! Frames over TCP loopback and how they are counted: bytes per direction,
//! flights and round trips.
//!
//! cargo run --release --example transport_accounting

use secinfer::transport::{accept_tcp, connect_tcp_retry, listen_tcp, Side};
use std::time::Duration;

const PING: u16 = 0x100;
const PONG: u16 = 0x101;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = listen_tcp("127.0.0.1:0")?;
    let addr = listener.local_addr()?.to_string();
    let server = std::thread::spawn(move || -> Result<(), secinfer::transport::TransportError> {
        let mut ep = accept_tcp(&listener, Side::A)?;
        for _ in 0..3 {
            let payload = ep.recv_kind(PING)?;
            ep.send(PONG, payload.repeat(2))?;
        }
        Ok(())
    });

    let mut ep = connect_tcp_retry(&addr, Side::B, Duration::from_secs(5))?;
    for size in [10usize, 1000, 100_000] {
        let before = ep.stats();
        ep.send(PING, vec![7; size])?;
        let reply = ep.recv_kind(PONG)?;
        let d = ep.stats().since(&before);
        println!(
            "ping {size:>6} B -> pong {:>6} B | on wire {:>6} + {:>6} B (16 B header each) | flights {}",
            reply.len(),
            d.bytes_b_to_a,
            d.bytes_a_to_b,
            d.flights
        );
    }
    server.join().expect("server thread")?;
    let s = ep.stats();
    println!(
        "total {} B | flights {} | round trips {}",
        s.total_bytes(),
        s.flights,
        s.round_trips
    );
    Ok(())
}
