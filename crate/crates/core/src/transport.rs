//! Ordered, reliable frame channel between two parties, instrumented with
//! per-direction byte counts, flights and round trips.
//!
//! A *flight* is a maximal run of same-direction sends: the counter moves
//! only when the sending side differs from the previous send. A *round trip*
//! is one completed there-and-back pair of flights, so `round_trips` is
//! `flights / 2`. Byte counts include the 16-byte frame header.
//!
//! In-process pairs share one ledger updated at send time. TCP endpoints each
//! keep their own ledger, recording sends and receives in local order, which
//! for causally ordered protocols yields identical statistics on both sides.

use std::io::{self, BufReader, BufWriter, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, SyncSender};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::{FrameHeader, WireError, HEADER_LEN};

/// Default cap on a single frame payload: 1 GiB.
pub const DEFAULT_MAX_FRAME: u64 = 1 << 30;
const INPROC_DEPTH: usize = 64;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("channel closed by peer")]
    ChannelClosed,
    #[error("frame of {len} bytes exceeds cap of {cap} bytes")]
    FrameTooLarge { len: u64, cap: u64 },
    #[error("address in use: {0}")]
    AddressInUse(String),
    #[error("connection refused: {0}")]
    ConnectionRefused(String),
    #[error("expected frame kind {expected}, got {found}")]
    UnexpectedKind { expected: u16, found: u16 },
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// The two ends of a channel. By convention `A` is the server (model owner)
/// and `B` the client (input owner).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn peer(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommStats {
    pub bytes_a_to_b: u64,
    pub bytes_b_to_a: u64,
    pub flights: u64,
    pub round_trips: u64,
}

impl CommStats {
    pub fn total_bytes(&self) -> u64 {
        self.bytes_a_to_b + self.bytes_b_to_a
    }

    pub fn bytes_from(&self, side: Side) -> u64 {
        match side {
            Side::A => self.bytes_a_to_b,
            Side::B => self.bytes_b_to_a,
        }
    }

    /// Field-wise difference `self - earlier`; flights and round trips are
    /// differenced too, so a delta taken mid-session is only meaningful for
    /// byte counts unless it starts on a flight boundary.
    pub fn since(&self, earlier: &CommStats) -> CommStats {
        CommStats {
            bytes_a_to_b: self.bytes_a_to_b - earlier.bytes_a_to_b,
            bytes_b_to_a: self.bytes_b_to_a - earlier.bytes_b_to_a,
            flights: self.flights - earlier.flights,
            round_trips: self.round_trips - earlier.round_trips,
        }
    }
}

#[derive(Debug, Default)]
struct Ledger {
    stats: CommStats,
    last_sender: Option<Side>,
}

/// Shared view of a ledger; cheap to clone and readable from any thread.
#[derive(Clone, Debug, Default)]
pub struct StatsHandle(Arc<Mutex<Ledger>>);

impl StatsHandle {
    fn record(&self, sender: Side, frame_bytes: u64) {
        let mut ledger = self.0.lock().expect("stats lock poisoned");
        match sender {
            Side::A => ledger.stats.bytes_a_to_b += frame_bytes,
            Side::B => ledger.stats.bytes_b_to_a += frame_bytes,
        }
        if ledger.last_sender != Some(sender) {
            ledger.stats.flights += 1;
            ledger.stats.round_trips = ledger.stats.flights / 2;
            ledger.last_sender = Some(sender);
        }
    }

    pub fn snapshot(&self) -> CommStats {
        self.0.lock().expect("stats lock poisoned").stats
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: u16,
    pub payload: Vec<u8>,
}

enum Link {
    InProc {
        tx: SyncSender<Frame>,
        rx: Receiver<Frame>,
    },
    Tcp {
        reader: BufReader<TcpStream>,
        writer: BufWriter<TcpStream>,
    },
}

pub struct Endpoint {
    side: Side,
    link: Link,
    stats: StatsHandle,
    max_frame: u64,
    shared_ledger: bool,
}

/// Connected in-process pair `(A, B)` over bounded FIFOs.
pub fn make_inproc_pair() -> (Endpoint, Endpoint) {
    let (tx_ab, rx_ab) = mpsc::sync_channel(INPROC_DEPTH);
    let (tx_ba, rx_ba) = mpsc::sync_channel(INPROC_DEPTH);
    let stats = StatsHandle::default();
    let a = Endpoint {
        side: Side::A,
        link: Link::InProc {
            tx: tx_ab,
            rx: rx_ba,
        },
        stats: stats.clone(),
        max_frame: DEFAULT_MAX_FRAME,
        shared_ledger: true,
    };
    let b = Endpoint {
        side: Side::B,
        link: Link::InProc {
            tx: tx_ba,
            rx: rx_ab,
        },
        stats,
        max_frame: DEFAULT_MAX_FRAME,
        shared_ledger: true,
    };
    (a, b)
}

/// Binds a listener; `AddressInUse` when the port is taken.
pub fn listen_tcp(addr: &str) -> Result<TcpListener, TransportError> {
    TcpListener::bind(addr).map_err(|e| match e.kind() {
        ErrorKind::AddrInUse => TransportError::AddressInUse(addr.to_string()),
        _ => TransportError::Io(e),
    })
}

/// Accepts one peer on `listener` and wraps it as the endpoint for `side`.
pub fn accept_tcp(listener: &TcpListener, side: Side) -> Result<Endpoint, TransportError> {
    let (stream, _) = listener.accept()?;
    Endpoint::from_stream(stream, side)
}

/// Connects once; `ConnectionRefused` when nobody listens.
pub fn connect_tcp(addr: &str, side: Side) -> Result<Endpoint, TransportError> {
    let resolved: Vec<SocketAddr> = addr.to_socket_addrs()?.collect();
    let mut last = None;
    for a in resolved {
        match TcpStream::connect(a) {
            Ok(stream) => return Endpoint::from_stream(stream, side),
            Err(e) => last = Some(e),
        }
    }
    Err(match last {
        Some(e) if e.kind() == ErrorKind::ConnectionRefused => {
            TransportError::ConnectionRefused(addr.to_string())
        }
        Some(e) => TransportError::Io(e),
        None => TransportError::ConnectionRefused(addr.to_string()),
    })
}

/// Retries `connect_tcp` until `timeout` elapses; used when the peer is a
/// freshly spawned process that may not be listening yet.
pub fn connect_tcp_retry(
    addr: &str,
    side: Side,
    timeout: Duration,
) -> Result<Endpoint, TransportError> {
    let deadline = Instant::now() + timeout;
    loop {
        match connect_tcp(addr, side) {
            Err(TransportError::ConnectionRefused(_)) if Instant::now() < deadline => {
                std::thread::sleep(Duration::from_millis(20));
            }
            other => return other,
        }
    }
}

impl Endpoint {
    fn from_stream(stream: TcpStream, side: Side) -> Result<Self, TransportError> {
        stream.set_nodelay(true)?;
        let reader = BufReader::with_capacity(1 << 16, stream.try_clone()?);
        let writer = BufWriter::with_capacity(1 << 16, stream);
        Ok(Self {
            side,
            link: Link::Tcp { reader, writer },
            stats: StatsHandle::default(),
            max_frame: DEFAULT_MAX_FRAME,
            shared_ledger: false,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn set_max_frame(&mut self, cap: u64) {
        self.max_frame = cap;
    }

    pub fn stats(&self) -> CommStats {
        self.stats.snapshot()
    }

    pub fn stats_handle(&self) -> StatsHandle {
        self.stats.clone()
    }

    pub fn send(&mut self, kind: u16, payload: Vec<u8>) -> Result<(), TransportError> {
        let len = payload.len() as u64;
        if len > self.max_frame {
            return Err(TransportError::FrameTooLarge {
                len,
                cap: self.max_frame,
            });
        }
        let header = FrameHeader {
            kind,
            payload_len: len,
        };
        let frame_bytes = len + HEADER_LEN as u64;
        match &mut self.link {
            Link::InProc { tx, .. } => {
                // Record before handing over so the peer never observes a
                // frame whose bytes are not yet counted.
                self.stats.record(self.side, frame_bytes);
                tx.send(Frame { kind, payload })
                    .map_err(|_| TransportError::ChannelClosed)?;
            }
            Link::Tcp { writer, .. } => {
                writer
                    .write_all(&header.encode())
                    .and_then(|_| writer.write_all(&payload))
                    .and_then(|_| writer.flush())
                    .map_err(map_io)?;
                self.stats.record(self.side, frame_bytes);
            }
        }
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Frame, TransportError> {
        match &mut self.link {
            Link::InProc { rx, .. } => rx.recv().map_err(|_| TransportError::ChannelClosed),
            Link::Tcp { reader, .. } => {
                let mut head = [0u8; HEADER_LEN];
                reader.read_exact(&mut head).map_err(map_io)?;
                let header = FrameHeader::decode(&head)?;
                if header.payload_len > self.max_frame {
                    return Err(TransportError::FrameTooLarge {
                        len: header.payload_len,
                        cap: self.max_frame,
                    });
                }
                let mut payload = vec![0u8; header.payload_len as usize];
                reader.read_exact(&mut payload).map_err(map_io)?;
                if !self.shared_ledger {
                    self.stats
                        .record(self.side.peer(), header.payload_len + HEADER_LEN as u64);
                }
                Ok(Frame {
                    kind: header.kind,
                    payload,
                })
            }
        }
    }

    /// Receives one frame and insists on its kind.
    pub fn recv_kind(&mut self, expected: u16) -> Result<Vec<u8>, TransportError> {
        let frame = self.recv()?;
        if frame.kind != expected {
            return Err(TransportError::UnexpectedKind {
                expected,
                found: frame.kind,
            });
        }
        Ok(frame.payload)
    }
}

fn map_io(e: io::Error) -> TransportError {
    match e.kind() {
        ErrorKind::UnexpectedEof
        | ErrorKind::BrokenPipe
        | ErrorKind::ConnectionReset
        | ErrorKind::ConnectionAborted => TransportError::ChannelClosed,
        _ => TransportError::Io(e),
    }
}
