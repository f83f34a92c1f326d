use secinfer::transport::{
    accept_tcp, connect_tcp, listen_tcp, make_inproc_pair, CommStats, Endpoint, Side,
    TransportError,
};
use secinfer::wire::{frame, unframe, FrameHeader, WireError, HEADER_LEN};

#[test]
fn coalesced_flights() {
    let (mut a, mut b) = make_inproc_pair();
    assert_eq!(a.stats(), CommStats::default());
    a.send(1, vec![0; 10]).unwrap();
    a.send(1, vec![0; 20]).unwrap();
    b.recv().unwrap();
    b.recv().unwrap();
    b.send(2, vec![]).unwrap();
    a.recv().unwrap();
    let s = b.stats();
    assert_eq!(s, a.stats());
    assert_eq!(s.flights, 2);
    assert_eq!(s.round_trips, 1);
    assert_eq!(s.bytes_a_to_b, 30 + 2 * HEADER_LEN as u64);
    assert_eq!(s.bytes_b_to_a, HEADER_LEN as u64);
}

#[test]
fn fhe_shaped_trace_is_one_round_trip() {
    let (mut a, mut b) = make_inproc_pair();
    b.send(1, vec![7; 100]).unwrap();
    a.recv().unwrap();
    a.send(2, vec![7; 10]).unwrap();
    let s = a.stats();
    assert_eq!((s.flights, s.round_trips), (2, 1));
}

#[test]
fn frame_header_is_counted() {
    let (mut a, mut b) = make_inproc_pair();
    let mib = 1 << 20;
    a.send(1, vec![0xab; mib]).unwrap();
    let f = b.recv().unwrap();
    assert_eq!(f.payload.len(), mib);
    assert_eq!(a.stats().bytes_a_to_b, mib as u64 + 16);
}

#[test]
fn header_layout() {
    let h = FrameHeader {
        kind: 5,
        payload_len: 3,
    };
    let bytes = h.encode();
    assert_eq!(&bytes[..4], b"SInf");
    assert_eq!(FrameHeader::decode(&bytes).unwrap(), h);
    let f = frame(5, &[1, 2, 3]);
    assert_eq!(f.len(), HEADER_LEN + 3);
    assert_eq!(unframe(5, &f).unwrap(), &[1, 2, 3]);
    assert!(matches!(
        unframe(6, &f),
        Err(WireError::UnexpectedKind { .. })
    ));
    let mut bad = bytes;
    bad[0] ^= 1;
    assert!(matches!(
        FrameHeader::decode(&bad),
        Err(WireError::BadMagic(_))
    ));
}

#[test]
fn closed_and_oversized() {
    let (mut a, mut b) = make_inproc_pair();
    a.set_max_frame(8);
    assert!(matches!(
        a.send(1, vec![0; 9]),
        Err(TransportError::FrameTooLarge { len: 9, cap: 8 })
    ));
    b.send(3, vec![]).unwrap();
    assert!(matches!(
        a.recv_kind(4),
        Err(TransportError::UnexpectedKind {
            expected: 4,
            found: 3
        })
    ));
    drop(b);
    assert!(matches!(a.recv(), Err(TransportError::ChannelClosed)));
}

/// B sends three frames, each echoed by A.
fn echo_trace(a: &mut Endpoint, b: &mut Endpoint) {
    for n in [5usize, 500, 50_000] {
        b.send(1, vec![1; n]).unwrap();
        let f = a.recv().unwrap();
        a.send(2, f.payload).unwrap();
        assert_eq!(b.recv().unwrap().payload.len(), n);
    }
}

#[test]
fn tcp_and_inproc_account_identically() {
    let (mut a, mut b) = make_inproc_pair();
    echo_trace(&mut a, &mut b);
    let inproc = a.stats();
    assert_eq!(inproc.flights, 6);

    let listener = listen_tcp("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let (ta, tb) = std::thread::scope(|s| {
        let h = s.spawn(|| accept_tcp(&listener, Side::A).unwrap());
        let mut tb = connect_tcp(&addr, Side::B).unwrap();
        let mut ta = h.join().unwrap();
        echo_trace(&mut ta, &mut tb);
        (ta, tb)
    });
    assert_eq!(ta.stats(), inproc);
    assert_eq!(tb.stats(), inproc);
}

#[test]
fn tcp_errors() {
    let listener = listen_tcp("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    assert!(matches!(
        listen_tcp(&addr),
        Err(TransportError::AddressInUse(_))
    ));
    drop(listener);
    assert!(matches!(
        connect_tcp(&addr, Side::B),
        Err(TransportError::ConnectionRefused(_))
    ));

    let listener = listen_tcp("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    std::thread::scope(|s| {
        let h = s.spawn(|| accept_tcp(&listener, Side::A).unwrap());
        let b = connect_tcp(&addr, Side::B).unwrap();
        let mut a = h.join().unwrap();
        drop(b);
        assert!(matches!(a.recv(), Err(TransportError::ChannelClosed)));
    });
}

proptest::proptest! {
    #[test]
    fn frames_roundtrip(kind in proptest::prelude::any::<u16>(), payload in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..2048)) {
        let f = frame(kind, &payload);
        let h = FrameHeader::decode(f[..HEADER_LEN].try_into().unwrap()).unwrap();
        proptest::prop_assert_eq!(h.kind, kind);
        proptest::prop_assert_eq!(h.payload_len as usize, payload.len());
        proptest::prop_assert_eq!(unframe(kind, &f).unwrap(), &payload[..]);
    }
}
