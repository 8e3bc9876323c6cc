//! Cross-implementation tests: the wasm aead transport against the native
//! reference endpoints, in both directions, plus wire-transcript checks.

mod common;

use std::io::{Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use common::*;
use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};
use water::{Dialer, ErrorCode, Listener};
use water_aead::{derive_psk, oracle_client, OracleServer, Sealer};

fn aead_config(password: &str) -> water::InstanceConfig {
    quiet().kv("password", password)
}

fn read_exact_conn(conn: &water::VirtualConn, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    let mut off = 0;
    while off < len {
        let n = conn.read(&mut out[off..]).unwrap();
        assert!(n > 0, "virtual conn ended early at {off}/{len}");
        off += n;
    }
    out
}

#[test]
fn guest_dialer_to_oracle_server_roundtrip() {
    let server = OracleServer::bind("127.0.0.1:0", "hunter2").unwrap();
    let addr = server.local_addr().unwrap();
    let echo = std::thread::spawn(move || {
        let conn = server.accept().unwrap();
        let mut buf = [0u8; 16384];
        loop {
            let n = (&conn).read(&mut buf).unwrap();
            if n == 0 {
                break;
            }
            (&conn).write_all(&buf[..n]).unwrap();
        }
    });

    let dialer = Dialer::new(aead_image(), aead_config("hunter2")).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    let mut payload = vec![0u8; 100 * 1024];
    rng.fill_bytes(&mut payload);

    // One writer thread plus one reader thread on the same conn handle.
    std::thread::scope(|scope| {
        scope.spawn(|| conn.write_all(&payload).unwrap());
        let echoed = read_exact_conn(&conn, payload.len());
        assert_eq!(echoed, payload);
    });
    conn.close();
    echo.join().unwrap();
}

#[test]
fn oracle_client_to_guest_listener_roundtrip() {
    let listener = Listener::bind(aead_image(), aead_config("hunter2"), "127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();

    let client = std::thread::spawn(move || {
        let conn = oracle_client(addr, "hunter2").unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        let mut payload = vec![0u8; 100 * 1024];
        rng.fill_bytes(&mut payload);
        // Write and read concurrently; a sequential write-then-read of a
        // payload larger than the path's buffering would deadlock the echo.
        std::thread::scope(|scope| {
            scope.spawn(|| (&conn).write_all(&payload).unwrap());
            let mut echoed = vec![0u8; payload.len()];
            (&conn).read_exact(&mut echoed).unwrap();
            assert_eq!(echoed, payload);
        });
        conn.shutdown().ok();
    });

    let conn = listener.accept().unwrap();
    let mut buf = [0u8; 16384];
    loop {
        let n = conn.read(&mut buf).unwrap();
        if n == 0 {
            break;
        }
        conn.write_all(&buf[..n]).unwrap();
    }
    client.join().unwrap();
}

#[test]
fn wrong_password_fails_guest_accept() {
    let listener = Listener::bind(aead_image(), aead_config("correct"), "127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let client = std::thread::spawn(move || {
        let conn = oracle_client(addr, "wrong").unwrap();
        let _ = (&conn).write_all(b"first frame");
        conn
    });
    let err = listener.accept().unwrap_err();
    assert_eq!(err.code(), ErrorCode::FailedIo);
    drop(client.join().unwrap());
}

#[test]
fn wrong_password_fails_oracle_accept() {
    let server = OracleServer::bind("127.0.0.1:0", "correct").unwrap();
    let addr = server.local_addr().unwrap();
    let acceptor = std::thread::spawn(move || server.accept().map(|_| ()));

    let dialer = Dialer::new(aead_image(), aead_config("wrong")).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();
    conn.write_all(b"first frame").unwrap();
    assert!(acceptor.join().unwrap().is_err());
}

#[test]
fn garbage_fails_one_accept_without_killing_listener() {
    let listener = Listener::bind(aead_image(), aead_config("hunter2"), "127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();

    let garbage_peer = std::thread::spawn(move || {
        let mut stream = connect(addr);
        let junk = vec![0xa5u8; 64];
        stream.write_all(&junk).unwrap();
        stream
    });
    assert_eq!(listener.accept().unwrap_err().code(), ErrorCode::FailedIo);
    drop(garbage_peer.join().unwrap());

    // Next valid peer is still accepted.
    let valid_peer = std::thread::spawn(move || {
        let conn = oracle_client(addr, "hunter2").unwrap();
        (&conn).write_all(b"ok").unwrap();
        conn
    });
    let conn = listener.accept().unwrap();
    assert_eq!(read_exact_conn(&conn, 2), b"ok");
    drop(valid_peer.join().unwrap());
}

#[test]
fn dialer_sends_exactly_one_salt_before_frames() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let dialer = Dialer::new(aead_image(), aead_config("pw")).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();

    let (mut sock, _) = listener.accept().unwrap();
    sock.set_read_timeout(Some(Duration::from_secs(2))).unwrap();
    let mut salt = [0u8; 32];
    sock.read_exact(&mut salt).unwrap();
    // Nothing else arrives until the caller writes.
    let mut extra = [0u8; 1];
    match sock.read(&mut extra) {
        Err(e) if e.kind() == std::io::ErrorKind::WouldBlock
            || e.kind() == std::io::ErrorKind::TimedOut => {}
        other => panic!("expected read timeout before first write, got {other:?}"),
    }
    conn.close();
}

#[test]
fn guest_wire_transcript_matches_oracle() {
    let seed = 0xd1a1u64;
    let mut expected_salt = [0u8; 32];
    StdRng::seed_from_u64(seed).fill_bytes(&mut expected_salt);

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let dialer =
        Dialer::new(aead_image(), aead_config("transcript-pw").rng_seed(seed)).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();

    let (mut sock, _) = listener.accept().unwrap();
    let mut salt = [0u8; 32];
    sock.read_exact(&mut salt).unwrap();
    assert_eq!(salt, expected_salt, "seeded salt must be reproducible");

    let psk = derive_psk(b"transcript-pw");
    let mut oracle = Sealer::with_salt(&psk, expected_salt);
    oracle.take_salt();

    let mut frame_rng = StdRng::seed_from_u64(99);
    for len in [1usize, 2, 64, 512, 4096] {
        let mut plaintext = vec![0u8; len];
        frame_rng.fill_bytes(&mut plaintext);
        conn.write_all(&plaintext).unwrap();
        let expected = oracle.seal(&plaintext).unwrap();
        let mut got = vec![0u8; expected.len()];
        sock.read_exact(&mut got).unwrap();
        assert_eq!(got, expected, "frame for {len}-byte payload");
    }
    conn.close();
}

#[test]
fn missing_password_is_invalid_config() {
    let dialer = Dialer::new(aead_image(), quiet()).unwrap();
    let addr = echo_server(1);
    let err = dialer.dial(&addr.to_string()).unwrap_err();
    assert_eq!(err.code(), ErrorCode::InvalidConfig);
}
