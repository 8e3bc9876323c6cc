//! End-to-end runtime tests: real guest instances over real sockets.

mod common;

use std::io::{Read, Write};
use std::net::Shutdown;
use std::time::{Duration, Instant};

use common::*;
use water::{Dialer, ErrorCode, Listener, Relay, WATMImage};

#[test]
fn load_plain_image_has_all_roles() {
    let image = plain_image();
    let caps = image.capabilities();
    assert!(caps.can_dial && caps.can_listen && caps.can_relay);
    assert_eq!(image.digest_hex().len(), 64);
}

#[test]
fn load_rejects_random_bytes() {
    let err = WATMImage::load(vec![9, 9, 9, 9]).unwrap_err();
    assert_eq!(err.code(), ErrorCode::InvalidArgument);
}

#[test]
fn digest_pin_mismatch() {
    let reverse_digest = *reverse_image().digest();
    let err = WATMImage::load_pinned(water_watm::plain().to_vec(), &reverse_digest).unwrap_err();
    assert_eq!(err.code(), ErrorCode::General);
    let text = err.to_string();
    assert!(text.contains(&hex::encode(reverse_digest)), "message carries expected digest");
    assert!(text.contains(&plain_image().digest_hex()), "message carries actual digest");
}

#[test]
fn digest_pin_match_loads() {
    let digest = *plain_image().digest();
    WATMImage::load_pinned(water_watm::plain().to_vec(), &digest).unwrap();
}

#[test]
fn plain_dial_echo_roundtrip() {
    let addr = echo_server(1);
    let dialer = Dialer::new(plain_image(), quiet()).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();
    conn.write_all(b"hello").unwrap();
    let mut buf = [0u8; 5];
    let mut read = 0;
    while read < 5 {
        let n = conn.read(&mut buf[read..]).unwrap();
        assert!(n > 0, "echo stream ended early");
        read += n;
    }
    assert_eq!(&buf, b"hello");
}

#[test]
fn reverse_dial_delivers_reversed_bytes() {
    let (addr, rx) = byte_sink();
    let dialer = Dialer::new(reverse_image(), quiet()).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();
    conn.write_all(b"ABCD").unwrap();
    conn.close();
    assert_eq!(rx.recv_timeout(Duration::from_secs(5)).unwrap(), b"DCBA");
}

#[test]
fn dial_closed_port_is_network_unreachable() {
    let dialer = Dialer::new(plain_image(), quiet()).unwrap();
    let err = dialer.dial(&dead_addr()).unwrap_err();
    assert_eq!(err.code(), ErrorCode::NetworkUnreachable);
}

#[test]
fn listener_accept_reads_peer_bytes() {
    let listener = Listener::bind(plain_image(), quiet(), "127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let peer = std::thread::spawn(move || {
        let mut stream = connect(addr);
        stream.write_all(b"hi").unwrap();
        stream.shutdown(Shutdown::Write).unwrap();
        let mut back = Vec::new();
        stream.read_to_end(&mut back).unwrap();
        back
    });
    let conn = listener.accept().unwrap();
    let mut buf = [0u8; 2];
    let mut read = 0;
    while read < 2 {
        let n = conn.read(&mut buf[read..]).unwrap();
        assert!(n > 0);
        read += n;
    }
    assert_eq!(&buf, b"hi");
    conn.write_all(b"yo").unwrap();
    conn.close();
    assert_eq!(peer.join().unwrap(), b"yo");
}

#[test]
fn two_sequential_peers_get_distinct_instances() {
    let listener = Listener::bind(plain_image(), quiet(), "127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let mut ids = Vec::new();
    for _ in 0..2 {
        let peer = std::thread::spawn(move || {
            let mut stream = connect(addr);
            stream.write_all(b"x").unwrap();
            let mut one = [0u8; 1];
            stream.read_exact(&mut one).unwrap();
        });
        let conn = listener.accept().unwrap();
        let mut one = [0u8; 1];
        assert_eq!(conn.read(&mut one).unwrap(), 1);
        conn.write_all(b"y").unwrap();
        ids.push(conn.instance_id());
        peer.join().unwrap();
    }
    assert_ne!(ids[0], ids[1]);
}

#[test]
fn large_transfer_in_chunked_reads() {
    let addr = echo_server(1);
    let dialer = Dialer::new(plain_image(), quiet()).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();

    let payload: Vec<u8> = (0..10 * 1024u32).map(|i| (i * 7 % 256) as u8).collect();
    let expected = payload.clone();
    let writer = std::thread::spawn(move || payload);
    let payload = writer.join().unwrap();
    conn.write_all(&payload).unwrap();

    let mut out = Vec::new();
    let mut buf = vec![0u8; expected.len() / 7 + 1];
    while out.len() < expected.len() {
        let n = conn.read(&mut buf).unwrap();
        assert!(n > 0, "stream ended early at {}", out.len());
        out.extend_from_slice(&buf[..n]);
    }
    assert_eq!(out, expected);
}

#[test]
fn empty_write_returns_zero() {
    let addr = echo_server(1);
    let dialer = Dialer::new(plain_image(), quiet()).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();
    assert_eq!(conn.write(b"").unwrap(), 0);
}

#[test]
fn read_after_peer_close_is_eof() {
    let (addr, _rx) = byte_sink();
    let dialer = Dialer::new(plain_image(), quiet()).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();
    conn.write_all(b"bye").unwrap();
    conn.close();
    let mut buf = [0u8; 8];
    assert_eq!(conn.read(&mut buf).unwrap(), 0);
}

#[test]
fn write_after_close_fails() {
    let addr = echo_server(1);
    let dialer = Dialer::new(plain_image(), quiet()).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();
    conn.close();
    let err = conn.write(b"x").unwrap_err();
    assert_eq!(err.code(), ErrorCode::FailedIo);
}

#[test]
fn plain_relay_preserves_echo_semantics() {
    let echo = echo_server(1);
    let relay =
        Relay::bind(plain_image(), quiet(), "127.0.0.1:0", &echo.to_string()).unwrap();
    let addr = relay.local_addr().unwrap();
    let runner = {
        let relay = relay.clone();
        std::thread::spawn(move || relay.run())
    };

    let mut client = connect(addr);
    client.write_all(b"ping").unwrap();
    let mut buf = [0u8; 4];
    client.read_exact(&mut buf).unwrap();
    assert_eq!(&buf, b"ping");
    drop(client);

    relay.cancel();
    runner.join().unwrap().unwrap();
}

#[test]
fn reverse_relay_in_front_of_reverse_listener() {
    // Raw client -> reverse relay -> reverse listener: the relay reverses
    // once, the listener reverses again, so the accepted stream carries the
    // original bytes.
    let listener = Listener::bind(reverse_image(), quiet(), "127.0.0.1:0").unwrap();
    let inner_addr = listener.local_addr().unwrap();
    let relay =
        Relay::bind(reverse_image(), quiet(), "127.0.0.1:0", &inner_addr.to_string()).unwrap();
    let relay_addr = relay.local_addr().unwrap();
    let runner = {
        let relay = relay.clone();
        std::thread::spawn(move || relay.run())
    };

    let mut client = connect(relay_addr);
    client.write_all(b"single-chunk message").unwrap();

    let conn = listener.accept().unwrap();
    let mut buf = [0u8; 20];
    let mut read = 0;
    while read < buf.len() {
        let n = conn.read(&mut buf[read..]).unwrap();
        assert!(n > 0);
        read += n;
    }
    assert_eq!(&buf, b"single-chunk message");

    drop(client);
    drop(conn);
    relay.cancel();
    runner.join().unwrap().unwrap();
}

#[test]
fn relay_with_dead_remote_stays_alive() {
    let dead = dead_addr();
    let relay = Relay::bind(plain_image(), quiet(), "127.0.0.1:0", &dead).unwrap();
    let addr = relay.local_addr().unwrap();
    let runner = {
        let relay = relay.clone();
        std::thread::spawn(move || relay.run())
    };

    // First client: connection should close promptly since the remote is
    // down.
    let mut client = connect(addr);
    let mut buf = [0u8; 1];
    client.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    match client.read(&mut buf) {
        Ok(0) => {}
        Ok(_) => panic!("unexpected data from dead relay target"),
        Err(e) => panic!("expected orderly close, got {e}"),
    }

    // Relay still accepts new connections.
    let _client2 = connect(addr);

    relay.cancel();
    runner.join().unwrap().unwrap();
}

#[test]
fn cancel_unblocks_accept_within_a_second() {
    let listener = Listener::bind(plain_image(), quiet(), "127.0.0.1:0").unwrap();
    let waiter = {
        let listener = listener.clone();
        std::thread::spawn(move || {
            let start = Instant::now();
            let result = listener.accept();
            (start.elapsed(), result.is_err())
        })
    };
    std::thread::sleep(Duration::from_millis(100));
    let cancel_at = Instant::now();
    listener.cancel();
    let (_, errored) = waiter.join().unwrap();
    assert!(errored, "cancelled accept must fail");
    assert!(cancel_at.elapsed() < Duration::from_secs(1), "cancel wakeup bound");
}

#[test]
fn cancel_twice_is_noop() {
    let listener = Listener::bind(plain_image(), quiet(), "127.0.0.1:0").unwrap();
    listener.cancel();
    listener.cancel();
    assert_eq!(listener.accept().unwrap_err().code(), ErrorCode::FailedIo);
}

#[test]
fn backpressure_blocks_caller_at_shuttle_capacity() {
    // When the network peer stalls, backpressure propagates: the guest
    // blocks writing to its network ring, stops draining the internal pipe,
    // and the caller's writes block rather than buffering unboundedly.
    let stall_listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let stall_addr = stall_listener.local_addr().unwrap();
    let _held = std::thread::spawn(move || {
        let (stream, _) = stall_listener.accept().unwrap();
        std::thread::sleep(Duration::from_secs(10));
        drop(stream);
    });

    let dialer = Dialer::new(plain_image(), quiet().shuttle_buffer(1024)).unwrap();
    let conn = std::sync::Arc::new(dialer.dial(&stall_addr.to_string()).unwrap());
    let writer = {
        let conn = conn.clone();
        std::thread::spawn(move || {
            // Socket buffers plus rings absorb some; 8 MiB cannot fit.
            let chunk = vec![0u8; 64 * 1024];
            let mut sent = 0usize;
            while sent < 8 * 1024 * 1024 {
                match conn.write(&chunk) {
                    Ok(n) => sent += n,
                    Err(_) => break,
                }
            }
            sent
        })
    };
    std::thread::sleep(Duration::from_millis(700));
    assert!(!writer.is_finished(), "writer should be blocked by backpressure");
    conn.cancel();
    let _ = writer.join().unwrap();
}

#[test]
fn config_blob_reaches_guest_exactly() {
    let (addr, rx) = byte_sink();
    let blob: Vec<u8> = (0..4096u32).map(|i| (i * 13 % 256) as u8).collect();
    let config = quiet().blob(blob.clone());
    let dialer = Dialer::new(echo_config_image(), config).unwrap();
    let conn = dialer.dial(&addr.to_string()).unwrap();

    let mut expected = blob;
    expected.push(b'\n');
    expected.extend_from_slice(format!("remote={addr}\n").as_bytes());
    let received = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(received, expected);
    drop(conn);
}
