//! Shared fixtures for the runtime integration tests.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::thread;

use water::{InstanceConfig, WATMImage};

pub fn plain_image() -> WATMImage {
    WATMImage::load(water_watm::plain().to_vec()).expect("plain module loads")
}

pub fn reverse_image() -> WATMImage {
    WATMImage::load(water_watm::reverse().to_vec()).expect("reverse module loads")
}

pub fn aead_image() -> WATMImage {
    WATMImage::load(water_watm::aead().to_vec()).expect("aead module loads")
}

pub fn trap_image() -> WATMImage {
    WATMImage::load(water_watm::trap().to_vec()).expect("trap module loads")
}

pub fn echo_config_image() -> WATMImage {
    WATMImage::load(water_watm::echo_config().to_vec()).expect("echo_config module loads")
}

pub fn quiet() -> InstanceConfig {
    InstanceConfig::new().log_level(water::LogLevel::Error)
}

/// TCP echo server for `conns` connections; returns its address.
pub fn echo_server(conns: usize) -> std::net::SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for _ in 0..conns {
            let Ok((mut stream, _)) = listener.accept() else { return };
            thread::spawn(move || {
                stream.set_nodelay(true).ok();
                let mut buf = [0u8; 16384];
                loop {
                    match stream.read(&mut buf) {
                        Ok(0) | Err(_) => break,
                        Ok(n) => {
                            if stream.write_all(&buf[..n]).is_err() {
                                break;
                            }
                        }
                    }
                }
            });
        }
    });
    addr
}

/// Accepts one connection, drains it to EOF, and sends the bytes back on
/// the channel.
pub fn byte_sink() -> (std::net::SocketAddr, mpsc::Receiver<Vec<u8>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        if let Ok((mut stream, _)) = listener.accept() {
            let mut collected = Vec::new();
            let _ = stream.read_to_end(&mut collected);
            let _ = tx.send(collected);
        }
    });
    (addr, rx)
}

/// An address with nothing listening on it.
pub fn dead_addr() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("{addr}")
}

pub fn connect(addr: std::net::SocketAddr) -> TcpStream {
    let stream = TcpStream::connect(addr).unwrap();
    stream.set_nodelay(true).unwrap();
    stream
}
