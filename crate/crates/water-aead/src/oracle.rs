//! Native TCP endpoints speaking the AEAD wire format.
//!
//! These are the independent counterparties used to validate other
//! implementations of the transport: a client that dials out and a server
//! that accepts, both exposing plaintext `Read`/`Write` streams.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};

use crate::{derive_psk, AeadError, OpenOutcome, Opener, Sealer, LEN_SECTION_LEN, SALT_LEN};

fn to_io(err: AeadError) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, err)
}

struct ReadHalf {
    opener: Opener,
    acc: Vec<u8>,
    pending: Vec<u8>,
    eof: bool,
}

impl ReadHalf {
    // Decodes buffered wire bytes into `pending`; true if anything came out.
    fn drain_frames(&mut self) -> io::Result<bool> {
        let before = self.pending.len();
        loop {
            match self.opener.open(&self.acc).map_err(to_io)? {
                OpenOutcome::NeedMore => break,
                OpenOutcome::Progress { consumed, plaintext } => {
                    self.acc.drain(..consumed);
                    self.pending.extend_from_slice(&plaintext);
                }
            }
        }
        Ok(self.pending.len() > before)
    }
}

/// Plaintext byte-stream endpoint over an AEAD-framed TCP connection.
///
/// `Read` and `Write` are implemented for `&OracleStream` so one connection
/// can be driven from a reader thread and a writer thread concurrently, the
/// same way `TcpStream` allows.
pub struct OracleStream {
    stream: Arc<TcpStream>,
    sealer: Mutex<Sealer>,
    read: Mutex<ReadHalf>,
}

impl OracleStream {
    fn new(stream: TcpStream, sealer: Sealer, opener: Opener) -> Self {
        Self {
            stream: Arc::new(stream),
            sealer: Mutex::new(sealer),
            read: Mutex::new(ReadHalf { opener, acc: Vec::new(), pending: Vec::new(), eof: false }),
        }
    }

    /// Shuts down the underlying TCP stream in both directions.
    pub fn shutdown(&self) -> io::Result<()> {
        self.stream.shutdown(std::net::Shutdown::Both)
    }

    fn read_plain(&self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        let mut half = self.read.lock().unwrap();
        loop {
            if !half.pending.is_empty() {
                let n = buf.len().min(half.pending.len());
                buf[..n].copy_from_slice(&half.pending[..n]);
                half.pending.drain(..n);
                return Ok(n);
            }
            if half.eof {
                return Ok(0);
            }
            let mut chunk = [0u8; 16384];
            let n = (&*self.stream).read(&mut chunk)?;
            if n == 0 {
                half.eof = true;
                if !half.acc.is_empty() || half.opener.awaiting_payload() {
                    return Err(io::Error::new(
                        io::ErrorKind::UnexpectedEof,
                        "peer closed mid-frame",
                    ));
                }
                return Ok(0);
            }
            half.acc.extend_from_slice(&chunk[..n]);
            half.drain_frames()?;
        }
    }

    fn write_plain(&self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        let wire = self.sealer.lock().unwrap().seal_all(buf);
        (&*self.stream).write_all(&wire)?;
        Ok(buf.len())
    }
}

impl Read for &OracleStream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.read_plain(buf)
    }
}

impl Write for &OracleStream {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.write_plain(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        (&*self.stream).flush()
    }
}

impl Read for OracleStream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.read_plain(buf)
    }
}

impl Write for OracleStream {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.write_plain(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        (&*self.stream).flush()
    }
}

/// Dials `addr` and completes the dialer-side handshake: the salt goes out
/// immediately, ahead of any frame.
pub fn oracle_client(addr: impl ToSocketAddrs, password: &str) -> io::Result<OracleStream> {
    let stream = TcpStream::connect(addr)?;
    stream.set_nodelay(true)?;
    let psk = derive_psk(password.as_bytes());
    let mut sealer = Sealer::new(&psk);
    let salt = sealer.take_salt().expect("fresh sealer holds its salt");
    (&stream).write_all(&salt)?;
    Ok(OracleStream::new(stream, sealer, Opener::new(&psk)))
}

/// Accepting endpoint for the AEAD transport.
pub struct OracleServer {
    listener: TcpListener,
    psk: [u8; 32],
}

impl OracleServer {
    pub fn bind(addr: impl ToSocketAddrs, password: &str) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            psk: derive_psk(password.as_bytes()),
        })
    }

    pub fn local_addr(&self) -> io::Result<std::net::SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts one connection and completes the listener-side handshake:
    /// read the peer salt, then read and authenticate the first length
    /// section. A wrong password or tampered prefix fails here.
    pub fn accept(&self) -> io::Result<OracleStream> {
        let (stream, _) = self.listener.accept()?;
        stream.set_nodelay(true)?;

        let mut salt = [0u8; SALT_LEN];
        (&stream).read_exact(&mut salt)?;
        let mut opener = Opener::with_peer_salt(&self.psk, &salt);

        let mut len_section = [0u8; LEN_SECTION_LEN];
        (&stream).read_exact(&mut len_section)?;
        match opener.open(&len_section).map_err(to_io)? {
            OpenOutcome::Progress { consumed, .. } => debug_assert_eq!(consumed, LEN_SECTION_LEN),
            OpenOutcome::NeedMore => unreachable!("full length section supplied"),
        }
        debug_assert!(opener.awaiting_payload());

        Ok(OracleStream::new(stream, Sealer::new(&self.psk), opener))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn client_server_roundtrip() {
        let server = OracleServer::bind("127.0.0.1:0", "hunter2").unwrap();
        let addr = server.local_addr().unwrap();
        let handle = thread::spawn(move || {
            let conn = server.accept().unwrap();
            let mut buf = Vec::new();
            (&conn).read_to_end(&mut buf).unwrap();
            (&conn).write_all(&buf).unwrap();
            conn.shutdown().ok();
            buf
        });

        let client = oracle_client(addr, "hunter2").unwrap();
        let payload: Vec<u8> = (0..50_000u32).map(|i| (i % 256) as u8).collect();
        (&client).write_all(&payload).unwrap();
        client.stream.shutdown(std::net::Shutdown::Write).unwrap();
        let mut echoed = Vec::new();
        (&client).read_to_end(&mut echoed).unwrap();

        assert_eq!(handle.join().unwrap(), payload);
        assert_eq!(echoed, payload);
    }

    #[test]
    fn wrong_password_fails_accept() {
        let server = OracleServer::bind("127.0.0.1:0", "correct").unwrap();
        let addr = server.local_addr().unwrap();
        let handle = thread::spawn(move || server.accept().map(|_| ()));

        let client = oracle_client(addr, "incorrect").unwrap();
        (&client).write_all(b"does not matter").ok();

        let err = handle.join().unwrap().unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::InvalidData);
    }
}
