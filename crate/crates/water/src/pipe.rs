//! Bounded in-memory byte streams with blocking ends and poll integration.
//!
//! Every descriptor a guest sees — the internal shuttle pipe, pumped network
//! streams, the cancel signal — is backed by [`Ring`]s, so readiness has one
//! definition and `poll_oneoff` needs no OS support.

use std::collections::VecDeque;
use std::io;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

/// Wakes a blocked `poll_oneoff` when any watched ring changes state.
pub(crate) struct PollWaker {
    woken: Mutex<bool>,
    cond: Condvar,
}

impl PollWaker {
    pub(crate) fn new() -> Arc<PollWaker> {
        Arc::new(PollWaker { woken: Mutex::new(false), cond: Condvar::new() })
    }

    pub(crate) fn wake(&self) {
        let mut woken = self.woken.lock().unwrap();
        *woken = true;
        self.cond.notify_all();
    }

    /// Blocks until woken or until `deadline`; clears the flag on return.
    pub(crate) fn wait(&self, deadline: Option<Instant>) {
        let mut woken = self.woken.lock().unwrap();
        loop {
            if *woken {
                *woken = false;
                return;
            }
            match deadline {
                None => woken = self.cond.wait(woken).unwrap(),
                Some(deadline) => {
                    let now = Instant::now();
                    if now >= deadline {
                        return;
                    }
                    let (guard, _) = self.cond.wait_timeout(woken, deadline - now).unwrap();
                    woken = guard;
                }
            }
        }
    }
}

struct RingState {
    buf: VecDeque<u8>,
    cap: usize,
    /// Producer gone: drained reads return EOF.
    write_closed: bool,
    /// Consumer gone: writes fail.
    read_closed: bool,
    poller: Option<Arc<PollWaker>>,
}

/// One direction of byte flow with a hard capacity bound.
pub(crate) struct Ring {
    state: Mutex<RingState>,
    cond: Condvar,
}

/// Read-readiness of a ring, as reported to `poll_oneoff`.
#[derive(Debug, PartialEq, Eq)]
pub(crate) enum ReadReadiness {
    NotReady,
    /// `n` buffered bytes are available (n > 0).
    Data(usize),
    /// No more data will ever arrive.
    Eof,
}

impl Ring {
    pub(crate) fn new(cap: usize) -> Arc<Ring> {
        assert!(cap >= 1);
        Arc::new(Ring {
            state: Mutex::new(RingState {
                buf: VecDeque::with_capacity(cap),
                cap,
                write_closed: false,
                read_closed: false,
                poller: None,
            }),
            cond: Condvar::new(),
        })
    }

    fn signal(state: &mut RingState, cond: &Condvar) {
        cond.notify_all();
        if let Some(poller) = &state.poller {
            poller.wake();
        }
    }

    /// Blocks until at least one byte is available, then fills as much of
    /// `buf` as is buffered. Returns 0 at EOF.
    pub(crate) fn read(&self, buf: &mut [u8]) -> usize {
        if buf.is_empty() {
            return 0;
        }
        let mut state = self.state.lock().unwrap();
        loop {
            if !state.buf.is_empty() {
                let n = buf.len().min(state.buf.len());
                for slot in buf[..n].iter_mut() {
                    *slot = state.buf.pop_front().unwrap();
                }
                Self::signal(&mut state, &self.cond);
                return n;
            }
            if state.write_closed || state.read_closed {
                return 0;
            }
            state = self.cond.wait(state).unwrap();
        }
    }

    /// Blocks until space exists, then writes as much of `buf` as fits.
    /// Fails with `BrokenPipe` once the consumer is gone.
    pub(crate) fn write(&self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        let mut state = self.state.lock().unwrap();
        loop {
            if state.read_closed {
                return Err(io::Error::new(io::ErrorKind::BrokenPipe, "ring consumer closed"));
            }
            if state.write_closed {
                return Err(io::Error::new(io::ErrorKind::BrokenPipe, "ring producer closed"));
            }
            let free = state.cap - state.buf.len();
            if free > 0 {
                let n = buf.len().min(free);
                state.buf.extend(&buf[..n]);
                Self::signal(&mut state, &self.cond);
                return Ok(n);
            }
            state = self.cond.wait(state).unwrap();
        }
    }

    pub(crate) fn write_all(&self, mut buf: &[u8]) -> io::Result<()> {
        while !buf.is_empty() {
            let n = self.write(buf)?;
            buf = &buf[n..];
        }
        Ok(())
    }

    /// Producer side is done; readers drain whatever is buffered, then EOF.
    pub(crate) fn close_write(&self) {
        let mut state = self.state.lock().unwrap();
        state.write_closed = true;
        Self::signal(&mut state, &self.cond);
    }

    /// Consumer side is gone; buffered bytes are dropped and writers fail.
    pub(crate) fn close_read(&self) {
        let mut state = self.state.lock().unwrap();
        state.read_closed = true;
        state.buf.clear();
        Self::signal(&mut state, &self.cond);
    }

    pub(crate) fn read_readiness(&self) -> ReadReadiness {
        let state = self.state.lock().unwrap();
        if !state.buf.is_empty() {
            ReadReadiness::Data(state.buf.len())
        } else if state.write_closed || state.read_closed {
            ReadReadiness::Eof
        } else {
            ReadReadiness::NotReady
        }
    }

    /// For write subscriptions: `Some(free)` when a write would make
    /// progress (or fail fast); `None` when it would block.
    pub(crate) fn write_readiness(&self) -> Option<usize> {
        let state = self.state.lock().unwrap();
        if state.read_closed || state.write_closed {
            Some(0)
        } else {
            let free = state.cap - state.buf.len();
            if free > 0 {
                Some(free)
            } else {
                None
            }
        }
    }

    pub(crate) fn set_poller(&self, waker: Option<Arc<PollWaker>>) {
        self.state.lock().unwrap().poller = waker;
    }
}

/// One end of a duplex in-memory stream.
pub(crate) struct PipeEnd {
    rx: Arc<Ring>,
    tx: Arc<Ring>,
}

impl PipeEnd {
    pub(crate) fn read(&self, buf: &mut [u8]) -> usize {
        self.rx.read(buf)
    }

    pub(crate) fn write(&self, buf: &[u8]) -> io::Result<usize> {
        self.tx.write(buf)
    }

    pub(crate) fn close(&self) {
        self.rx.close_read();
        self.tx.close_write();
    }

    pub(crate) fn rx_ring(&self) -> &Arc<Ring> {
        &self.rx
    }

    pub(crate) fn tx_ring(&self) -> &Arc<Ring> {
        &self.tx
    }
}

impl Drop for PipeEnd {
    fn drop(&mut self) {
        self.close();
    }
}

/// Connected pair of duplex endpoints; each direction holds at most `cap`
/// bytes, which is what gives deterministic backpressure.
pub(crate) fn pipe_pair(cap: usize) -> (PipeEnd, PipeEnd) {
    let a_to_b = Ring::new(cap);
    let b_to_a = Ring::new(cap);
    let a = PipeEnd { rx: b_to_a.clone(), tx: a_to_b.clone() };
    let b = PipeEnd { rx: a_to_b, tx: b_to_a };
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;
    use std::time::Duration;

    #[test]
    fn bytes_flow_both_directions() {
        let (a, b) = pipe_pair(16);
        a.write(b"x").unwrap();
        let mut buf = [0u8; 4];
        assert_eq!(b.read(&mut buf), 1);
        assert_eq!(buf[0], b'x');

        b.write(b"yz").unwrap();
        assert_eq!(a.read(&mut buf), 2);
        assert_eq!(&buf[..2], b"yz");
    }

    #[test]
    fn close_yields_eof_on_peer() {
        let (a, b) = pipe_pair(16);
        a.write(b"tail").unwrap();
        a.close();
        let mut buf = [0u8; 8];
        assert_eq!(b.read(&mut buf), 4);
        assert_eq!(b.read(&mut buf), 0);
        assert!(b.write(b"x").is_err());
    }

    #[test]
    fn capacity_bounds_buffering() {
        let (a, b) = pipe_pair(4);
        assert_eq!(a.write(b"123456").unwrap(), 4);
        let writer = {
            let ring = a.tx_ring().clone();
            thread::spawn(move || ring.write_all(b"7890"))
        };
        // The writer must be blocked: nothing has been drained.
        thread::sleep(Duration::from_millis(50));
        assert!(!writer.is_finished());
        let mut buf = [0u8; 8];
        assert_eq!(b.read(&mut buf), 4);
        writer.join().unwrap().unwrap();
        assert_eq!(b.read(&mut buf), 4);
        assert_eq!(&buf[..4], b"7890");
    }

    #[test]
    fn poller_woken_on_data() {
        let ring = Ring::new(8);
        let waker = PollWaker::new();
        ring.set_poller(Some(waker.clone()));
        assert_eq!(ring.read_readiness(), ReadReadiness::NotReady);

        let ring2 = ring.clone();
        let t = thread::spawn(move || {
            thread::sleep(Duration::from_millis(20));
            ring2.write(b"!").unwrap();
        });
        waker.wait(Some(Instant::now() + Duration::from_secs(5)));
        assert_eq!(ring.read_readiness(), ReadReadiness::Data(1));
        t.join().unwrap();
    }

    #[test]
    fn interleaved_transfer_preserves_bytes() {
        let (a, b) = pipe_pair(7);
        let payload: Vec<u8> = (0..10_000u32).map(|i| (i % 251) as u8).collect();
        let expected = payload.clone();
        let writer = thread::spawn(move || {
            let mut off = 0;
            while off < payload.len() {
                let n = (off % 13) + 1;
                let end = (off + n).min(payload.len());
                off += a.write(&payload[off..end]).unwrap();
            }
            a.close();
        });
        let mut out = Vec::new();
        let mut buf = [0u8; 11];
        loop {
            let n = b.read(&mut buf);
            if n == 0 {
                break;
            }
            out.extend_from_slice(&buf[..n]);
        }
        writer.join().unwrap();
        assert_eq!(out, expected);
    }
}
