//! The caller-facing virtual socket.

use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::instance::{CancelHandle, WorkerCell};
use crate::pipe::PipeEnd;

/// A bidirectional byte stream whose traffic is transformed by a guest
/// instance before it touches the network.
///
/// One concurrent reader plus one concurrent writer are supported; `Read`
/// and `Write` are implemented for `&VirtualConn` so the two halves can live
/// on separate threads, like `TcpStream`.
pub struct VirtualConn {
    caller: PipeEnd,
    cancel: CancelHandle,
    worker: Arc<WorkerCell>,
    id: u64,
    closed: AtomicBool,
}

impl std::fmt::Debug for VirtualConn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VirtualConn")
            .field("instance_id", &self.id)
            .field("closed", &self.closed.load(Ordering::SeqCst))
            .field("worker_finished", &self.worker.finished())
            .finish()
    }
}

impl VirtualConn {
    pub(crate) fn new(
        caller: PipeEnd,
        cancel: CancelHandle,
        worker: Arc<WorkerCell>,
        id: u64,
    ) -> VirtualConn {
        VirtualConn { caller, cancel, worker, id, closed: AtomicBool::new(false) }
    }

    pub fn instance_id(&self) -> u64 {
        self.id
    }

    /// Reads up to `buf.len()` bytes; `Ok(0)` is end-of-stream (peer or
    /// guest closed, or this handle was closed).
    pub fn read(&self, buf: &mut [u8]) -> Result<usize> {
        Ok(self.caller.read(buf))
    }

    /// Writes from `buf`, blocking on shuttle-buffer backpressure. Fails
    /// once the connection is closed or its instance is gone.
    pub fn write(&self, buf: &[u8]) -> Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        if self.closed.load(Ordering::SeqCst) {
            return Err(Error::FailedIo("connection closed".to_owned()));
        }
        self.caller.write(buf).map_err(|e| Error::FailedIo(e.to_string()))
    }

    pub fn write_all(&self, mut buf: &[u8]) -> Result<()> {
        while !buf.is_empty() {
            let n = self.write(buf)?;
            buf = &buf[n..];
        }
        Ok(())
    }

    /// Orderly close: the guest observes end-of-stream on the internal
    /// descriptor, finishes its flush, and closes its network side.
    pub fn close(&self) {
        self.closed.store(true, Ordering::SeqCst);
        self.caller.close();
    }

    /// Abortive close: signals the cancel descriptor and releases every
    /// blocking operation; returns once the worker has exited (bounded).
    pub fn cancel(&self) {
        self.closed.store(true, Ordering::SeqCst);
        self.cancel.cancel();
        self.caller.close();
        self.worker.wait(Duration::from_secs(1));
    }

    /// True once the guest worker has returned or trapped.
    pub fn worker_finished(&self) -> bool {
        self.worker.finished()
    }
}

impl Drop for VirtualConn {
    fn drop(&mut self) {
        self.cancel();
    }
}

fn to_io(err: Error) -> io::Error {
    io::Error::new(io::ErrorKind::BrokenPipe, err.to_string())
}

impl io::Read for &VirtualConn {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        VirtualConn::read(self, buf).map_err(to_io)
    }
}

impl io::Write for &VirtualConn {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        VirtualConn::write(self, buf).map_err(to_io)
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl io::Read for VirtualConn {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        VirtualConn::read(self, buf).map_err(to_io)
    }
}

impl io::Write for VirtualConn {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        VirtualConn::write(self, buf).map_err(to_io)
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
