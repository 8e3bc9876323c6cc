//! Test support: drive a guest instance against scripted in-memory streams
//! instead of real sockets, and poke individual ABI entry points.
//!
//! Not part of the supported API; used by this crate's own tests and the
//! acceptance suite to control chunk boundaries exactly.

use std::io;
use std::sync::Arc;

use crate::abi;
use crate::config::InstanceConfig;
use crate::conn::VirtualConn;
use crate::error::Result;
use crate::image::WATMImage;
use crate::instance::GuestInstance;
use crate::pipe::{pipe_pair, PipeEnd};

/// Peer end of a scripted "network" stream: what the test writes here is
/// what the guest reads from its network descriptor, byte for byte, with
/// exactly the chunk boundaries the ring preserves.
pub struct ScriptedPeer {
    end: PipeEnd,
}

impl ScriptedPeer {
    pub fn write_all(&self, buf: &[u8]) -> io::Result<()> {
        let mut rest = buf;
        while !rest.is_empty() {
            let n = self.end.write(rest)?;
            rest = &rest[n..];
        }
        Ok(())
    }

    pub fn read(&self, buf: &mut [u8]) -> usize {
        self.end.read(buf)
    }

    pub fn read_exact(&self, buf: &mut [u8]) -> io::Result<()> {
        let mut off = 0;
        while off < buf.len() {
            let n = self.end.read(&mut buf[off..]);
            if n == 0 {
                return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "scripted peer eof"));
            }
            off += n;
        }
        Ok(())
    }

    pub fn close(&self) {
        self.end.close();
    }
}

/// Builds a listener-flow guest whose network side is a scripted in-memory
/// stream. Returns the peer end and the plaintext-side connection.
pub fn accept_scripted(
    image: &WATMImage,
    config: &InstanceConfig,
    net_capacity: usize,
) -> Result<(ScriptedPeer, VirtualConn)> {
    let mut guest = GuestInstance::instantiate(image, config)?;
    let (peer_end, guest_end) = pipe_pair(net_capacity);
    {
        let state = guest.store.data_mut();
        state.teardown.register_ring(guest_end.rx_ring().clone());
        state.teardown.register_ring(guest_end.tx_ring().clone());
        let fd = state.table.push(crate::bridge::Resource::Pipe(guest_end));
        debug_assert_eq!(fd, abi::ACCEPTED_FD);
    }
    guest.call_init()?;
    let (caller_end, internal_fd) = guest.make_internal(config.shuttle_buffer_bytes());
    guest.setup_cancel()?;
    guest.call_accept(internal_fd)?;
    let cancel = guest.cancel_handle();
    let id = guest.id;
    let worker = guest.spawn_worker();
    Ok((ScriptedPeer { end: peer_end }, VirtualConn::new(caller_end, cancel, worker, id)))
}

/// Low-level instance handle for exercising single ABI calls and their
/// error paths.
pub struct RawInstance {
    guest: GuestInstance,
}

impl RawInstance {
    pub fn instantiate(image: &WATMImage, config: &InstanceConfig) -> Result<RawInstance> {
        Ok(RawInstance { guest: GuestInstance::instantiate(image, config)? })
    }

    /// Calls `_water_init` and returns the raw status code.
    pub fn call_init_raw(&mut self) -> Result<i32> {
        self.guest.store.data_mut().init_started = true;
        self.guest.call_raw(abi::EXPORT_INIT, None)
    }

    /// Calls `_water_cancel_with(fd)` and returns the raw status code.
    pub fn call_cancel_with_raw(&mut self, fd: i32) -> Result<i32> {
        self.guest.call_raw(abi::EXPORT_CANCEL_WITH, Some(fd))
    }

    /// Calls `_water_v1` and returns the reported version.
    pub fn call_version(&mut self) -> Result<i32> {
        self.guest.call_raw(abi::EXPORT_VERSION, None)
    }

    /// Number of live descriptors in the guest's table.
    pub fn open_descriptors(&self) -> usize {
        self.guest.store.data().table.open_count()
    }
}

/// Exposes the bridge-level ops for direct unit testing from integration
/// tests (`pull_config` gating, `host_log` validation).
pub mod ops {
    use super::*;
    use crate::instance::InstanceState;

    pub struct BareState(InstanceState);

    pub fn bare_state(config: &InstanceConfig, init_started: bool) -> BareState {
        let mut state = InstanceState::new(config, 0);
        state.init_started = init_started;
        BareState(state)
    }

    pub fn pull_config(state: &mut BareState) -> i32 {
        crate::bridge::pull_config_impl(&mut state.0)
    }

    pub fn host_log(state: &mut BareState, level: i32, message: &[u8]) -> i32 {
        crate::bridge::host_log_impl(&mut state.0, level, message)
    }

    pub fn host_dial(state: &mut BareState, addr: &str) -> i32 {
        crate::bridge::host_dial_impl(&mut state.0, addr)
    }

    pub fn open_descriptors(state: &BareState) -> usize {
        state.0.table.open_count()
    }
}

/// Arc-wrapped scripted peer for multi-threaded tests.
pub fn shared(peer: ScriptedPeer) -> Arc<ScriptedPeer> {
    Arc::new(peer)
}
