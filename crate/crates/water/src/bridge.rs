//! Host-side plumbing behind the ABI imports: the descriptor table, real TCP
//! sockets pumped into rings, config delivery, cancellation, log forwarding,
//! and the `wasi_snapshot_preview1` subset the guests run on.

use std::io::{Read, Write};
use std::net::{Shutdown, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rand::RngCore;
use wasmi::{Caller, Extern, Linker, Memory};

use crate::abi::{self, ErrorCode};
use crate::error::{Error, Result};
use crate::instance::InstanceState;
use crate::logging::LogLevel;
use crate::pipe::{PipeEnd, PollWaker, ReadReadiness, Ring};

// WASI errno values used by this subset.
const ERRNO_SUCCESS: i32 = 0;
const ERRNO_BADF: i32 = 8;
const ERRNO_FAULT: i32 = 21;
const ERRNO_INVAL: i32 = 28;
const ERRNO_NOTSUP: i32 = 58;
const ERRNO_PIPE: i32 = 64;

const EVENTTYPE_CLOCK: u8 = 0;
const EVENTTYPE_FD_READ: u8 = 1;
const EVENTTYPE_FD_WRITE: u8 = 2;
const EVENTRWFLAGS_HANGUP: u16 = 1;

const SUBSCRIPTION_SIZE: usize = 48;
const EVENT_SIZE: usize = 32;

// Per-call transfer cap; short reads/writes are part of the contract, so
// this only bounds temporary buffers.
const MAX_XFER: usize = 1 << 20;

const NET_RING_CAP: usize = 64 * 1024;
const PUMP_CHUNK: usize = 16 * 1024;
pub(crate) const CANCEL_RING_CAP: usize = 8;

/// A TCP stream bridged into the ring world by two pump threads.
pub(crate) struct NetResource {
    /// Network → guest.
    rx: Arc<Ring>,
    /// Guest → network.
    tx: Arc<Ring>,
    stream: Arc<TcpStream>,
    pumps: Vec<JoinHandle<()>>,
}

impl NetResource {
    pub(crate) fn spawn(stream: TcpStream) -> std::io::Result<NetResource> {
        stream.set_nodelay(true)?;
        stream.set_nonblocking(false)?;
        let stream = Arc::new(stream);
        let rx = Ring::new(NET_RING_CAP);
        let tx = Ring::new(NET_RING_CAP);

        let reader = {
            let stream = stream.clone();
            let rx = rx.clone();
            std::thread::spawn(move || {
                let mut buf = vec![0u8; PUMP_CHUNK];
                loop {
                    match (&*stream).read(&mut buf) {
                        Ok(0) | Err(_) => break,
                        Ok(n) => {
                            if rx.write_all(&buf[..n]).is_err() {
                                let _ = stream.shutdown(Shutdown::Read);
                                break;
                            }
                        }
                    }
                }
                rx.close_write();
            })
        };
        let writer = {
            let stream = stream.clone();
            let tx = tx.clone();
            std::thread::spawn(move || {
                let mut buf = vec![0u8; PUMP_CHUNK];
                loop {
                    let n = tx.read(&mut buf);
                    if n == 0 {
                        break;
                    }
                    if (&*stream).write_all(&buf[..n]).is_err() {
                        tx.close_read();
                        break;
                    }
                }
                let _ = stream.shutdown(Shutdown::Write);
            })
        };

        Ok(NetResource { rx, tx, stream, pumps: vec![reader, writer] })
    }

    fn shutdown_rings(&self) {
        self.rx.close_read();
        self.tx.close_write();
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

impl Drop for NetResource {
    fn drop(&mut self) {
        self.shutdown_rings();
        for pump in self.pumps.drain(..) {
            let _ = pump.join();
        }
    }
}

pub(crate) enum Resource {
    /// Guest end of the internal shuttle pipe.
    Pipe(PipeEnd),
    Net(NetResource),
    /// Read-only cancel signal.
    Cancel(Arc<Ring>),
    /// Read-only cursor over the config blob.
    Config { blob: Arc<[u8]>, pos: usize },
}

/// Per-instance descriptor table. Indices 0–2 are reserved for the standard
/// streams and never allocated.
pub(crate) struct Table {
    slots: Vec<Option<Resource>>,
}

impl Table {
    pub(crate) fn new() -> Table {
        Table { slots: vec![None, None, None] }
    }

    pub(crate) fn push(&mut self, resource: Resource) -> i32 {
        for (i, slot) in self.slots.iter_mut().enumerate().skip(3) {
            if slot.is_none() {
                *slot = Some(resource);
                return i as i32;
            }
        }
        self.slots.push(Some(resource));
        (self.slots.len() - 1) as i32
    }

    pub(crate) fn get(&self, fd: i32) -> Option<&Resource> {
        if fd < 3 {
            return None;
        }
        self.slots.get(fd as usize).and_then(|slot| slot.as_ref())
    }

    pub(crate) fn get_mut(&mut self, fd: i32) -> Option<&mut Resource> {
        if fd < 3 {
            return None;
        }
        self.slots.get_mut(fd as usize).and_then(|slot| slot.as_mut())
    }

    pub(crate) fn close(&mut self, fd: i32) -> bool {
        if fd < 3 {
            return false;
        }
        match self.slots.get_mut(fd as usize) {
            Some(slot @ Some(_)) => {
                *slot = None;
                true
            }
            _ => false,
        }
    }

    pub(crate) fn open_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// Abortive-teardown registry shared with cancel handles: closing these
/// releases every operation the instance could be blocked on.
#[derive(Default)]
pub(crate) struct Teardown {
    fired: AtomicBool,
    items: Mutex<Vec<Box<dyn Fn() + Send>>>,
}

impl Teardown {
    pub(crate) fn register(&self, f: impl Fn() + Send + 'static) {
        if self.fired.load(Ordering::SeqCst) {
            f();
            return;
        }
        self.items.lock().unwrap().push(Box::new(f));
    }

    pub(crate) fn register_socket(&self, stream: Arc<TcpStream>) {
        self.register(move || {
            let _ = stream.shutdown(Shutdown::Both);
        });
    }

    pub(crate) fn register_ring(&self, ring: Arc<Ring>) {
        self.register(move || {
            ring.close_read();
            ring.close_write();
        });
    }

    pub(crate) fn fire(&self) {
        self.fired.store(true, Ordering::SeqCst);
        for item in self.items.lock().unwrap().iter() {
            item();
        }
    }
}

// ---------------------------------------------------------------------------
// Host import implementations (testable without an engine)
// ---------------------------------------------------------------------------

/// `water_host.host_dial`: connect a TCP stream and push it into the table.
pub(crate) fn host_dial_impl(state: &mut InstanceState, addr: &str) -> i32 {
    if !state.init_started {
        return ErrorCode::NotInitialized.as_i32();
    }
    if addr.is_empty() || !addr.contains(':') {
        return ErrorCode::InvalidArgument.as_i32();
    }
    let stream = match TcpStream::connect(addr) {
        Ok(stream) => stream,
        Err(err) => {
            state.logger.log(LogLevel::Debug, &format!("host_dial {addr}: {err}"));
            return match err.kind() {
                std::io::ErrorKind::InvalidInput => ErrorCode::InvalidArgument.as_i32(),
                _ => ErrorCode::NetworkUnreachable.as_i32(),
            };
        }
    };
    match push_net_stream(state, stream) {
        Ok(fd) => fd,
        Err(_) => ErrorCode::FailedIo.as_i32(),
    }
}

/// Pushes an established stream (dialled or accepted) into the table.
pub(crate) fn push_net_stream(state: &mut InstanceState, stream: TcpStream) -> Result<i32> {
    let net = NetResource::spawn(stream).map_err(|e| Error::FailedIo(e.to_string()))?;
    state.teardown.register_socket(net.stream.clone());
    state.teardown.register_ring(net.rx.clone());
    state.teardown.register_ring(net.tx.clone());
    Ok(state.table.push(Resource::Net(net)))
}

/// `water_host.pull_config`: fresh read-only descriptor over the blob.
pub(crate) fn pull_config_impl(state: &mut InstanceState) -> i32 {
    if !state.init_started {
        return ErrorCode::NotInitialized.as_i32();
    }
    state.table.push(Resource::Config { blob: state.config_blob.clone(), pos: 0 })
}

/// `water_host.host_log`: forward subject to the configured level.
pub(crate) fn host_log_impl(state: &mut InstanceState, level: i32, message: &[u8]) -> i32 {
    let Ok(text) = std::str::from_utf8(message) else {
        return ErrorCode::InvalidArgument.as_i32();
    };
    // Unknown numeric levels are treated as debug rather than trapping the
    // guest over a log line.
    let level = LogLevel::from_i32(level).unwrap_or(LogLevel::Debug);
    state.logger.log(level, text);
    ErrorCode::Ok.as_i32()
}

// ---------------------------------------------------------------------------
// Engine wiring
// ---------------------------------------------------------------------------

fn memory_of(caller: &mut Caller<'_, InstanceState>) -> std::result::Result<Memory, i32> {
    match caller.get_export("memory") {
        Some(Extern::Memory(memory)) => Ok(memory),
        _ => Err(ERRNO_FAULT),
    }
}

fn read_guest(
    caller: &mut Caller<'_, InstanceState>,
    ptr: i32,
    len: i32,
) -> std::result::Result<Vec<u8>, i32> {
    let memory = memory_of(caller)?;
    let data = memory.data(&*caller);
    let (ptr, len) = (ptr as u32 as usize, len as u32 as usize);
    let end = ptr.checked_add(len).ok_or(ERRNO_FAULT)?;
    if end > data.len() {
        return Err(ERRNO_FAULT);
    }
    Ok(data[ptr..end].to_vec())
}

fn write_guest(
    caller: &mut Caller<'_, InstanceState>,
    ptr: usize,
    bytes: &[u8],
) -> std::result::Result<(), i32> {
    let memory = memory_of(caller)?;
    let data = memory.data_mut(&mut *caller);
    let end = ptr.checked_add(bytes.len()).ok_or(ERRNO_FAULT)?;
    if end > data.len() {
        return Err(ERRNO_FAULT);
    }
    data[ptr..end].copy_from_slice(bytes);
    Ok(())
}

struct IoVec {
    ptr: usize,
    len: usize,
}

fn read_iovecs(
    caller: &mut Caller<'_, InstanceState>,
    iovs_ptr: i32,
    iovs_len: i32,
) -> std::result::Result<Vec<IoVec>, i32> {
    if iovs_len < 0 || iovs_len > 128 {
        return Err(ERRNO_INVAL);
    }
    let raw = read_guest(caller, iovs_ptr, iovs_len * 8)?;
    Ok(raw
        .chunks_exact(8)
        .map(|chunk| IoVec {
            ptr: u32::from_le_bytes(chunk[0..4].try_into().unwrap()) as usize,
            len: u32::from_le_bytes(chunk[4..8].try_into().unwrap()) as usize,
        })
        .collect())
}

enum ReadSource {
    Ring(Arc<Ring>),
    Config { blob: Arc<[u8]>, pos: usize },
}

fn wasi_fd_read(
    mut caller: Caller<'_, InstanceState>,
    fd: i32,
    iovs_ptr: i32,
    iovs_len: i32,
    nread_ptr: i32,
) -> i32 {
    let iovs = match read_iovecs(&mut caller, iovs_ptr, iovs_len) {
        Ok(iovs) => iovs,
        Err(errno) => return errno,
    };
    let want: usize = iovs.iter().map(|io| io.len).sum::<usize>().min(MAX_XFER);

    let source = match caller.data_mut().table.get_mut(fd) {
        Some(Resource::Pipe(end)) => ReadSource::Ring(end.rx_ring().clone()),
        Some(Resource::Net(net)) => ReadSource::Ring(net.rx.clone()),
        Some(Resource::Cancel(ring)) => ReadSource::Ring(ring.clone()),
        Some(Resource::Config { blob, pos }) => {
            ReadSource::Config { blob: blob.clone(), pos: *pos }
        }
        None => return ERRNO_BADF,
    };

    let mut buf = vec![0u8; want];
    let n = match source {
        // Blocks until at least one byte or EOF; the guest polls first on
        // the hot path, so this only blocks during handshakes.
        ReadSource::Ring(ring) => ring.read(&mut buf),
        ReadSource::Config { blob, pos } => {
            let n = blob.len().saturating_sub(pos).min(want);
            buf[..n].copy_from_slice(&blob[pos..pos + n]);
            if let Some(Resource::Config { pos: stored, .. }) = caller.data_mut().table.get_mut(fd)
            {
                *stored = pos + n;
            }
            n
        }
    };

    let mut off = 0;
    for io in &iovs {
        if off == n {
            break;
        }
        let take = io.len.min(n - off);
        if write_guest(&mut caller, io.ptr, &buf[off..off + take]).is_err() {
            return ERRNO_FAULT;
        }
        off += take;
    }
    match write_guest(&mut caller, nread_ptr as u32 as usize, &(n as u32).to_le_bytes()) {
        Ok(()) => ERRNO_SUCCESS,
        Err(errno) => errno,
    }
}

fn wasi_fd_write(
    mut caller: Caller<'_, InstanceState>,
    fd: i32,
    iovs_ptr: i32,
    iovs_len: i32,
    nwritten_ptr: i32,
) -> i32 {
    let iovs = match read_iovecs(&mut caller, iovs_ptr, iovs_len) {
        Ok(iovs) => iovs,
        Err(errno) => return errno,
    };
    let mut data = Vec::new();
    for io in &iovs {
        if data.len() >= MAX_XFER {
            break;
        }
        let take = io.len.min(MAX_XFER - data.len());
        match read_guest(&mut caller, io.ptr as i32, take as i32) {
            Ok(bytes) => data.extend_from_slice(&bytes),
            Err(errno) => return errno,
        }
    }

    let ring = match caller.data_mut().table.get_mut(fd) {
        Some(Resource::Pipe(end)) => end.tx_ring().clone(),
        Some(Resource::Net(net)) => net.tx.clone(),
        Some(Resource::Cancel(_)) | Some(Resource::Config { .. }) => return ERRNO_BADF,
        None => return ERRNO_BADF,
    };

    if data.is_empty() {
        return match write_guest(&mut caller, nwritten_ptr as u32 as usize, &0u32.to_le_bytes()) {
            Ok(()) => ERRNO_SUCCESS,
            Err(errno) => errno,
        };
    }

    let n = match ring.write(&data) {
        Ok(n) => n,
        Err(_) => return ERRNO_PIPE,
    };
    match write_guest(&mut caller, nwritten_ptr as u32 as usize, &(n as u32).to_le_bytes()) {
        Ok(()) => ERRNO_SUCCESS,
        Err(errno) => errno,
    }
}

fn wasi_fd_close(mut caller: Caller<'_, InstanceState>, fd: i32) -> i32 {
    if caller.data_mut().table.close(fd) {
        ERRNO_SUCCESS
    } else {
        ERRNO_BADF
    }
}

fn wasi_random_get(mut caller: Caller<'_, InstanceState>, ptr: i32, len: i32) -> i32 {
    if len < 0 {
        return ERRNO_INVAL;
    }
    let mut bytes = vec![0u8; len as usize];
    caller.data_mut().rng.fill_bytes(&mut bytes);
    match write_guest(&mut caller, ptr as u32 as usize, &bytes) {
        Ok(()) => ERRNO_SUCCESS,
        Err(errno) => errno,
    }
}

struct Subscription {
    userdata: u64,
    kind: SubKind,
}

enum SubKind {
    Clock { deadline: Instant },
    FdRead { fd: i32 },
    FdWrite { fd: i32 },
    Unsupported,
}

struct EventOut {
    userdata: u64,
    errno: u16,
    event_type: u8,
    nbytes: u64,
    flags: u16,
}

fn parse_subscriptions(raw: &[u8]) -> Vec<Subscription> {
    raw.chunks_exact(SUBSCRIPTION_SIZE)
        .map(|chunk| {
            let userdata = u64::from_le_bytes(chunk[0..8].try_into().unwrap());
            let tag = chunk[8];
            let kind = match tag {
                0 => {
                    let timeout = u64::from_le_bytes(chunk[24..32].try_into().unwrap());
                    let flags = u16::from_le_bytes(chunk[40..42].try_into().unwrap());
                    if flags & 1 != 0 {
                        // Absolute-time clock subscriptions are not used by
                        // the SDK and not supported here.
                        SubKind::Unsupported
                    } else {
                        let deadline = Instant::now()
                            .checked_add(Duration::from_nanos(timeout))
                            .unwrap_or_else(|| Instant::now() + Duration::from_secs(1 << 30));
                        SubKind::Clock { deadline }
                    }
                }
                1 => SubKind::FdRead {
                    fd: u32::from_le_bytes(chunk[16..20].try_into().unwrap()) as i32,
                },
                2 => SubKind::FdWrite {
                    fd: u32::from_le_bytes(chunk[16..20].try_into().unwrap()) as i32,
                },
                _ => SubKind::Unsupported,
            };
            Subscription { userdata, kind }
        })
        .collect()
}

fn eval_fd_subscription(state: &InstanceState, sub: &Subscription) -> Option<EventOut> {
    match &sub.kind {
        SubKind::FdRead { fd } => {
            let readiness = match state.table.get(*fd) {
                Some(Resource::Pipe(end)) => end.rx_ring().read_readiness(),
                Some(Resource::Net(net)) => net.rx.read_readiness(),
                Some(Resource::Cancel(ring)) => ring.read_readiness(),
                Some(Resource::Config { blob, pos }) => {
                    let left = blob.len().saturating_sub(*pos);
                    if left > 0 {
                        ReadReadiness::Data(left)
                    } else {
                        ReadReadiness::Eof
                    }
                }
                None => {
                    return Some(EventOut {
                        userdata: sub.userdata,
                        errno: ERRNO_BADF as u16,
                        event_type: EVENTTYPE_FD_READ,
                        nbytes: 0,
                        flags: 0,
                    });
                }
            };
            match readiness {
                ReadReadiness::NotReady => None,
                ReadReadiness::Data(n) => Some(EventOut {
                    userdata: sub.userdata,
                    errno: 0,
                    event_type: EVENTTYPE_FD_READ,
                    nbytes: n as u64,
                    flags: 0,
                }),
                ReadReadiness::Eof => Some(EventOut {
                    userdata: sub.userdata,
                    errno: 0,
                    event_type: EVENTTYPE_FD_READ,
                    nbytes: 0,
                    flags: EVENTRWFLAGS_HANGUP,
                }),
            }
        }
        SubKind::FdWrite { fd } => {
            let readiness = match state.table.get(*fd) {
                Some(Resource::Pipe(end)) => end.tx_ring().write_readiness(),
                Some(Resource::Net(net)) => net.tx.write_readiness(),
                Some(Resource::Cancel(_)) | Some(Resource::Config { .. }) => Some(0),
                None => {
                    return Some(EventOut {
                        userdata: sub.userdata,
                        errno: ERRNO_BADF as u16,
                        event_type: EVENTTYPE_FD_WRITE,
                        nbytes: 0,
                        flags: 0,
                    });
                }
            };
            readiness.map(|free| EventOut {
                userdata: sub.userdata,
                errno: 0,
                event_type: EVENTTYPE_FD_WRITE,
                nbytes: free as u64,
                flags: if free == 0 { EVENTRWFLAGS_HANGUP } else { 0 },
            })
        }
        SubKind::Unsupported => Some(EventOut {
            userdata: sub.userdata,
            errno: ERRNO_NOTSUP as u16,
            event_type: EVENTTYPE_CLOCK,
            nbytes: 0,
            flags: 0,
        }),
        SubKind::Clock { .. } => None,
    }
}

fn sub_rings(state: &InstanceState, sub: &Subscription) -> Option<Arc<Ring>> {
    let (fd, read) = match &sub.kind {
        SubKind::FdRead { fd } => (*fd, true),
        SubKind::FdWrite { fd } => (*fd, false),
        _ => return None,
    };
    match state.table.get(fd) {
        Some(Resource::Pipe(end)) => {
            Some(if read { end.rx_ring().clone() } else { end.tx_ring().clone() })
        }
        Some(Resource::Net(net)) => Some(if read { net.rx.clone() } else { net.tx.clone() }),
        Some(Resource::Cancel(ring)) if read => Some(ring.clone()),
        _ => None,
    }
}

fn wasi_poll_oneoff(
    mut caller: Caller<'_, InstanceState>,
    in_ptr: i32,
    out_ptr: i32,
    nsubs: i32,
    nevents_ptr: i32,
) -> i32 {
    if nsubs <= 0 || nsubs > 64 {
        return ERRNO_INVAL;
    }
    let raw = match read_guest(&mut caller, in_ptr, nsubs * SUBSCRIPTION_SIZE as i32) {
        Ok(raw) => raw,
        Err(errno) => return errno,
    };
    let subs = parse_subscriptions(&raw);

    let deadline = subs
        .iter()
        .filter_map(|sub| match sub.kind {
            SubKind::Clock { deadline } => Some(deadline),
            _ => None,
        })
        .min();

    let waker = PollWaker::new();
    let watched: Vec<Arc<Ring>> = {
        let state = caller.data();
        subs.iter().filter_map(|sub| sub_rings(state, sub)).collect()
    };
    for ring in &watched {
        ring.set_poller(Some(waker.clone()));
    }

    let events = loop {
        let state = caller.data();
        let mut events: Vec<EventOut> =
            subs.iter().filter_map(|sub| eval_fd_subscription(state, sub)).collect();
        let now = Instant::now();
        if let Some(deadline) = deadline {
            if now >= deadline {
                for sub in &subs {
                    if let SubKind::Clock { .. } = sub.kind {
                        events.push(EventOut {
                            userdata: sub.userdata,
                            errno: 0,
                            event_type: EVENTTYPE_CLOCK,
                            nbytes: 0,
                            flags: 0,
                        });
                    }
                }
            }
        }
        if !events.is_empty() {
            break events;
        }
        waker.wait(deadline);
    };

    for ring in &watched {
        ring.set_poller(None);
    }

    let mut out = vec![0u8; events.len() * EVENT_SIZE];
    for (i, event) in events.iter().enumerate() {
        let base = i * EVENT_SIZE;
        out[base..base + 8].copy_from_slice(&event.userdata.to_le_bytes());
        out[base + 8..base + 10].copy_from_slice(&event.errno.to_le_bytes());
        out[base + 10] = event.event_type;
        out[base + 16..base + 24].copy_from_slice(&event.nbytes.to_le_bytes());
        out[base + 24..base + 26].copy_from_slice(&event.flags.to_le_bytes());
    }
    if write_guest(&mut caller, out_ptr as u32 as usize, &out).is_err() {
        return ERRNO_FAULT;
    }
    match write_guest(
        &mut caller,
        nevents_ptr as u32 as usize,
        &(events.len() as u32).to_le_bytes(),
    ) {
        Ok(()) => ERRNO_SUCCESS,
        Err(errno) => errno,
    }
}

/// Registers the `water_host` and `wasi_snapshot_preview1` imports.
pub(crate) fn add_to_linker(linker: &mut Linker<InstanceState>) -> Result<()> {
    let wire = |e: wasmi::errors::LinkerError| Error::FailedIo(e.to_string());

    linker
        .func_wrap(
            abi::HOST_MODULE,
            abi::IMPORT_DIAL,
            |mut caller: Caller<'_, InstanceState>, ptr: i32, len: i32| -> i32 {
                let addr = match read_guest(&mut caller, ptr, len) {
                    Ok(bytes) => match String::from_utf8(bytes) {
                        Ok(addr) => addr,
                        Err(_) => return ErrorCode::InvalidArgument.as_i32(),
                    },
                    Err(_) => return ErrorCode::InvalidArgument.as_i32(),
                };
                host_dial_impl(caller.data_mut(), &addr)
            },
        )
        .map_err(wire)?;
    linker
        .func_wrap(
            abi::HOST_MODULE,
            abi::IMPORT_PULL_CONFIG,
            |mut caller: Caller<'_, InstanceState>| -> i32 { pull_config_impl(caller.data_mut()) },
        )
        .map_err(wire)?;
    linker
        .func_wrap(
            abi::HOST_MODULE,
            abi::IMPORT_LOG,
            |mut caller: Caller<'_, InstanceState>, level: i32, ptr: i32, len: i32| -> i32 {
                let message = match read_guest(&mut caller, ptr, len) {
                    Ok(bytes) => bytes,
                    Err(_) => return ErrorCode::InvalidArgument.as_i32(),
                };
                host_log_impl(caller.data_mut(), level, &message)
            },
        )
        .map_err(wire)?;
    linker
        .func_wrap(
            abi::HOST_MODULE,
            abi::IMPORT_DEFER,
            |_caller: Caller<'_, InstanceState>| -> i32 { ErrorCode::Ok.as_i32() },
        )
        .map_err(wire)?;

    linker.func_wrap(abi::WASI_MODULE, "fd_read", wasi_fd_read).map_err(wire)?;
    linker.func_wrap(abi::WASI_MODULE, "fd_write", wasi_fd_write).map_err(wire)?;
    linker.func_wrap(abi::WASI_MODULE, "fd_close", wasi_fd_close).map_err(wire)?;
    linker.func_wrap(abi::WASI_MODULE, "poll_oneoff", wasi_poll_oneoff).map_err(wire)?;
    linker.func_wrap(abi::WASI_MODULE, "random_get", wasi_random_get).map_err(wire)?;
    Ok(())
}
