//! Dialer, Listener, and Relay: the three endpoint roles.

use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::abi;
use crate::config::InstanceConfig;
use crate::conn::VirtualConn;
use crate::error::{Error, Result};
use crate::image::WATMImage;
use crate::instance::{CancelHandle, GuestInstance, WorkerCell};
use crate::logging::LogLevel;

const ACCEPT_POLL: Duration = Duration::from_millis(10);

fn inject_remote(config: &InstanceConfig, remote: &str) -> InstanceConfig {
    // Later lines override earlier ones in the config grammar, so appending
    // is enough to pin the remote address.
    config.clone().kv("remote", remote)
}

/// Outbound connector. One guest instance is created per dial.
pub struct Dialer {
    image: WATMImage,
    config: InstanceConfig,
    cancelled: AtomicBool,
}

impl Dialer {
    pub fn new(image: WATMImage, config: InstanceConfig) -> Result<Dialer> {
        if !image.capabilities().can_dial {
            return Err(Error::MissingCapability("dial"));
        }
        config.validate()?;
        Ok(Dialer { image, config, cancelled: AtomicBool::new(false) })
    }

    /// Dials `remote` through a fresh guest instance and returns the
    /// plaintext-side connection once the guest's handshake is done.
    pub fn dial(&self, remote: &str) -> Result<VirtualConn> {
        if self.cancelled.load(Ordering::SeqCst) {
            return Err(Error::Cancelled);
        }
        if remote.is_empty() {
            return Err(Error::InvalidArgument("empty remote address".to_owned()));
        }
        let config = inject_remote(&self.config, remote);
        let mut guest = GuestInstance::instantiate(&self.image, &config)?;
        guest.call_init()?;
        let (caller_end, internal_fd) = guest.make_internal(config.shuttle_buffer_bytes());
        guest.setup_cancel()?;
        let net_fd = guest.call_dial(internal_fd)?;
        guest.logger().log(LogLevel::Debug, &format!("dialed {remote}, network fd {net_fd}"));
        let cancel = guest.cancel_handle();
        let id = guest.id;
        let worker = guest.spawn_worker();
        Ok(VirtualConn::new(caller_end, cancel, worker, id))
    }

    /// Makes subsequent dials fail. Idempotent.
    pub fn cancel(&self) {
        self.cancelled.store(true, Ordering::SeqCst);
    }
}

struct ListenerInner {
    image: WATMImage,
    config: InstanceConfig,
    tcp: TcpListener,
    cancelled: AtomicBool,
    accept_lock: Mutex<()>,
}

/// Inbound acceptor. Each accepted TCP connection gets its own guest
/// instance; a failed guest handshake fails that accept only.
#[derive(Clone)]
pub struct Listener {
    inner: Arc<ListenerInner>,
}

impl Listener {
    pub fn bind(image: WATMImage, config: InstanceConfig, local: &str) -> Result<Listener> {
        if !image.capabilities().can_listen {
            return Err(Error::MissingCapability("listen"));
        }
        config.validate()?;
        let tcp = TcpListener::bind(local)?;
        tcp.set_nonblocking(true)?;
        Ok(Listener {
            inner: Arc::new(ListenerInner {
                image,
                config,
                tcp,
                cancelled: AtomicBool::new(false),
                accept_lock: Mutex::new(()),
            }),
        })
    }

    pub fn local_addr(&self) -> Result<std::net::SocketAddr> {
        Ok(self.inner.tcp.local_addr()?)
    }

    fn accept_tcp(&self) -> Result<TcpStream> {
        let _guard = self.inner.accept_lock.lock().unwrap();
        loop {
            if self.inner.cancelled.load(Ordering::SeqCst) {
                return Err(Error::Cancelled);
            }
            match self.inner.tcp.accept() {
                Ok((stream, _)) => return Ok(stream),
                Err(err) if err.kind() == std::io::ErrorKind::WouldBlock => {
                    std::thread::sleep(ACCEPT_POLL);
                }
                Err(err) => return Err(err.into()),
            }
        }
    }

    /// Blocks until an inbound connection arrives and the guest's handshake
    /// succeeds.
    pub fn accept(&self) -> Result<VirtualConn> {
        let stream = self.accept_tcp()?;
        let mut guest = GuestInstance::instantiate(&self.inner.image, &self.inner.config)?;
        // The inbound descriptor must be visible to the guest before
        // anything else lands in the table (it is always ACCEPTED_FD).
        let net_fd = guest.push_net(stream)?;
        debug_assert_eq!(net_fd, abi::ACCEPTED_FD);
        guest.call_init()?;
        let (caller_end, internal_fd) =
            guest.make_internal(self.inner.config.shuttle_buffer_bytes());
        guest.setup_cancel()?;
        guest.call_accept(internal_fd)?;
        let cancel = guest.cancel_handle();
        let id = guest.id;
        let worker = guest.spawn_worker();
        Ok(VirtualConn::new(caller_end, cancel, worker, id))
    }

    /// Unblocks any pending accept within one poll interval. Idempotent.
    pub fn cancel(&self) {
        self.inner.cancelled.store(true, Ordering::SeqCst);
    }
}

struct RelayChild {
    cancel: CancelHandle,
    worker: Arc<WorkerCell>,
}

struct RelayInner {
    image: WATMImage,
    config: InstanceConfig,
    remote: String,
    tcp: TcpListener,
    cancelled: AtomicBool,
    children: Mutex<Vec<RelayChild>>,
}

/// Bidirectional forwarder: accepts on a local address and lets the guest
/// shuttle each connection to the configured remote.
#[derive(Clone)]
pub struct Relay {
    inner: Arc<RelayInner>,
}

impl Relay {
    pub fn bind(
        image: WATMImage,
        config: InstanceConfig,
        local: &str,
        remote: &str,
    ) -> Result<Relay> {
        if !image.capabilities().can_relay {
            return Err(Error::MissingCapability("relay"));
        }
        config.validate()?;
        if remote.is_empty() {
            return Err(Error::InvalidArgument("empty remote address".to_owned()));
        }
        let tcp = TcpListener::bind(local)?;
        tcp.set_nonblocking(true)?;
        Ok(Relay {
            inner: Arc::new(RelayInner {
                image,
                config,
                remote: remote.to_owned(),
                tcp,
                cancelled: AtomicBool::new(false),
                children: Mutex::new(Vec::new()),
            }),
        })
    }

    pub fn local_addr(&self) -> Result<std::net::SocketAddr> {
        Ok(self.inner.tcp.local_addr()?)
    }

    /// Serves connections until [`Relay::cancel`]. Per-connection failures
    /// are logged and do not stop the relay.
    pub fn run(&self) -> Result<()> {
        loop {
            if self.inner.cancelled.load(Ordering::SeqCst) {
                break;
            }
            match self.inner.tcp.accept() {
                Ok((stream, _)) => self.spawn_conn(stream),
                Err(err) if err.kind() == std::io::ErrorKind::WouldBlock => {
                    self.reap_children();
                    std::thread::sleep(ACCEPT_POLL);
                }
                Err(err) => return Err(err.into()),
            }
        }
        // Cancelled: release every child and give each a bounded wait.
        let children = std::mem::take(&mut *self.inner.children.lock().unwrap());
        for child in &children {
            child.cancel.cancel();
        }
        for child in &children {
            child.worker.wait(Duration::from_secs(1));
        }
        Ok(())
    }

    fn spawn_conn(&self, stream: TcpStream) {
        let inner = self.inner.clone();
        // Setup (outbound dial plus handshake) happens off the accept loop
        // so a slow remote cannot stall new connections.
        std::thread::Builder::new()
            .name("water-relay-setup".to_owned())
            .spawn(move || {
                let config = inject_remote(&inner.config, &inner.remote);
                let guest = match Self::associate(&inner, &config, stream) {
                    Ok(guest) => guest,
                    Err(err) => {
                        // Per-connection failure; the relay keeps serving.
                        config.log_sink_handle().log(
                            LogLevel::Warn,
                            0,
                            &format!("relay connection setup failed: {err}"),
                        );
                        return;
                    }
                };
                let cancel = guest.cancel_handle();
                let worker = guest.spawn_worker();
                if inner.cancelled.load(Ordering::SeqCst) {
                    cancel.cancel();
                    return;
                }
                inner.children.lock().unwrap().push(RelayChild { cancel, worker });
            })
            .expect("spawning a relay connection thread");
    }

    fn associate(
        inner: &RelayInner,
        config: &InstanceConfig,
        stream: TcpStream,
    ) -> Result<GuestInstance> {
        let mut guest = GuestInstance::instantiate(&inner.image, config)?;
        let net_fd = guest.push_net(stream)?;
        debug_assert_eq!(net_fd, abi::ACCEPTED_FD);
        guest.call_init()?;
        guest.setup_cancel()?;
        guest.call_associate()?;
        Ok(guest)
    }

    fn reap_children(&self) {
        self.inner.children.lock().unwrap().retain(|child| !child.worker.finished());
    }

    /// Stops the accept loop and cancels live connections; `run` returns
    /// once each child has been released.
    pub fn cancel(&self) {
        self.inner.cancelled.store(true, Ordering::SeqCst);
    }
}
