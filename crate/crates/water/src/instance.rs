//! Guest instance lifecycle: instantiation, the ABI entry-point calls, and
//! the per-connection worker thread.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;
use wasmi::{Instance, Linker, Store, TypedFunc};

use crate::abi;
use crate::bridge::{self, Resource, Table, Teardown};
use crate::config::InstanceConfig;
use crate::error::{Error, Result};
use crate::image::WATMImage;
use crate::logging::{LogLevel, Logger};
use crate::pipe::{pipe_pair, PipeEnd, Ring};

static NEXT_INSTANCE_ID: AtomicU64 = AtomicU64::new(1);

/// Store data: everything the host imports operate on.
pub(crate) struct InstanceState {
    pub(crate) table: Table,
    pub(crate) config_blob: Arc<[u8]>,
    pub(crate) logger: Logger,
    pub(crate) rng: StdRng,
    pub(crate) init_started: bool,
    pub(crate) teardown: Arc<Teardown>,
}

impl InstanceState {
    pub(crate) fn new(config: &InstanceConfig, instance_id: u64) -> InstanceState {
        let logger =
            Logger::new(config.log_sink_handle(), config.log_level_value(), instance_id);
        let rng = match config.rng_seed_value() {
            Some(seed) => StdRng::seed_from_u64(seed),
            None => StdRng::from_os_rng(),
        };
        InstanceState {
            table: Table::new(),
            config_blob: Arc::from(config.blob_bytes().to_vec()),
            logger,
            rng,
            init_started: false,
            teardown: Arc::new(Teardown::default()),
        }
    }
}

/// Observed completion state of a worker thread.
pub(crate) struct WorkerCell {
    result: Mutex<Option<Result<i32>>>,
    cond: Condvar,
}

impl WorkerCell {
    fn new() -> Arc<WorkerCell> {
        Arc::new(WorkerCell { result: Mutex::new(None), cond: Condvar::new() })
    }

    fn set(&self, result: Result<i32>) {
        let mut slot = self.result.lock().unwrap();
        *slot = Some(result);
        self.cond.notify_all();
    }

    pub(crate) fn finished(&self) -> bool {
        self.result.lock().unwrap().is_some()
    }

    /// Waits up to `timeout` for the worker to report; true if it did.
    pub(crate) fn wait(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut slot = self.result.lock().unwrap();
        while slot.is_none() {
            let now = Instant::now();
            if now >= deadline {
                return false;
            }
            let (guard, _) = self.cond.wait_timeout(slot, deadline - now).unwrap();
            slot = guard;
        }
        true
    }
}

/// Cross-thread cancellation for one instance. Signals the cancel
/// descriptor (clean path) and releases every blocking resource (hard
/// path), so any blocked accept/read/worker returns promptly.
#[derive(Clone)]
pub struct CancelHandle {
    ring: Option<Arc<Ring>>,
    teardown: Arc<Teardown>,
}

impl CancelHandle {
    pub(crate) fn cancel(&self) {
        if let Some(ring) = &self.ring {
            let _ = ring.write(&[1]);
        }
        self.teardown.fire();
    }
}

/// A live guest instance before its worker is detached.
pub(crate) struct GuestInstance {
    pub(crate) store: Store<InstanceState>,
    pub(crate) instance: Instance,
    pub(crate) id: u64,
    cancel_ring: Option<Arc<Ring>>,
}

impl GuestInstance {
    /// Instantiates the module with the full import set and verifies the
    /// version marker.
    pub(crate) fn instantiate(image: &WATMImage, config: &InstanceConfig) -> Result<GuestInstance> {
        config.validate()?;
        let id = NEXT_INSTANCE_ID.fetch_add(1, Ordering::Relaxed);
        let mut store = Store::new(image.engine(), InstanceState::new(config, id));
        let mut linker = Linker::new(image.engine());
        bridge::add_to_linker(&mut linker)?;
        let instance = linker
            .instantiate_and_start(&mut store, image.module())
            .map_err(|e| Error::InvalidModule(e.to_string()))?;

        let version: TypedFunc<(), i32> = instance
            .get_typed_func(&store, abi::EXPORT_VERSION)
            .map_err(|e| Error::InvalidExports(e.to_string()))?;
        let reported = version.call(&mut store, ()).map_err(|e| Error::Trap(e.to_string()))?;
        if reported != abi::ABI_VERSION {
            return Err(Error::InvalidExports(format!(
                "version marker returned {reported}, want {}",
                abi::ABI_VERSION
            )));
        }
        Ok(GuestInstance { store, instance, id, cancel_ring: None })
    }

    fn call_i32(&mut self, name: &str, arg: Option<i32>) -> Result<i32> {
        let result = match arg {
            Some(arg) => {
                let func: TypedFunc<i32, i32> = self
                    .instance
                    .get_typed_func(&self.store, name)
                    .map_err(|e| Error::InvalidExports(e.to_string()))?;
                func.call(&mut self.store, arg)
            }
            None => {
                let func: TypedFunc<(), i32> = self
                    .instance
                    .get_typed_func(&self.store, name)
                    .map_err(|e| Error::InvalidExports(e.to_string()))?;
                func.call(&mut self.store, ())
            }
        };
        result.map_err(|e| Error::Trap(e.to_string()))
    }

    /// Raw entry-point call: traps become errors, status codes pass through.
    pub(crate) fn call_raw(&mut self, name: &str, arg: Option<i32>) -> Result<i32> {
        self.call_i32(name, arg)
    }

    pub(crate) fn call_init(&mut self) -> Result<()> {
        self.store.data_mut().init_started = true;
        let rc = self.call_i32(abi::EXPORT_INIT, None)?;
        if rc != 0 {
            return Err(Error::from_guest_code(rc));
        }
        Ok(())
    }

    /// Pushes an accepted/inbound TCP stream; on a fresh instance this lands
    /// on [`abi::ACCEPTED_FD`].
    pub(crate) fn push_net(&mut self, stream: std::net::TcpStream) -> Result<i32> {
        bridge::push_net_stream(self.store.data_mut(), stream)
    }

    /// Creates the internal shuttle pipe; returns the caller end and the
    /// guest descriptor.
    pub(crate) fn make_internal(&mut self, capacity: usize) -> (PipeEnd, i32) {
        let (caller_end, guest_end) = pipe_pair(capacity);
        let state = self.store.data_mut();
        state.teardown.register_ring(guest_end.rx_ring().clone());
        state.teardown.register_ring(guest_end.tx_ring().clone());
        let fd = state.table.push(Resource::Pipe(guest_end));
        (caller_end, fd)
    }

    /// Creates the cancel descriptor and registers it with the guest if the
    /// module exports `_water_cancel_with`.
    pub(crate) fn setup_cancel(&mut self) -> Result<()> {
        let ring = Ring::new(bridge::CANCEL_RING_CAP);
        self.cancel_ring = Some(ring.clone());
        let state = self.store.data_mut();
        state.teardown.register_ring(ring.clone());
        let fd = state.table.push(Resource::Cancel(ring));
        if self.instance.get_export(&self.store, abi::EXPORT_CANCEL_WITH).is_some() {
            let rc = self.call_i32(abi::EXPORT_CANCEL_WITH, Some(fd))?;
            if rc != 0 {
                return Err(Error::from_guest_code(rc));
            }
        }
        Ok(())
    }

    pub(crate) fn cancel_handle(&self) -> CancelHandle {
        CancelHandle {
            ring: self.cancel_ring.clone(),
            teardown: self.store.data().teardown.clone(),
        }
    }

    pub(crate) fn call_dial(&mut self, internal_fd: i32) -> Result<i32> {
        let rc = self.call_i32(abi::EXPORT_DIAL, Some(internal_fd))?;
        if rc < 0 {
            return Err(Error::from_guest_code(rc));
        }
        Ok(rc)
    }

    pub(crate) fn call_accept(&mut self, internal_fd: i32) -> Result<i32> {
        let rc = self.call_i32(abi::EXPORT_ACCEPT, Some(internal_fd))?;
        if rc < 0 {
            return Err(Error::from_guest_code(rc));
        }
        Ok(rc)
    }

    pub(crate) fn call_associate(&mut self) -> Result<()> {
        let rc = self.call_i32(abi::EXPORT_ASSOCIATE, None)?;
        if rc != 0 {
            return Err(Error::from_guest_code(rc));
        }
        Ok(())
    }

    pub(crate) fn logger(&self) -> Logger {
        self.store.data().logger.clone()
    }

    /// Runs `_water_worker` on the current thread, consuming the instance.
    /// Descriptors are closed when the store drops on return.
    pub(crate) fn run_worker(mut self) -> Result<i32> {
        self.call_i32(abi::EXPORT_WORKER, None)
    }

    /// Detaches the worker onto its own thread.
    pub(crate) fn spawn_worker(self) -> Arc<WorkerCell> {
        let cell = WorkerCell::new();
        let logger = self.logger();
        let thread_cell = cell.clone();
        std::thread::Builder::new()
            .name(format!("water-worker-{}", self.id))
            .spawn(move || {
                let result = self.run_worker();
                match &result {
                    Ok(0) => logger.log(LogLevel::Debug, "worker finished"),
                    Ok(rc) => logger
                        .log(LogLevel::Warn, &format!("worker returned {}", abi::errno_to_message(*rc))),
                    Err(err) => logger.log(LogLevel::Warn, &format!("worker failed: {err}")),
                }
                thread_cell.set(result);
            })
            .expect("spawning a worker thread");
        cell
    }
}
