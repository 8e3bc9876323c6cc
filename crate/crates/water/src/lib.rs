//! Runtime library for WebAssembly transport modules.
//!
//! A transport module (a `.wasm` binary satisfying the contract in
//! [`abi`]) packages a byte-stream transform — anything from an identity
//! copy to an authenticated cipher — behind a fixed set of exports. This
//! crate embeds the module in a sandboxed interpreter, wires up its imports
//! (socket dialing, config delivery, logging, cancellation, and the
//! descriptor I/O it shuttles bytes through), and presents the result to the
//! application as ordinary network objects:
//!
//! - [`Dialer`] — connect out through the module's transform,
//! - [`Listener`] — accept inbound connections the module un-transforms,
//! - [`Relay`] — forward between a local port and a remote address with the
//!   module in the middle.
//!
//! Every connection gets a fresh, isolated guest instance; a trapping or
//! misbehaving module can poison only its own [`VirtualConn`]. Modules are
//! loaded from bytes via [`WATMImage::load`], optionally pinned to a SHA-256
//! digest.
//!
//! ```no_run
//! use water::{Dialer, InstanceConfig, WATMImage};
//!
//! let image = WATMImage::from_file("plain.wasm")?;
//! let dialer = Dialer::new(image, InstanceConfig::new())?;
//! let conn = dialer.dial("example.net:443")?;
//! conn.write_all(b"hello")?;
//! # Ok::<(), water::Error>(())
//! ```

pub mod abi;
mod bridge;
mod config;
mod conn;
mod endpoints;
mod error;
#[doc(hidden)]
pub mod harness;
mod image;
mod instance;
mod logging;
mod pipe;

pub use abi::{errno_to_message, validate_exports, ErrorCode, RoleCapabilities};
pub use config::{InstanceConfig, DEFAULT_SHUTTLE_BUFFER};
pub use conn::VirtualConn;
pub use endpoints::{Dialer, Listener, Relay};
pub use error::{Error, Result};
pub use image::{Manifest, WATMImage};
pub use logging::{format_line, LogLevel, LogSink, MemorySink, StderrSink};
