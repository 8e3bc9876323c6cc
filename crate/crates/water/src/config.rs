use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logging::{LogLevel, LogSink, StderrSink};

/// Default capacity of the internal shuttle pipe in bytes.
pub const DEFAULT_SHUTTLE_BUFFER: usize = 4096;

/// Per-instance configuration.
///
/// The config blob is opaque to the host and delivered to the guest
/// byte-exactly through `pull_config`. The remaining fields steer the host
/// side: pipe sizing, log filtering, and (for reproducible tests) the seed
/// feeding the guest's `random_get`.
#[derive(Clone)]
pub struct InstanceConfig {
    blob: Vec<u8>,
    shuttle_buffer_bytes: usize,
    log_level: LogLevel,
    log_sink: Arc<dyn LogSink>,
    rng_seed: Option<u64>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            blob: Vec::new(),
            shuttle_buffer_bytes: DEFAULT_SHUTTLE_BUFFER,
            log_level: LogLevel::Warn,
            log_sink: Arc::new(StderrSink),
            rng_seed: None,
        }
    }
}

impl InstanceConfig {
    pub fn new() -> InstanceConfig {
        InstanceConfig::default()
    }

    /// Replaces the opaque config blob.
    pub fn blob(mut self, blob: impl Into<Vec<u8>>) -> Self {
        self.blob = blob.into();
        self
    }

    /// Appends one `key=value` line to the blob (the grammar the bundled
    /// transports parse; later lines override earlier ones).
    pub fn kv(mut self, key: &str, value: &str) -> Self {
        self.push_kv(key, value);
        self
    }

    pub(crate) fn push_kv(&mut self, key: &str, value: &str) {
        if !self.blob.is_empty() && self.blob.last() != Some(&b'\n') {
            self.blob.push(b'\n');
        }
        self.blob.extend_from_slice(key.as_bytes());
        self.blob.push(b'=');
        self.blob.extend_from_slice(value.as_bytes());
        self.blob.push(b'\n');
    }

    pub fn shuttle_buffer(mut self, bytes: usize) -> Self {
        self.shuttle_buffer_bytes = bytes;
        self
    }

    pub fn log_level(mut self, level: LogLevel) -> Self {
        self.log_level = level;
        self
    }

    pub fn log_sink(mut self, sink: Arc<dyn LogSink>) -> Self {
        self.log_sink = sink;
        self
    }

    /// Seeds the guest-visible entropy source; without it the host uses OS
    /// entropy. Intended for transcript-reproduction tests.
    pub fn rng_seed(mut self, seed: u64) -> Self {
        self.rng_seed = Some(seed);
        self
    }

    pub fn blob_bytes(&self) -> &[u8] {
        &self.blob
    }

    pub fn shuttle_buffer_bytes(&self) -> usize {
        self.shuttle_buffer_bytes
    }

    pub fn log_level_value(&self) -> LogLevel {
        self.log_level
    }

    pub(crate) fn log_sink_handle(&self) -> Arc<dyn LogSink> {
        self.log_sink.clone()
    }

    pub(crate) fn rng_seed_value(&self) -> Option<u64> {
        self.rng_seed
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.shuttle_buffer_bytes == 0 {
            return Err(Error::InvalidConfig("shuttle_buffer_bytes must be >= 1".to_owned()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_lines_append() {
        let config = InstanceConfig::new().kv("password", "hunter2").kv("remote", "a:1");
        assert_eq!(config.blob_bytes(), b"password=hunter2\nremote=a:1\n");
    }

    #[test]
    fn zero_shuttle_buffer_rejected() {
        let err = InstanceConfig::new().shuttle_buffer(0).validate().unwrap_err();
        assert_eq!(err.code(), crate::abi::ErrorCode::InvalidConfig);
    }
}
