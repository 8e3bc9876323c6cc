//! Event logging: one line per event, `ts level instance_id message`.

use std::fmt;
use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(i32)]
pub enum LogLevel {
    Error = 0,
    Warn = 1,
    Info = 2,
    Debug = 3,
}

impl LogLevel {
    pub fn from_i32(level: i32) -> Option<LogLevel> {
        Some(match level {
            0 => LogLevel::Error,
            1 => LogLevel::Warn,
            2 => LogLevel::Info,
            3 => LogLevel::Debug,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogLevel::Error => "error",
            LogLevel::Warn => "warn",
            LogLevel::Info => "info",
            LogLevel::Debug => "debug",
        }
    }

    pub fn parse(s: &str) -> Option<LogLevel> {
        Some(match s {
            "error" => LogLevel::Error,
            "warn" => LogLevel::Warn,
            "info" => LogLevel::Info,
            "debug" => LogLevel::Debug,
            _ => return None,
        })
    }
}

impl fmt::Display for LogLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Receiver for runtime and guest log events.
pub trait LogSink: Send + Sync {
    fn log(&self, level: LogLevel, instance_id: u64, message: &str);
}

/// Formats one event in the pinned line layout.
pub fn format_line(level: LogLevel, instance_id: u64, message: &str) -> String {
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    format!("{}.{:06} {} {} {}", ts.as_secs(), ts.subsec_micros(), level, instance_id, message)
}

/// Default sink: one formatted line per event on stderr.
pub struct StderrSink;

impl LogSink for StderrSink {
    fn log(&self, level: LogLevel, instance_id: u64, message: &str) {
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err, "{}", format_line(level, instance_id, message));
    }
}

/// Capturing sink for tests.
#[derive(Default)]
pub struct MemorySink {
    events: Mutex<Vec<(LogLevel, u64, String)>>,
}

impl MemorySink {
    pub fn new() -> Arc<MemorySink> {
        Arc::new(MemorySink::default())
    }

    pub fn events(&self) -> Vec<(LogLevel, u64, String)> {
        self.events.lock().unwrap().clone()
    }
}

impl LogSink for MemorySink {
    fn log(&self, level: LogLevel, instance_id: u64, message: &str) {
        self.events.lock().unwrap().push((level, instance_id, message.to_owned()));
    }
}

/// Per-instance filtered logger handle.
#[derive(Clone)]
pub(crate) struct Logger {
    sink: Arc<dyn LogSink>,
    level: LogLevel,
    instance_id: u64,
}

impl Logger {
    pub(crate) fn new(sink: Arc<dyn LogSink>, level: LogLevel, instance_id: u64) -> Logger {
        Logger { sink, level, instance_id }
    }

    pub(crate) fn enabled(&self, level: LogLevel) -> bool {
        level <= self.level
    }

    pub(crate) fn log(&self, level: LogLevel, message: &str) {
        if self.enabled(level) {
            self.sink.log(level, self.instance_id, message);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_shape() {
        let line = format_line(LogLevel::Info, 7, "hello");
        let mut parts = line.splitn(4, ' ');
        let ts = parts.next().unwrap();
        assert!(ts.parse::<f64>().is_ok(), "timestamp field: {ts}");
        assert_eq!(parts.next(), Some("info"));
        assert_eq!(parts.next(), Some("7"));
        assert_eq!(parts.next(), Some("hello"));
    }

    #[test]
    fn level_filtering() {
        let sink = MemorySink::new();
        let logger = Logger::new(sink.clone(), LogLevel::Warn, 1);
        logger.log(LogLevel::Error, "kept");
        logger.log(LogLevel::Info, "dropped");
        let events = sink.events();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].2, "kept");
    }
}
