//! Hardened monotonic clock.
//!
//! Time comes from outside the trusted side, so a hostile host can hand back
//! regressing or repeated values. The sandbox keeps a high-water mark and
//! returns `max(source, last + 1)`: strictly increasing no matter what the
//! source does, with a minimal one-tick bump on ties or regressions.

use std::time::SystemTime;

/// Injectable source of raw timestamps, in nanoseconds.
pub trait TimeSource: Send {
    fn now(&mut self) -> u64;
}

/// Host wall clock (which may well step backwards).
pub struct SystemTimeSource;

impl TimeSource for SystemTimeSource {
    fn now(&mut self) -> u64 {
        SystemTime::now()
            .duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    }
}

#[derive(Default)]
pub struct MonotonicClock {
    last: u64,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self::default()
    }

    /// Strictly greater than every previously returned value.
    pub fn next(&mut self, source: &mut dyn TimeSource) -> u64 {
        let raw = source.now();
        let value = raw.max(self.last.wrapping_add(1));
        self.last = value;
        value
    }
}
