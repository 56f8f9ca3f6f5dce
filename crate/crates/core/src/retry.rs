use std::time::Duration;

use tokio::time::Instant;

pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_BACKOFF_BASE: Duration = Duration::from_millis(250);

/// Exponential backoff schedule shared by the labeler and agent clients.
///
/// Retry `n` (1-based) may not start earlier than `base * 2^(n-1)` after the
/// previous attempt started. An attempt that already ran longer than that
/// (a timeout, typically) is retried immediately, so a timed-out agent
/// costs at most `timeout * (1 + max_retries)` in total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: DEFAULT_MAX_RETRIES,
            backoff_base: DEFAULT_BACKOFF_BASE,
        }
    }
}

impl RetryPolicy {
    pub fn backoff(&self, retry: u32) -> Duration {
        let shift = retry.saturating_sub(1).min(16);
        self.backoff_base.saturating_mul(1 << shift)
    }

    pub fn max_attempts(&self) -> u32 {
        self.max_retries + 1
    }

    /// Sleeps until retry `retry` is allowed to start.
    pub async fn wait_before(&self, retry: u32, previous_start: Instant) {
        tokio::time::sleep_until(previous_start + self.backoff(retry)).await;
    }
}
