use mrwlan_core::{ScenarioConfig, DEFAULT_RETRY_LIMIT};

use crate::error::{Result, SimError};

pub const DEFAULT_DURATION_S: f64 = 60.0;
pub const DEFAULT_WARMUP_S: f64 = 5.0;
pub const DEFAULT_WINDOW: u32 = 40;
pub const DEFAULT_BATCHES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    /// Simulated time, seconds.
    pub sim_duration: f64,
    /// Initial interval excluded from every statistic, seconds.
    pub warmup: f64,
    pub seed: u64,
    /// TCP window per connection, packets.
    pub tcp_window: u32,
    /// Backoff stage cap; frames are retried past it at `cw_max`.
    pub retry_limit: u32,
    pub collision_uses_rts_length: bool,
    pub batches: usize,
}

impl SimConfig {
    pub fn new(scenario: ScenarioConfig, seed: u64) -> Self {
        Self {
            scenario,
            sim_duration: DEFAULT_DURATION_S,
            warmup: DEFAULT_WARMUP_S,
            seed,
            tcp_window: DEFAULT_WINDOW,
            retry_limit: DEFAULT_RETRY_LIMIT,
            collision_uses_rts_length: false,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn with_duration(mut self, duration: f64, warmup: f64) -> Self {
        self.sim_duration = duration;
        self.warmup = warmup;
        self
    }

    pub fn with_window(mut self, window: u32) -> Self {
        self.tcp_window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.warmup >= 0.0 && self.sim_duration > self.warmup && self.sim_duration.is_finite())
        {
            return Err(SimError::InvalidConfig(format!(
                "need duration > warmup >= 0, got {} s / {} s",
                self.sim_duration, self.warmup
            )));
        }
        if self.tcp_window == 0 {
            return Err(SimError::InvalidConfig("TCP window must be >= 1".into()));
        }
        if self.batches < 2 {
            return Err(SimError::InvalidConfig("need at least two batches".into()));
        }
        Ok(())
    }
}
