use rand::Rng;

use mrwlan_core::BackoffParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Ap,
    Sta { class: usize },
}

/// MAC state of one contender.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub role: Role,
    pub backoff_counter: u32,
    pub backoff_stage: u32,
    /// Frames waiting at the MAC: TCP ACKs for a station, data for the AP.
    pub queue: u32,
    /// Data packets received since the last ACK was generated.
    pub rx_data_count: u32,
}

impl NodeState {
    pub fn new(role: Role) -> Self {
        Self {
            role,
            backoff_counter: 0,
            backoff_stage: 0,
            queue: 0,
            rx_data_count: 0,
        }
    }

    pub fn contending(&self) -> bool {
        self.queue > 0
    }

    /// Fresh backoff at stage 0, as after a success or on a new frame.
    pub fn reset_backoff<R: Rng>(&mut self, bp: &BackoffParams, rng: &mut R) {
        self.backoff_stage = 0;
        self.backoff_counter = rng.gen_range(0..=bp.window(0));
    }

    /// Doubles the window (held at `cw_max` past the retry limit) and redraws.
    pub fn collided<R: Rng>(&mut self, bp: &BackoffParams, rng: &mut R) {
        self.backoff_stage = (self.backoff_stage + 1).min(bp.retry_limit);
        self.backoff_counter = rng.gen_range(0..=bp.window(self.backoff_stage));
    }
}
