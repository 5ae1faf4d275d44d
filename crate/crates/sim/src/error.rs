use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    /// The AP ran out of data, so it is no longer saturated.
    #[error("AP queue drained at t = {time:.6} s; the TCP window ({window} packets) is too small to keep the AP backlogged")]
    SaturationLost { time: f64, window: u32 },

    #[error(transparent)]
    Model(#[from] mrwlan_core::Error),

    #[error("trace output failed: {0}")]
    Trace(String),
}
