//! Discrete-event simulation of an 802.11 DCF cell carrying TCP downloads.
//!
//! One AP serves every station over a TCP connection with a fixed window;
//! stations return delayed ACKs. The simulator checks the analytical model
//! in `mrwlan-core` without sharing any of its probability calculations.

pub mod config;
pub mod engine;
pub mod error;
pub mod node;
pub mod stats;

pub use config::SimConfig;
pub use engine::{
    attempt_rate_with, measure_attempt_rate, run_simulation, run_simulation_traced, SimCounters,
    SimResult,
};
pub use error::{Result, SimError};
pub use node::{NodeState, Role};
