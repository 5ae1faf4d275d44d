//! Aggregate TCP download throughput of an 802.11 access point whose stations
//! are associated at several PHY rates.
//!
//! The AP is permanently backlogged with TCP data; stations only contend when
//! they hold a TCP ACK. The number of ACK-holding stations per rate class
//! forms a Markov chain embedded at success epochs, whose stationary law has
//! a product form ([`state`]). Per-state slot events and mean sojourn times
//! ([`sojourn`]) combine through the renewal-reward theorem into the AP's
//! long-run packet rate ([`throughput`]).
//!
//! The analytical modules are generic over the scalar type ([`Real`]); the
//! `*64` aliases below are what most callers want.

pub mod attempt;
pub mod error;
pub mod oracle;
pub mod phy;
pub mod scalar;
pub mod scenario;
pub mod sojourn;
pub mod state;
pub mod throughput;

pub use attempt::{solve_beta, AttemptProbTable, BackoffParams, DEFAULT_RETRY_LIMIT};
pub use error::{Error, Result};
pub use phy::{Durations, PhyParams, RateClass, Standard};
pub use scalar::{CompensatedSum, Real};
pub use scenario::{parse_scenario, parse_scenarios, ScenarioConfig};
pub use sojourn::{event_probabilities, mean_sojourn, EventDurations, EventProbabilities};
pub use state::{DelayedAckModel, MixProbabilities, StateVector, StationaryDistribution};
pub use throughput::{
    aggregate_throughput, throughput_sweep, AnalysisOptions, SweepAxis, ThroughputReport,
};

pub type PhyParams64 = PhyParams<f64>;
pub type PhyParams32 = PhyParams<f32>;
pub type AttemptProbTable64 = AttemptProbTable<f64>;
pub type MixProbabilities64 = MixProbabilities<f64>;
pub type EventProbabilities64 = EventProbabilities<f64>;
pub type EventDurations64 = EventDurations<f64>;
pub type StationaryDistribution64 = StationaryDistribution<f64>;
pub type ThroughputReport64 = ThroughputReport<f64>;
pub type ThroughputReport32 = ThroughputReport<f32>;

/// Aggregate throughput in double precision.
pub fn analyze(cfg: &ScenarioConfig, opts: &AnalysisOptions) -> Result<ThroughputReport64> {
    aggregate_throughput::<f64>(cfg, opts)
}
