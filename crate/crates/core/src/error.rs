use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate must be positive and finite, got {0} bit/s")]
    NonPositiveRate(f64),

    #[error("attempt probability {0} is outside (0, 1)")]
    BetaOutOfRange(f64),

    #[error("attempt-probability fixed point for {nodes} contenders did not converge")]
    NoConvergence { nodes: usize },

    #[error("state space has {states} states, above the budget of {budget}; reduce N_max or the number of rate classes")]
    StateBudget { states: u128, budget: u128 },

    #[error("truncation level {0} is too large (factorials overflow above 170)")]
    TruncationTooLarge(usize),

    #[error("sojourn time is undefined: no success event has positive probability")]
    DegenerateSojourn,

    #[error("power iteration did not reach residual {tol:e} within {iterations} iterations")]
    OracleNoConvergence { tol: f64, iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("cannot parse scenario: {0}")]
    Parse(String),
}
