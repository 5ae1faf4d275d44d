//! Per-slot attempt probability of saturated DCF contenders.
//!
//! Decoupling fixed point: a node that sees conditional collision probability
//! `γ` attempts at rate `Γ(γ) = Σ γ^j / Σ γ^j b_j` (j = 0..=K), where `b_j`
//! is the mean number of slot opportunities spent per attempt at backoff stage
//! `j`. With `n` contenders `γ = 1 - (1 - β)^(n-1)`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Retry limit used when none is configured.
pub const DEFAULT_RETRY_LIMIT: u32 = 7;

const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackoffParams {
    pub cw_min: u32,
    pub cw_max: u32,
    /// Highest backoff stage `K` entered before a frame would be dropped.
    pub retry_limit: u32,
}

impl BackoffParams {
    pub fn new(cw_min: u32, cw_max: u32, retry_limit: u32) -> Result<Self> {
        let pow2 = |x: u32| x.checked_add(1).is_some_and(u32::is_power_of_two);
        if cw_min >= cw_max || !pow2(cw_min) || !pow2(cw_max) {
            return Err(Error::InvalidParameter(format!(
                "contention windows must satisfy cw_min < cw_max with cw+1 powers of two, got {cw_min}/{cw_max}"
            )));
        }
        Ok(Self {
            cw_min,
            cw_max,
            retry_limit,
        })
    }

    /// Number of doublings before the window saturates at `cw_max`.
    pub fn max_backoff_stage(&self) -> u32 {
        ((self.cw_max + 1) / (self.cw_min + 1)).trailing_zeros()
    }

    /// Contention window `CW_j`; backoff is drawn uniformly from `0..=CW_j`.
    pub fn window(&self, stage: u32) -> u32 {
        let doubled = (u64::from(self.cw_min) + 1) << stage.min(32);
        (doubled.min(u64::from(self.cw_max) + 1) - 1) as u32
    }

    /// Mean slot opportunities per attempt at `stage`: `CW_j / 2` countdown
    /// slots plus the slot carrying the attempt.
    pub fn mean_backoff_slots<T: Real>(&self, stage: u32) -> T {
        T::lit(f64::from(self.window(stage)) / 2.0 + 1.0)
    }

    /// `Γ(γ)`: attempt rate of a node whose attempts collide with probability `γ`.
    pub fn attempt_rate<T: Real>(&self, gamma: T) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        let mut g = T::one();
        for stage in 0..=self.retry_limit {
            num = num + g;
            den = den + g * self.mean_backoff_slots::<T>(stage);
            g = g * gamma;
        }
        num / den
    }

    /// `|β − Γ(1 − (1−β)^(n−1))|` at a candidate `beta`.
    pub fn residual<T: Real>(&self, n_nodes: usize, beta: T) -> T {
        (beta - self.map(n_nodes, beta)).abs()
    }

    fn map<T: Real>(&self, n_nodes: usize, beta: T) -> T {
        let gamma = T::one() - (T::one() - beta).powi(n_nodes as i32 - 1);
        self.attempt_rate(gamma)
    }
}

/// Attempt probability `β` when `n_nodes` saturated nodes contend.
pub fn solve_beta<T: Real>(n_nodes: usize, bp: &BackoffParams, tol: T) -> Result<T> {
    if n_nodes == 0 {
        return Err(Error::InvalidParameter(
            "need at least one contender".into(),
        ));
    }
    if !(tol > T::zero() && tol < T::lit(1e-3)) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} outside (0, 1e-3)"
        )));
    }
    let half = T::lit(0.5);
    let mut beta = bp.attempt_rate(T::zero());
    for _ in 0..MAX_ITERATIONS {
        let next = bp.map(n_nodes, beta);
        if (next - beta).abs() < tol {
            return Ok(beta);
        }
        beta = half * beta + half * next;
    }
    bisect(n_nodes, bp, tol)
}

// β − map(β) is increasing on (0, 1): negative near 0, positive at 1.
fn bisect<T: Real>(n_nodes: usize, bp: &BackoffParams, tol: T) -> Result<T> {
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid - bp.map(n_nodes, mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if bp.residual(n_nodes, mid) < tol {
            return Ok(mid);
        }
    }
    Err(Error::NoConvergence { nodes: n_nodes })
}

/// `β(n)` for `n = 1..=n_max` contenders.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptProbTable<T> {
    beta: Vec<T>,
}

impl<T: Real> AttemptProbTable<T> {
    pub fn build(n_max: usize, bp: &BackoffParams) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("table needs n_max >= 1".into()));
        }
        let tol = T::default_tol();
        let beta = (1..=n_max)
            .map(|n| solve_beta(n, bp, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { beta })
    }

    /// `β` with `n` contenders; panics outside `1..=n_max`.
    pub fn get(&self, n: usize) -> T {
        self.beta[n - 1]
    }

    pub fn n_max(&self) -> usize {
        self.beta.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.beta
    }
}
