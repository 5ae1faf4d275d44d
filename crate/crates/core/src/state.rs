//! State space of the embedded chain and its product-form stationary law.
//!
//! A state `(n_1, …, n_k)` counts stations of each rate class holding a TCP
//! ACK at a success epoch. With per-class ACK loads `λ_i` the stationary
//! distribution is
//!
//! ```text
//! π(n) = (N + 1) · Π λ_i^{n_i} / n_i!  /  ((1 + λ) e^λ),   λ = Σ λ_i,  N = Σ n_i
//! ```
//!
//! The normalisation follows from `Σ_{|n| = N} Π λ_i^{n_i}/n_i! = λ^N / N!`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

pub const DEFAULT_STATE_BUDGET: u128 = 50_000_000;

/// Largest truncation level whose factorials fit in `f64`.
pub const MAX_TRUNCATION: usize = 170;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateVector(Vec<u32>);

impl StateVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0; k])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// `N`, the number of ACK-backlogged stations.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn incremented(&self, class: usize) -> Self {
        let mut v = self.0.clone();
        v[class] += 1;
        Self(v)
    }

    pub fn decremented(&self, class: usize) -> Option<Self> {
        let mut v = self.0.clone();
        v[class] = v[class].checked_sub(1)?;
        Some(Self(v))
    }
}

impl From<Vec<u32>> for StateVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// How the delayed-ACK factor `d` enters the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayedAckModel {
    /// A delivered data packet produces an ACK with probability `1/d`:
    /// `λ_i = p_i / d`.
    #[default]
    PerPacket,
    /// Balance equation taken literally with `1/d` on the departure side:
    /// `λ_i = d · p_i`.
    Literal,
}

impl DelayedAckModel {
    pub fn load_factor<T: Real>(self, d: u32) -> T {
        let d = T::lit(f64::from(d));
        match self {
            DelayedAckModel::PerPacket => d.recip(),
            DelayedAckModel::Literal => d,
        }
    }
}

/// Destination mix of the AP's data packets, `p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixProbabilities<T>(Vec<T>);

impl<T: Real> MixProbabilities<T> {
    /// `p_i = m_i / M`.
    pub fn from_counts(counts: &[u32]) -> Result<Self> {
        let total: u64 = counts.iter().map(|&m| u64::from(m)).sum();
        if counts.is_empty() || total == 0 {
            return Err(Error::InvalidScenario("no stations".into()));
        }
        let m = T::lit(total as f64);
        Ok(Self(
            counts.iter().map(|&c| T::lit(f64::from(c)) / m).collect(),
        ))
    }

    /// Arbitrary nonnegative weights summing to one (within `1e-9`).
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| *w < T::zero() || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "mix weights must be finite and >= 0".into(),
            ));
        }
        let s: T = weights.iter().copied().sum();
        if (s - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(8.0)) {
            return Err(Error::InvalidParameter(format!(
                "mix weights sum to {s}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// Per-class ACK loads `λ_i`.
    pub fn loads(&self, d: u32, model: DelayedAckModel) -> Vec<T> {
        let f = model.load_factor::<T>(d);
        self.0.iter().map(|&p| p * f).collect()
    }
}

fn factorial<T: Real>(n: u32) -> T {
    (1..=n).fold(T::one(), |acc, j| acc * T::lit(f64::from(j)))
}

fn product_term<T: Real>(counts: &[u32], loads: &[T]) -> T {
    counts.iter().zip(loads).fold(T::one(), |acc, (&n, &l)| {
        acc * l.powi(n as i32) / factorial::<T>(n)
    })
}

/// `(N + 1) Π λ_i^{n_i} / n_i!`.
pub fn pi_unnormalized<T: Real>(
    state: &StateVector,
    p: &MixProbabilities<T>,
    d: u32,
    model: DelayedAckModel,
) -> T {
    let loads = p.loads(d, model);
    T::from_count(state.total() as usize + 1) * product_term(state.counts(), &loads)
}

/// `Σ_{N=0}^{n_max} (N + 1) λ^N / N!` for total load `λ`.
pub fn truncated_normalization<T: Real>(total_load: T, n_max: usize) -> T {
    let mut acc = CompensatedSum::new();
    let mut term = T::one();
    for n in 0..=n_max {
        if n > 0 {
            term = term * total_load / T::from_count(n);
        }
        acc.add(T::from_count(n + 1) * term);
    }
    acc.value()
}

/// `(1 + λ) e^λ`, the untruncated normalisation.
pub fn exact_normalization<T: Real>(total_load: T) -> T {
    (T::one() + total_load) * total_load.exp()
}

/// Normalisation of the state-space sum truncated at `Σ n_i ≤ n_max`.
pub fn normalization_constant<T: Real>(
    p: &MixProbabilities<T>,
    d: u32,
    model: DelayedAckModel,
    n_max: usize,
) -> T {
    let total: T = p.loads(d, model).into_iter().sum();
    truncated_normalization(total, n_max)
}

/// Mean of `n_i` under the untruncated law: `λ_i (λ + 2) / (λ + 1)`.
pub fn marginal_mean<T: Real>(load: T, total_load: T) -> T {
    load * (total_load + T::lit(2.0)) / (total_load + T::one())
}

/// Truncation used when none is configured.
pub fn default_n_max(d: u32) -> usize {
    30.max((5.0 * f64::from(d) + 20.0).ceil() as usize)
}

/// `C(n_max + k, k)`, saturating at `u128::MAX`.
pub fn state_count(k: usize, n_max: usize) -> u128 {
    let mut c: u128 = 1;
    for j in 1..=k as u128 {
        c = match c.checked_mul(n_max as u128 + j) {
            Some(x) => x / j,
            None => return u128::MAX,
        };
    }
    c
}

pub(crate) fn check_truncation(k: usize, n_max: usize, budget: u128) -> Result<u128> {
    if k == 0 {
        return Err(Error::InvalidScenario("no rate classes".into()));
    }
    if n_max > MAX_TRUNCATION {
        return Err(Error::TruncationTooLarge(n_max));
    }
    let states = state_count(k, n_max);
    if states > budget {
        return Err(Error::StateBudget { states, budget });
    }
    Ok(states)
}

/// Visits every composition of `n` into `k` nonnegative parts, in
/// lexicographically decreasing order, reusing one buffer.
pub fn for_each_in_shell(k: usize, n: u32, mut f: impl FnMut(&[u32])) {
    let mut a = vec![0u32; k];
    a[0] = n;
    loop {
        f(&a);
        let last = k - 1;
        let tail = a[last];
        a[last] = 0;
        let Some(i) = (0..last).rev().find(|&i| a[i] > 0) else {
            return;
        };
        a[i] -= 1;
        a[i + 1] = tail + 1;
    }
}

/// All states with `Σ n_i ≤ n_max`, grouped by ascending `N`.
pub fn enumerate_states(k: usize, n_max: usize, budget: u128) -> Result<Vec<StateVector>> {
    let count = check_truncation(k, n_max, budget)?;
    let mut out = Vec::with_capacity(count as usize);
    for n in 0..=n_max as u32 {
        for_each_in_shell(k, n, |s| out.push(StateVector(s.to_vec())));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution<T> {
    pub support: Vec<(StateVector, T)>,
    pub n_max: usize,
    /// Share of the untruncated probability mass inside the support.
    pub captured_mass: T,
}

impl<T: Real> StationaryDistribution<T> {
    pub fn probability(&self, state: &StateVector) -> Option<T> {
        self.support
            .iter()
            .find(|(s, _)| s == state)
            .map(|(_, p)| *p)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = T> + '_ {
        self.support.iter().map(|(_, p)| *p)
    }
}

/// Closed-form π over the truncated support, renormalised to sum to one.
pub fn stationary_distribution<T: Real>(
    p: &MixProbabilities<T>,
    d: u32,
    model: DelayedAckModel,
    n_max: usize,
    budget: u128,
) -> Result<StationaryDistribution<T>> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "delayed-ACK factor must be >= 1".into(),
        ));
    }
    let states = enumerate_states(p.k(), n_max, budget)?;
    let loads = p.loads(d, model);
    let weights: Vec<T> = states
        .iter()
        .map(|s| T::from_count(s.total() as usize + 1) * product_term(s.counts(), &loads))
        .collect();
    let total: T = weights
        .iter()
        .copied()
        .collect::<CompensatedSum<T>>()
        .value();
    let exact = exact_normalization(loads.iter().copied().sum());
    Ok(StationaryDistribution {
        support: states
            .into_iter()
            .zip(weights.into_iter().map(|w| w / total))
            .collect(),
        n_max,
        captured_mass: total / exact,
    })
}
