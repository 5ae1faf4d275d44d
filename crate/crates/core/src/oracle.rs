//! Numerical check of the product-form law: build the truncated embedded
//! chain explicitly and solve it by power iteration.
//!
//! From state `n` with `N` backlogged stations every one of the `N + 1`
//! entities wins with probability `1/(N+1)`. An AP win addressed to class `i`
//! (probability `p_i`) adds an ACK there, a class-`i` station win removes
//! one. Births that would leave the support at `N = n_max` become self-loops.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::state::{
    enumerate_states, stationary_distribution, DelayedAckModel, MixProbabilities, StateVector,
};

const MAX_ITERATIONS: usize = 500_000;

#[derive(Debug, Clone)]
pub struct TransitionModel {
    states: Vec<StateVector>,
    index: HashMap<StateVector, usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionModel {
    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &StateVector) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Outgoing `(target, probability)` pairs of state `i`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn probability(&self, from: &StateVector, to: &StateVector) -> f64 {
        let (Some(a), Some(b)) = (self.index_of(from), self.index_of(to)) else {
            return 0.0;
        };
        self.rows[a]
            .iter()
            .find(|(j, _)| *j == b)
            .map_or(0.0, |(_, p)| *p)
    }

    /// `v P`
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let vi = v[i];
            for &(j, p) in row {
                out[j] += vi * p;
            }
        }
    }
}

pub fn build_transitions(
    p: &MixProbabilities<f64>,
    d: u32,
    model: DelayedAckModel,
    n_max: usize,
    budget: u128,
) -> Result<TransitionModel> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "delayed-ACK factor must be >= 1".into(),
        ));
    }
    let states = enumerate_states(p.k(), n_max, budget)?;
    let index: HashMap<StateVector, usize> = states
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let inv_d = 1.0 / f64::from(d);
    // (birth scale, death scale) per winning event
    let (birth, death) = match model {
        DelayedAckModel::PerPacket => (inv_d, 1.0),
        DelayedAckModel::Literal => (1.0, inv_d),
    };

    let rows = states
        .iter()
        .enumerate()
        .map(|(here, s)| {
            let n = s.total() as usize;
            let win = 1.0 / (n + 1) as f64;
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            let mut add = |j: usize, x: f64| {
                if x > 0.0 {
                    *row.entry(j).or_insert(0.0) += x;
                }
            };
            for (i, &pi) in p.as_slice().iter().enumerate() {
                let ap = pi * win;
                let target = if n < n_max {
                    index[&s.incremented(i)]
                } else {
                    here
                };
                add(target, ap * birth);
                add(here, ap * (1.0 - birth));
                if let Some(down) = s.decremented(i) {
                    let sta = f64::from(s.counts()[i]) * win;
                    add(index[&down], sta * death);
                    add(here, sta * (1.0 - death));
                }
            }
            row.into_iter().collect()
        })
        .collect();

    Ok(TransitionModel {
        states,
        index,
        rows,
    })
}

/// Stationary vector from the uniform start.
pub fn solve_stationary(tm: &TransitionModel, tol: f64) -> Result<Vec<f64>> {
    let n = tm.len();
    solve_stationary_from(tm, vec![1.0 / n as f64; n], tol)
}

/// Power iteration on the lazy chain `(I + P)/2` until `‖vP − v‖₁ < tol`.
pub fn solve_stationary_from(tm: &TransitionModel, init: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::InvalidParameter(format!(
            "oracle tolerance {tol:e} outside (0, 1e-6]"
        )));
    }
    if init.len() != tm.len() {
        return Err(Error::InvalidParameter(
            "initial vector has the wrong length".into(),
        ));
    }
    let mut v = init;
    normalize(&mut v);
    let mut next = vec![0.0; v.len()];
    for it in 0..MAX_ITERATIONS {
        tm.apply(&v, &mut next);
        let residual: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        if residual < tol {
            normalize(&mut next);
            return Ok(next);
        }
        for (x, y) in v.iter_mut().zip(&next) {
            *x = 0.5 * (*x + y);
        }
        if it % 64 == 0 {
            normalize(&mut v);
        }
    }
    Err(Error::OracleNoConvergence {
        tol,
        iterations: MAX_ITERATIONS,
    })
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OracleComparison {
    pub states: usize,
    pub l1_distance: f64,
}

/// L1 gap between the closed form and the numerically solved chain.
pub fn compare_with_closed_form(
    p: &MixProbabilities<f64>,
    d: u32,
    model: DelayedAckModel,
    n_max: usize,
    budget: u128,
    tol: f64,
) -> Result<OracleComparison> {
    let tm = build_transitions(p, d, model, n_max, budget)?;
    let v = solve_stationary(&tm, tol)?;
    let closed = stationary_distribution(p, d, model, n_max, budget)?;
    let mut aligned = vec![0.0; tm.len()];
    for (s, pr) in &closed.support {
        aligned[tm.index_of(s).expect("same support")] = *pr;
    }
    Ok(OracleComparison {
        states: tm.len(),
        l1_distance: l1_distance(&v, &aligned),
    })
}
