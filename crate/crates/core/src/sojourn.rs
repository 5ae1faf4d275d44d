//! Slot events seen from one state, and the mean sojourn time in that state.
//!
//! Rate classes are indexed fastest first, so "a higher rate" means a lower
//! index. With `q = 1 − β` and `N` backlogged stations plus the AP:
//!
//! * idle: `q^{N+1}`
//! * AP success to class `i`: `p_i β q^N`
//! * AP collision while addressing class `i`: `p_i β (1 − q^N)`
//! * STA success at class `i`: `n_i β q^N`
//! * STA-only collision whose slowest member is in class `i`:
//!   `[1 − q^{n_i} − n_i β q^{n_i−1} + n_i β q^{n_i−1} (1 − q^{H_{i−1}})] · q^{L_i + 1}`,
//!   where `H_{i−1}` counts faster and `L_i` slower backlogged stations.
//!
//! Failed slots (idle, collision) restart the sojourn, successes end it.

use crate::error::{Error, Result};
use crate::phy::PhyParams;
use crate::scalar::Real;
use crate::state::MixProbabilities;

#[derive(Debug, Clone, PartialEq)]
pub struct EventProbabilities<T> {
    pub idle: T,
    pub s_ap: Vec<T>,
    pub c_ap: Vec<T>,
    pub s_sta: Vec<T>,
    pub c_sta: Vec<T>,
}

impl<T: Real> EventProbabilities<T> {
    pub fn zeroed(k: usize) -> Self {
        Self {
            idle: T::zero(),
            s_ap: vec![T::zero(); k],
            c_ap: vec![T::zero(); k],
            s_sta: vec![T::zero(); k],
            c_sta: vec![T::zero(); k],
        }
    }

    /// Sum of every event probability; one up to rounding.
    pub fn total(&self) -> T {
        let s = |v: &[T]| v.iter().copied().sum::<T>();
        self.idle + s(&self.s_ap) + s(&self.c_ap) + s(&self.s_sta) + s(&self.c_sta)
    }

    pub fn success(&self) -> T {
        let s = |v: &[T]| v.iter().copied().sum::<T>();
        s(&self.s_ap) + s(&self.s_sta)
    }
}

/// Occupancy per event kind and rate class, plus the idle slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDurations<T> {
    pub slot: T,
    pub s_ap: Vec<T>,
    pub c_ap: Vec<T>,
    pub s_sta: Vec<T>,
    pub c_sta: Vec<T>,
}

impl<T: Real> EventDurations<T> {
    pub fn from_params(params: &PhyParams<T>, rates: &[T]) -> Result<Self> {
        let mut out = Self {
            slot: params.slot_time,
            s_ap: Vec::with_capacity(rates.len()),
            c_ap: Vec::with_capacity(rates.len()),
            s_sta: Vec::with_capacity(rates.len()),
            c_sta: Vec::with_capacity(rates.len()),
        };
        for &r in rates {
            let d = params.durations(r)?;
            out.s_ap.push(d.s_ap);
            out.c_ap.push(d.c_ap);
            out.s_sta.push(d.s_sta);
            out.c_sta.push(d.c_sta);
        }
        Ok(out)
    }

    /// Multiplies every duration, including the slot, by `c`.
    pub fn scaled(&self, c: T) -> Self {
        let m = |v: &[T]| v.iter().map(|&x| x * c).collect();
        Self {
            slot: self.slot * c,
            s_ap: m(&self.s_ap),
            c_ap: m(&self.c_ap),
            s_sta: m(&self.s_sta),
            c_sta: m(&self.c_sta),
        }
    }
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta > T::zero() && beta < T::one() {
        Ok(())
    } else {
        Err(Error::BetaOutOfRange(beta.to_f64_lossy()))
    }
}

pub fn event_probabilities<T: Real>(
    state: &[u32],
    p: &MixProbabilities<T>,
    beta: T,
) -> Result<EventProbabilities<T>> {
    if state.len() != p.k() {
        return Err(Error::InvalidParameter(format!(
            "state has {} classes but the mix has {}",
            state.len(),
            p.k()
        )));
    }
    check_beta(beta)?;
    let mut out = EventProbabilities::zeroed(state.len());
    fill_event_probabilities(state, p.as_slice(), beta, &mut out);
    Ok(out)
}

/// Unchecked core of [`event_probabilities`], writing into `out`.
pub(crate) fn fill_event_probabilities<T: Real>(
    state: &[u32],
    p: &[T],
    beta: T,
    out: &mut EventProbabilities<T>,
) {
    let q = T::one() - beta;
    let n_total: u32 = state.iter().sum();
    let q_n = q.powi(n_total as i32);
    out.idle = q_n * q;
    let ap_alone = beta * q_n;
    let ap_collide = beta * (T::one() - q_n);

    let mut faster = 0u32;
    for (i, (&n, &pi)) in state.iter().zip(p).enumerate() {
        let slower = n_total - faster - n;
        let nf = T::lit(f64::from(n));
        out.s_ap[i] = pi * ap_alone;
        out.c_ap[i] = pi * ap_collide;
        out.s_sta[i] = nf * ap_alone;
        // exactly one class-i station attempts (zero when n = 0)
        let one = nf * beta * q.powi(n as i32 - 1);
        let two_or_more = if n >= 2 {
            T::one() - q.powi(n as i32) - one
        } else {
            T::zero()
        };
        let one_with_faster = one * (T::one() - q.powi(faster as i32));
        out.c_sta[i] = (two_or_more + one_with_faster) * q.powi(slower as i32 + 1);
        faster += n;
    }
}

/// Mean time from entering a state until the next successful transmission.
pub fn mean_sojourn<T: Real>(
    probs: &EventProbabilities<T>,
    durations: &EventDurations<T>,
) -> Result<T> {
    let k = probs.s_ap.len();
    if durations.s_ap.len() != k {
        return Err(Error::InvalidParameter(
            "durations and probabilities disagree on k".into(),
        ));
    }
    let mut num = probs.idle * durations.slot;
    let mut den = T::one() - probs.idle;
    for i in 0..k {
        num = num
            + probs.s_ap[i] * durations.s_ap[i]
            + probs.c_ap[i] * durations.c_ap[i]
            + probs.s_sta[i] * durations.s_sta[i]
            + probs.c_sta[i] * durations.c_sta[i];
        den = den - probs.c_ap[i] - probs.c_sta[i];
    }
    if den.is_nan() || den <= T::zero() {
        return Err(Error::DegenerateSojourn);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::Standard;
    use proptest::prelude::*;

    /// Outcome-by-outcome classification of every attempt subset of the AP
    /// and the backlogged stations; independent of the closed forms.
    fn brute_force(state: &[u32], p: &[f64], beta: f64) -> EventProbabilities<f64> {
        let k = state.len();
        let classes: Vec<usize> = state
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i, n as usize))
            .collect();
        let nodes = classes.len() + 1; // node 0 is the AP
        let mut out = EventProbabilities::zeroed(k);
        for mask in 0u32..(1 << nodes) {
            let attempts = mask.count_ones() as i32;
            let w = beta.powi(attempts) * (1.0 - beta).powi(nodes as i32 - attempts);
            let ap = mask & 1 == 1;
            let stas: Vec<usize> = (1..nodes)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| classes[b - 1])
                .collect();
            match (ap, stas.len()) {
                (false, 0) => out.idle += w,
                (true, 0) => (0..k).for_each(|i| out.s_ap[i] += w * p[i]),
                (true, _) => (0..k).for_each(|i| out.c_ap[i] += w * p[i]),
                (false, 1) => out.s_sta[stas[0]] += w,
                (false, _) => out.c_sta[*stas.iter().max().unwrap()] += w,
            }
        }
        out
    }

    fn assert_close(a: &EventProbabilities<f64>, b: &EventProbabilities<f64>, tol: f64) {
        assert!((a.idle - b.idle).abs() < tol);
        for (x, y) in [
            (&a.s_ap, &b.s_ap),
            (&a.c_ap, &b.c_ap),
            (&a.s_sta, &b.s_sta),
            (&a.c_sta, &b.c_sta),
        ] {
            for (u, v) in x.iter().zip(y) {
                assert!((u - v).abs() < tol, "{x:?} vs {y:?}");
            }
        }
    }

    fn mix(w: &[f64]) -> MixProbabilities<f64> {
        MixProbabilities::from_weights(w.to_vec()).unwrap()
    }

    #[test]
    fn empty_state_only_ap_contends() {
        let p = mix(&[0.3, 0.7]);
        let e = event_probabilities(&[0, 0], &p, 0.1).unwrap();
        assert!((e.idle - 0.9).abs() < 1e-15);
        assert!((e.s_ap[0] - 0.03).abs() < 1e-15 && (e.s_ap[1] - 0.07).abs() < 1e-15);
        assert!(e
            .c_ap
            .iter()
            .chain(&e.s_sta)
            .chain(&e.c_sta)
            .all(|&x| x == 0.0));
    }

    #[test]
    fn two_class_state_matches_enumeration() {
        let p = mix(&[0.5, 0.5]);
        let e = event_probabilities(&[1, 1], &p, 0.1).unwrap();
        assert_close(&e, &brute_force(&[1, 1], &[0.5, 0.5], 0.1), 1e-15);
        // 2^3 outcomes by hand: both STAs only, AP silent
        assert!((e.c_sta[1] - 0.1 * 0.1 * 0.9).abs() < 1e-15);
        assert_eq!(e.c_sta[0], 0.0);
    }

    #[test]
    fn empty_class_never_collides() {
        let p = mix(&[0.2, 0.3, 0.5]);
        let e = event_probabilities(&[3, 0, 2], &p, 0.07).unwrap();
        assert_eq!(e.c_sta[1], 0.0);
        assert_eq!(e.s_sta[1], 0.0);
    }

    #[test]
    fn exhaustive_agreement_up_to_twelve_nodes() {
        let p = [0.15, 0.35, 0.2, 0.3];
        let m = mix(&p);
        let mut checked = 0;
        for n in 0..=11u32 {
            crate::state::for_each_in_shell(4, n, |s| {
                for beta in [0.03, 0.2, 0.6] {
                    let e = event_probabilities(s, &m, beta).unwrap();
                    assert_close(&e, &brute_force(s, &p, beta), 1e-12);
                }
                checked += 1;
            });
        }
        assert_eq!(checked as u128, crate::state::state_count(4, 11));
    }

    #[test]
    fn rejects_bad_beta_and_shapes() {
        let p = mix(&[1.0]);
        assert!(matches!(
            event_probabilities(&[1], &p, 0.0),
            Err(Error::BetaOutOfRange(_))
        ));
        assert!(event_probabilities(&[1], &p, 1.0).is_err());
        assert!(event_probabilities(&[1, 0], &p, 0.5).is_err());
    }

    fn durations_b(rates: &[f64]) -> EventDurations<f64> {
        EventDurations::from_params(&PhyParams::standard(Standard::Dot11b), rates).unwrap()
    }

    #[test]
    fn empty_state_sojourn_is_geometric_idle_then_ap() {
        let rates = [11e6, 1e6];
        let d = durations_b(&rates);
        let p = mix(&[0.4, 0.6]);
        let beta = 0.06;
        let e = event_probabilities(&[0, 0], &p, beta).unwrap();
        let x = mean_sojourn(&e, &d).unwrap();
        let expected = ((1.0 - beta) * d.slot + beta * (0.4 * d.s_ap[0] + 0.6 * d.s_ap[1])) / beta;
        assert!((x - expected).abs() < 1e-15);
    }

    // One class, state n = 1 with 802.11b at 11 Mbit/s, evaluated by hand from
    // the two-entity slot equation: idle q^2, each success βq, collision β^2.
    #[test]
    fn single_rate_hand_value() {
        let d = durations_b(&[11e6]);
        let beta = 0.05;
        let q = 1.0 - beta;
        let t_ap = 2_155.636_363_636_36e-6;
        let t_sta = (192.0 + 74.0 * 8.0 / 11.0 + 10.0 + 192.0 + 112.0 / 11.0 + 50.0) * 1e-6;
        let t_c = (192.0 + 592.0 / 11.0 + 364.0) * 1e-6;
        let expected =
            (q * q * 20e-6 + beta * q * (t_ap + t_sta) + beta * beta * t_c) / (2.0 * beta * q);
        let e = event_probabilities(&[1], &mix(&[1.0]), beta).unwrap();
        let x = mean_sojourn(&e, &d).unwrap();
        assert!((x - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn degenerate_denominator() {
        let e = EventProbabilities {
            idle: 1.0,
            s_ap: vec![0.0],
            c_ap: vec![0.0],
            s_sta: vec![0.0],
            c_sta: vec![0.0],
        };
        assert_eq!(
            mean_sojourn(&e, &durations_b(&[1e6])),
            Err(Error::DegenerateSojourn)
        );
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(
            counts in proptest::collection::vec(0u32..15, 1..7),
            raw in proptest::collection::vec(0.01f64..1.0, 7),
            beta in 0.001f64..0.999,
        ) {
            let k = counts.len();
            let s: f64 = raw[..k].iter().sum();
            let p = mix(&raw[..k].iter().map(|w| w / s).collect::<Vec<_>>());
            let e = event_probabilities(&counts, &p, beta).unwrap();
            prop_assert!((e.total() - 1.0).abs() < 1e-12);
            for v in [&e.s_ap, &e.c_ap, &e.s_sta, &e.c_sta] {
                prop_assert!(v.iter().all(|&x| (-1e-15..=1.0).contains(&x)));
            }
        }

        #[test]
        fn sojourn_solves_slot_equation(
            counts in proptest::collection::vec(0u32..8, 1..5),
            beta in 0.01f64..0.5,
            c in 0.1f64..10.0,
        ) {
            let k = counts.len();
            let rates: Vec<f64> = [11e6, 5.5e6, 2e6, 1e6][..k].to_vec();
            let p = mix(&vec![1.0 / k as f64; k]);
            let d = durations_b(&rates);
            let e = event_probabilities(&counts, &p, beta).unwrap();
            let x = mean_sojourn(&e, &d).unwrap();
            prop_assert!(x >= d.slot);
            // substitute back: X = P_idle(δ + X) + Σ P_s T_s + Σ P_c (T_c + X)
            let mut rhs = e.idle * (d.slot + x);
            for i in 0..k {
                rhs += e.s_ap[i] * d.s_ap[i] + e.c_ap[i] * (d.c_ap[i] + x)
                    + e.s_sta[i] * d.s_sta[i] + e.c_sta[i] * (d.c_sta[i] + x);
            }
            prop_assert!((rhs - x).abs() < 1e-12 * x);
            // homogeneous of degree one in the durations
            let xs = mean_sojourn(&e, &d.scaled(c)).unwrap();
            prop_assert!((xs - c * x).abs() < 1e-12 * c * x);
            // longer successes lengthen the sojourn
            let mut longer = d.clone();
            longer.s_ap[0] *= 1.5;
            prop_assert!(mean_sojourn(&e, &longer).unwrap() > x);
        }
    }
}
