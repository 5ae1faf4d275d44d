//! Aggregate AP throughput by the renewal-reward theorem.
//!
//! Each success epoch of the embedded chain closes a cycle; the AP earns one
//! packet when it is the winner, which happens with probability `1/(N+1)`.
//! Over the truncated support,
//!
//! ```text
//! Φ = Σ π(n) / (N + 1)  /  Σ π(n) E_n[X]      [packets/s]
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::attempt::{AttemptProbTable, DEFAULT_RETRY_LIMIT};
use crate::error::{Error, Result};
use crate::phy::PhyParams;
use crate::scalar::{CompensatedSum, Real};
use crate::scenario::ScenarioConfig;
use crate::sojourn::{fill_event_probabilities, mean_sojourn, EventDurations, EventProbabilities};
use crate::state::{
    check_truncation, default_n_max, exact_normalization, for_each_in_shell, DelayedAckModel,
    MixProbabilities, DEFAULT_STATE_BUDGET,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Overrides both the scenario's truncation and the default.
    pub n_max: Option<usize>,
    pub ack_model: DelayedAckModel,
    pub retry_limit: u32,
    pub state_budget: u128,
    pub collision_uses_rts_length: bool,
    /// Destination mix to use instead of `m_i / M`.
    pub mix_override: Option<Vec<f64>>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            n_max: None,
            ack_model: DelayedAckModel::default(),
            retry_limit: DEFAULT_RETRY_LIMIT,
            state_budget: DEFAULT_STATE_BUDGET,
            collision_uses_rts_length: false,
            mix_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputReport<T> {
    pub label: String,
    pub d: u32,
    pub phi_packets_per_s: T,
    pub phi_mbps: T,
    pub per_sta_mbps: T,
    /// Per-station throughput of each class, `Φ p_i / m_i`.
    pub per_class_mbps: Vec<T>,
    pub captured_mass: T,
    pub n_max: usize,
    pub states: u128,
}

/// Shell-wise partial sums for one value of `N`.
struct Shell<T> {
    reward: CompensatedSum<T>,
    time: CompensatedSum<T>,
    mass: CompensatedSum<T>,
}

pub fn aggregate_throughput<T: Real>(
    cfg: &ScenarioConfig,
    opts: &AnalysisOptions,
) -> Result<ThroughputReport<T>> {
    let params = PhyParams::<T>::standard(cfg.standard)
        .with_collision_uses_rts_length(opts.collision_uses_rts_length);
    let mix: MixProbabilities<T> = match &opts.mix_override {
        Some(w) => {
            if w.len() != cfg.classes.len() {
                return Err(Error::InvalidParameter(format!(
                    "mix override has {} entries for {} classes",
                    w.len(),
                    cfg.classes.len()
                )));
            }
            MixProbabilities::from_weights(w.iter().map(|&x| T::lit(x)).collect())?
        }
        None => MixProbabilities::from_counts(&cfg.counts())?,
    };

    // Zero-weight classes never gain backlog; drop them from the state space.
    let active: Vec<usize> = (0..cfg.classes.len())
        .filter(|&i| mix.as_slice()[i] > T::zero())
        .collect();
    let p: Vec<T> = active.iter().map(|&i| mix.as_slice()[i]).collect();
    let rates: Vec<T> = active
        .iter()
        .map(|&i| T::lit(cfg.classes[i].rate))
        .collect();
    let k = active.len();

    let n_max = opts
        .n_max
        .or(cfg.n_max)
        .unwrap_or_else(|| default_n_max(cfg.d));
    let states = check_truncation(k, n_max, opts.state_budget)?;
    let table = AttemptProbTable::<T>::build(n_max + 1, &params.backoff(opts.retry_limit)?)?;
    let durations = EventDurations::from_params(&params, &rates)?;
    let factor = opts.ack_model.load_factor::<T>(cfg.d);
    let loads: Vec<T> = p.iter().map(|&x| x * factor).collect();

    // λ_i^n / n! for n = 0..=n_max
    let powers: Vec<Vec<T>> = loads
        .iter()
        .map(|&l| {
            let mut row = Vec::with_capacity(n_max + 1);
            let mut term = T::one();
            for n in 0..=n_max {
                if n > 0 {
                    term = term * l / T::from_count(n);
                }
                row.push(term);
            }
            row
        })
        .collect();

    let shells: Vec<Result<Shell<T>>> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let beta = table.get(n + 1);
            let weight_n = T::from_count(n + 1);
            let mut probs = EventProbabilities::zeroed(k);
            let mut shell = Shell {
                reward: CompensatedSum::new(),
                time: CompensatedSum::new(),
                mass: CompensatedSum::new(),
            };
            let mut failure = None;
            for_each_in_shell(k, n as u32, |s| {
                if failure.is_some() {
                    return;
                }
                let prod = s
                    .iter()
                    .zip(&powers)
                    .fold(T::one(), |acc, (&c, row)| acc * row[c as usize]);
                fill_event_probabilities(s, &p, beta, &mut probs);
                match mean_sojourn(&probs, &durations) {
                    Ok(x) => {
                        let w = weight_n * prod;
                        shell.reward.add(prod);
                        shell.time.add(w * x);
                        shell.mass.add(w);
                    }
                    Err(e) => failure = Some(e),
                }
            });
            failure.map_or(Ok(shell), Err)
        })
        .collect();

    let mut reward = CompensatedSum::new();
    let mut time = CompensatedSum::new();
    let mut mass = CompensatedSum::new();
    for shell in shells {
        let shell = shell?;
        reward.merge(&shell.reward);
        time.merge(&shell.time);
        mass.merge(&shell.mass);
    }

    let phi = reward.value() / time.value();
    let phi_mbps = phi * params.payload_bits() / T::lit(1e6);
    let m_total = T::lit(f64::from(cfg.total_stations()));
    let per_class_mbps = (0..cfg.classes.len())
        .map(|i| phi_mbps * mix.as_slice()[i] / T::lit(f64::from(cfg.classes[i].stations)))
        .collect();
    let total_load: T = loads.iter().copied().sum();

    Ok(ThroughputReport {
        label: cfg.label.clone(),
        d: cfg.d,
        phi_packets_per_s: phi,
        phi_mbps,
        per_sta_mbps: phi_mbps / m_total,
        per_class_mbps,
        captured_mass: mass.value() / exact_normalization(total_load),
        n_max,
        states,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    DelayedAck(Vec<u32>),
    NMax(Vec<usize>),
    /// Station counts per class of the base scenario; zero drops a class.
    Counts(Vec<Vec<u32>>),
}

/// One report per axis value, in the order given.
pub fn throughput_sweep<T: Real>(
    base: &ScenarioConfig,
    axis: &SweepAxis,
    opts: &AnalysisOptions,
) -> Result<Vec<ThroughputReport<T>>> {
    match axis {
        SweepAxis::DelayedAck(ds) => ds
            .iter()
            .map(|&d| aggregate_throughput(&base.clone().with_d(d)?, opts))
            .collect(),
        SweepAxis::NMax(ns) => ns
            .iter()
            .map(|&n| {
                let o = AnalysisOptions {
                    n_max: Some(n),
                    ..opts.clone()
                };
                aggregate_throughput(base, &o)
            })
            .collect(),
        SweepAxis::Counts(cs) => cs
            .iter()
            .map(|c| aggregate_throughput(&base.with_counts(c)?, opts))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{RateClass, Standard};
    use crate::state::{pi_unnormalized, StateVector};
    use proptest::prelude::*;

    fn scenario(std: Standard, classes: &[(f64, u32)], d: u32) -> ScenarioConfig {
        let classes = classes
            .iter()
            .map(|&(r, m)| RateClass::mbps(r, m))
            .collect();
        ScenarioConfig::new("t", std, classes, d).unwrap()
    }

    fn four_rate_cell(d: u32) -> ScenarioConfig {
        scenario(
            Standard::Dot11b,
            &[(11.0, 2), (5.5, 3), (2.0, 2), (1.0, 3)],
            d,
        )
    }

    /// Straight evaluation of the two sums over an explicit state list, using
    /// the public per-state operations.
    fn naive(cfg: &ScenarioConfig, n_max: usize) -> f64 {
        let params = PhyParams::<f64>::standard(cfg.standard);
        let p = MixProbabilities::<f64>::from_counts(&cfg.counts()).unwrap();
        let dur = EventDurations::from_params(&params, &cfg.rates()).unwrap();
        let bp = params.backoff(DEFAULT_RETRY_LIMIT).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for s in crate::state::enumerate_states(p.k(), n_max, DEFAULT_STATE_BUDGET).unwrap() {
            let n = s.total() as usize;
            let beta = crate::attempt::solve_beta(n + 1, &bp, 1e-10).unwrap();
            let pi = pi_unnormalized(&s, &p, cfg.d, DelayedAckModel::PerPacket);
            let e = crate::sojourn::event_probabilities(s.counts(), &p, beta).unwrap();
            num += pi / (n + 1) as f64;
            den += pi * mean_sojourn(&e, &dur).unwrap();
        }
        num / den * 11680.0 / 1e6
    }

    #[test]
    fn engine_matches_naive_sum() {
        for d in [1, 2] {
            let cfg = four_rate_cell(d);
            let opts = AnalysisOptions {
                n_max: Some(14),
                ..Default::default()
            };
            let r = aggregate_throughput::<f64>(&cfg, &opts).unwrap();
            let n = naive(&cfg, 14);
            assert!(
                (r.phi_mbps - n).abs() < 1e-12 * n,
                "{} vs {}",
                r.phi_mbps,
                n
            );
        }
    }

    #[test]
    fn report_shape() {
        let cfg = four_rate_cell(1);
        let r = aggregate_throughput::<f64>(&cfg, &AnalysisOptions::default()).unwrap();
        assert_eq!(r.n_max, 30);
        assert_eq!(r.states, crate::state::state_count(4, 30));
        assert!(r.phi_mbps > 0.0);
        assert!((r.per_sta_mbps * 10.0 - r.phi_mbps).abs() < 1e-12);
        for v in &r.per_class_mbps {
            assert!((v - r.per_sta_mbps).abs() < 1e-12);
        }
        assert!(r.captured_mass > 1.0 - 1e-9 && r.captured_mass <= 1.0 + 1e-12);
        assert!((r.phi_packets_per_s * 11680.0 / 1e6 - r.phi_mbps).abs() < 1e-12);
    }

    #[test]
    fn reward_share_in_unit_interval() {
        // numerator Σπ/(N+1) after normalisation
        let cfg = four_rate_cell(1);
        let p = MixProbabilities::<f64>::from_counts(&cfg.counts()).unwrap();
        let dist = crate::state::stationary_distribution(
            &p,
            1,
            DelayedAckModel::PerPacket,
            30,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        let share: f64 = dist
            .support
            .iter()
            .map(|(s, pr)| pr / f64::from(s.total() + 1))
            .sum();
        assert!(share > 0.0 && share <= 1.0);
    }

    #[test]
    fn single_class_consistency() {
        // all stations in one class, with other classes absent or weightless
        let single = scenario(Standard::Dot11b, &[(5.5, 6)], 1);
        let a = aggregate_throughput::<f64>(&single, &AnalysisOptions::default()).unwrap();
        let three = scenario(Standard::Dot11b, &[(11.0, 2), (5.5, 6), (1.0, 1)], 1);
        let opts = AnalysisOptions {
            mix_override: Some(vec![0.0, 1.0, 0.0]),
            ..Default::default()
        };
        let b = aggregate_throughput::<f64>(&three, &opts).unwrap();
        assert!((a.phi_packets_per_s - b.phi_packets_per_s).abs() < 1e-12 * a.phi_packets_per_s);
        let moved = three.with_counts(&[0, 9, 0]).unwrap();
        let c = aggregate_throughput::<f64>(&moved, &AnalysisOptions::default()).unwrap();
        assert!((a.phi_packets_per_s - c.phi_packets_per_s).abs() < 1e-12 * a.phi_packets_per_s);
    }

    #[test]
    fn delayed_ack_raises_throughput() {
        let reports = throughput_sweep::<f64>(
            &four_rate_cell(1),
            &SweepAxis::DelayedAck(vec![1, 2]),
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert!(reports[1].phi_mbps > reports[0].phi_mbps);
        // the literal reading of the balance equation goes the other way
        let literal = AnalysisOptions {
            ack_model: DelayedAckModel::Literal,
            ..Default::default()
        };
        let r = throughput_sweep::<f64>(
            &four_rate_cell(1),
            &SweepAxis::DelayedAck(vec![1, 2]),
            &literal,
        )
        .unwrap();
        assert!(r[1].phi_mbps < r[0].phi_mbps);
        assert_eq!(r[0].phi_mbps.to_bits(), reports[0].phi_mbps.to_bits());
    }

    #[test]
    fn truncation_converges() {
        let reports = throughput_sweep::<f64>(
            &four_rate_cell(1),
            &SweepAxis::NMax(vec![10, 20, 30, 40]),
            &AnalysisOptions::default(),
        )
        .unwrap();
        let diffs: Vec<f64> = reports
            .windows(2)
            .map(|w| (w[1].phi_mbps - w[0].phi_mbps).abs())
            .collect();
        assert!(diffs.windows(2).all(|w| w[1] <= w[0]));
        assert!(diffs[2] < 1e-6);
    }

    #[test]
    fn faster_association_helps() {
        let base = four_rate_cell(1);
        let r = throughput_sweep::<f64>(
            &base,
            &SweepAxis::Counts(vec![vec![2, 3, 2, 3], vec![3, 3, 2, 2]]),
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert!(r[1].phi_mbps > r[0].phi_mbps);
    }

    #[test]
    fn errors_surface() {
        let cfg = four_rate_cell(1);
        let o = AnalysisOptions {
            n_max: Some(60),
            state_budget: 1000,
            ..Default::default()
        };
        assert!(matches!(
            aggregate_throughput::<f64>(&cfg, &o),
            Err(Error::StateBudget { .. })
        ));
        let o = AnalysisOptions {
            mix_override: Some(vec![1.0]),
            ..Default::default()
        };
        assert!(aggregate_throughput::<f64>(&cfg, &o).is_err());
    }

    #[test]
    fn f32_engine_close_to_f64() {
        let cfg = four_rate_cell(1);
        let opts = AnalysisOptions {
            n_max: Some(20),
            ..Default::default()
        };
        let a = aggregate_throughput::<f32>(&cfg, &opts).unwrap();
        let b = aggregate_throughput::<f64>(&cfg, &opts).unwrap();
        assert!((f64::from(a.phi_mbps) - b.phi_mbps).abs() / b.phi_mbps < 1e-4);
    }

    #[test]
    fn deterministic_across_runs() {
        let cfg = scenario(
            Standard::Dot11g,
            &[
                (54.0, 3),
                (48.0, 2),
                (36.0, 4),
                (24.0, 3),
                (18.0, 2),
                (6.0, 1),
            ],
            1,
        );
        let a = aggregate_throughput::<f64>(&cfg, &AnalysisOptions::default()).unwrap();
        let b = aggregate_throughput::<f64>(&cfg, &AnalysisOptions::default()).unwrap();
        assert_eq!(a.phi_mbps.to_bits(), b.phi_mbps.to_bits());
    }

    #[test]
    fn zero_state_reward_term() {
        let p = MixProbabilities::<f64>::from_counts(&[1]).unwrap();
        assert_eq!(
            pi_unnormalized(&StateVector::zeros(1), &p, 1, DelayedAckModel::PerPacket),
            1.0
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn label_permutation_invariance(perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
            let base = [(11.0, 2u32), (2.0, 4), (1.0, 3)];
            let shuffled: Vec<(f64, u32)> = perm.iter().map(|&i| base[i]).collect();
            let a = aggregate_throughput::<f64>(&scenario(Standard::Dot11b, &base, 1), &AnalysisOptions { n_max: Some(20), ..Default::default() }).unwrap();
            let b = aggregate_throughput::<f64>(&scenario(Standard::Dot11b, &shuffled, 1), &AnalysisOptions { n_max: Some(20), ..Default::default() }).unwrap();
            prop_assert_eq!(a.phi_mbps.to_bits(), b.phi_mbps.to_bits());
        }
    }
}
