//! Slotted DCF download with TCP window flow control.
//!
//! Time advances in slot opportunities. At each opportunity every contending
//! node whose counter is zero transmits; if none does, an idle slot passes.
//! Either way the contenders that stayed silent decrement once, so a busy
//! period counts as a single opportunity however long it lasts.
//!
//! The AP holds `W` packets per station in one FIFO. A station answers every
//! `d`-th data packet with a TCP ACK; each ACK that reaches the AP releases
//! `d` more packets for that station. Frames are never dropped: past the
//! retry limit a frame keeps retrying with the largest window.

use std::collections::VecDeque;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use mrwlan_core::{BackoffParams, PhyParams64};

use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::node::{NodeState, Role};
use crate::stats::{batch_interval, BatchMeans};

/// Raw counters over the whole run, warmup included.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SimCounters {
    pub idle_slots: u64,
    /// Seconds spent in successes and collisions.
    pub busy_time: f64,
    /// Simulated time at the end of the last event, seconds.
    pub sim_time: f64,
    pub ap_successes: u64,
    pub sta_successes: u64,
    pub collisions: u64,
    pub attempts: u64,
    /// Data packets delivered to each station.
    pub data_delivered: Vec<u64>,
    /// TCP ACKs generated by each station.
    pub acks_generated: Vec<u64>,
    /// Data packets received since each station's last ACK.
    pub rx_residual: Vec<u32>,
    /// ACKs still queued at each station.
    pub acks_pending: Vec<u32>,
    /// Packets still queued at the AP.
    pub ap_queue: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub label: String,
    pub seed: u64,
    /// Aggregate TCP payload throughput after warmup, Mbit/s.
    pub aggregate_mbps: f64,
    pub per_sta_mbps: Vec<f64>,
    /// 95 % batch-means confidence half-width of `aggregate_mbps`.
    pub ci_halfwidth_mbps: f64,
    pub batch_mbps: Vec<f64>,
    /// Collisions over all transmission events after warmup.
    pub collision_fraction: f64,
    /// Stations holding an ACK, sampled just after each success.
    pub mean_nonempty_stas: f64,
    pub counters: SimCounters,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    bp: BackoffParams,
    rng: ChaCha8Rng,
    /// Index 0 is the AP; station `s` is node `s + 1`.
    nodes: Vec<NodeState>,
    fifo: VecDeque<u32>,
    t_s_ap: Vec<f64>,
    t_c_ap: Vec<f64>,
    t_s_sta: Vec<f64>,
    t_c_sta: Vec<f64>,
    slot: f64,
    payload_bits: f64,
    now: f64,
    counters: SimCounters,
    batches: BatchMeans,
    per_sta_bits: Vec<f64>,
    post_collisions: u64,
    post_successes: u64,
    backlog_sum: u64,
    backlog_samples: u64,
    trace: Option<&'a mut dyn Write>,
}

/// Runs one replication.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult> {
    Engine::new(cfg, None)?.run()
}

/// Runs one replication, writing one trace record per channel event.
///
/// Records are space-separated lines `<start_s> <kind> <nodes> <duration_s>`
/// where `kind` is `idle`, `success` or `collision` and `nodes` is `-` for
/// idle runs, `ap>staN` for a download frame, `staN` for an ACK, and a
/// comma-separated list for a collision. Idle runs of several slots are
/// merged into one record.
pub fn run_simulation_traced(cfg: &SimConfig, trace: &mut dyn Write) -> Result<SimResult> {
    Engine::new(cfg, Some(trace))?.run()
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, trace: Option<&'a mut dyn Write>) -> Result<Self> {
        cfg.validate()?;
        let phy = PhyParams64::standard(cfg.scenario.standard)
            .with_collision_uses_rts_length(cfg.collision_uses_rts_length);
        let bp = phy.backoff(cfg.retry_limit)?;
        let mut t_s_ap = Vec::new();
        let mut t_c_ap = Vec::new();
        let mut t_s_sta = Vec::new();
        let mut t_c_sta = Vec::new();
        for class in &cfg.scenario.classes {
            let d = phy.durations(class.rate)?;
            t_s_ap.push(d.s_ap);
            t_c_ap.push(d.c_ap);
            t_s_sta.push(d.s_sta);
            t_c_sta.push(d.c_sta);
        }

        let mut nodes = vec![NodeState::new(Role::Ap)];
        for (class, c) in cfg.scenario.classes.iter().enumerate() {
            nodes.extend((0..c.stations).map(|_| NodeState::new(Role::Sta { class })));
        }
        let m = nodes.len() - 1;
        let mut fifo = VecDeque::with_capacity(m * cfg.tcp_window as usize);
        for _ in 0..cfg.tcp_window {
            fifo.extend(0..m as u32);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        nodes[0].queue = fifo.len() as u32;
        nodes[0].reset_backoff(&bp, &mut rng);

        let batch_len = (cfg.sim_duration - cfg.warmup) / cfg.batches as f64;
        Ok(Self {
            cfg,
            bp,
            rng,
            nodes,
            fifo,
            t_s_ap,
            t_c_ap,
            t_s_sta,
            t_c_sta,
            slot: phy.slot_time,
            payload_bits: phy.payload_bits(),
            now: 0.0,
            counters: SimCounters {
                data_delivered: vec![0; m],
                acks_generated: vec![0; m],
                rx_residual: vec![0; m],
                acks_pending: vec![0; m],
                ..SimCounters::default()
            },
            batches: BatchMeans::new(cfg.batches, batch_len),
            per_sta_bits: vec![0.0; m],
            post_collisions: 0,
            post_successes: 0,
            backlog_sum: 0,
            backlog_samples: 0,
            trace,
        })
    }

    fn class_of(&self, node: usize) -> usize {
        match self.nodes[node].role {
            Role::Sta { class } => class,
            Role::Ap => unreachable!("AP has no rate class"),
        }
    }

    fn run(mut self) -> Result<SimResult> {
        let mut tx: Vec<usize> = Vec::new();
        while self.now < self.cfg.sim_duration {
            let idle = self
                .nodes
                .iter()
                .filter(|n| n.contending())
                .map(|n| n.backoff_counter)
                .min()
                .expect("the AP always contends");
            if idle > 0 {
                self.idle_run(idle)?;
                continue;
            }
            tx.clear();
            tx.extend((0..self.nodes.len()).filter(|&i| {
                let n = &self.nodes[i];
                n.contending() && n.backoff_counter == 0
            }));
            self.counters.attempts += tx.len() as u64;
            for n in self
                .nodes
                .iter_mut()
                .filter(|n| n.contending() && n.backoff_counter > 0)
            {
                n.backoff_counter -= 1;
            }
            if tx.len() == 1 {
                self.success(tx[0])?;
            } else {
                self.collision(&tx)?;
            }
        }
        Ok(self.finish())
    }

    fn idle_run(&mut self, slots: u32) -> Result<()> {
        for n in self.nodes.iter_mut().filter(|n| n.contending()) {
            n.backoff_counter -= slots;
        }
        let dur = f64::from(slots) * self.slot;
        self.emit(format_args!("idle -"), dur)?;
        self.counters.idle_slots += u64::from(slots);
        self.now += dur;
        Ok(())
    }

    fn success(&mut self, node: usize) -> Result<()> {
        if node == 0 {
            let sta = *self.fifo.front().expect("AP contends only when backlogged") as usize;
            let dur = self.t_s_ap[self.class_of(sta + 1)];
            self.emit(format_args!("success ap>sta{sta}"), dur)?;
            self.fifo.pop_front();
            self.nodes[0].queue -= 1;
            self.advance(dur);
            self.counters.ap_successes += 1;
            self.deliver_data(sta);
            if self.fifo.is_empty() {
                return Err(SimError::SaturationLost {
                    time: self.now,
                    window: self.cfg.tcp_window,
                });
            }
        } else {
            let sta = node - 1;
            let dur = self.t_s_sta[self.class_of(node)];
            self.emit(format_args!("success sta{sta}"), dur)?;
            self.advance(dur);
            self.nodes[node].queue -= 1;
            self.counters.acks_pending[sta] -= 1;
            let d = self.cfg.scenario.d;
            self.fifo
                .extend(std::iter::repeat_n(sta as u32, d as usize));
            self.nodes[0].queue += d;
            self.counters.sta_successes += 1;
        }
        if self.nodes[node].contending() {
            self.nodes[node].reset_backoff(&self.bp, &mut self.rng);
        } else {
            self.nodes[node].backoff_stage = 0;
        }
        if self.measuring() {
            self.post_successes += 1;
            let backlog = self.nodes[1..].iter().filter(|n| n.contending()).count();
            self.backlog_sum += backlog as u64;
            self.backlog_samples += 1;
        }
        Ok(())
    }

    fn deliver_data(&mut self, sta: usize) {
        self.counters.data_delivered[sta] += 1;
        if self.measuring() {
            self.per_sta_bits[sta] += self.payload_bits;
            self.batches
                .record(self.now - self.cfg.warmup, self.payload_bits);
        }
        let node = sta + 1;
        self.nodes[node].rx_data_count += 1;
        if self.nodes[node].rx_data_count == self.cfg.scenario.d {
            self.nodes[node].rx_data_count = 0;
            self.counters.acks_generated[sta] += 1;
            self.counters.acks_pending[sta] += 1;
            if !self.nodes[node].contending() {
                self.nodes[node].queue = 1;
                self.nodes[node].reset_backoff(&self.bp, &mut self.rng);
            } else {
                self.nodes[node].queue += 1;
            }
        }
        self.counters.rx_residual[sta] = self.nodes[node].rx_data_count;
    }

    fn collision(&mut self, tx: &[usize]) -> Result<()> {
        let mut dur = 0.0f64;
        for &i in tx {
            let t = if i == 0 {
                let sta = *self.fifo.front().expect("AP contends only when backlogged") as usize;
                self.t_c_ap[self.class_of(sta + 1)]
            } else {
                self.t_c_sta[self.class_of(i)]
            };
            dur = dur.max(t);
        }
        if self.trace.is_some() {
            let names: Vec<String> = tx
                .iter()
                .map(|&i| {
                    if i == 0 {
                        "ap".to_string()
                    } else {
                        format!("sta{}", i - 1)
                    }
                })
                .collect();
            self.emit(format_args!("collision {}", names.join(",")), dur)?;
        }
        for &i in tx {
            self.nodes[i].collided(&self.bp, &mut self.rng);
        }
        self.advance(dur);
        self.counters.collisions += 1;
        if self.measuring() {
            self.post_collisions += 1;
        }
        Ok(())
    }

    fn advance(&mut self, busy: f64) {
        self.counters.busy_time += busy;
        self.now += busy;
    }

    /// Events count towards post-warmup statistics when they end inside the
    /// measurement window.
    fn measuring(&self) -> bool {
        self.now > self.cfg.warmup && self.now <= self.cfg.sim_duration
    }

    fn emit(&mut self, what: std::fmt::Arguments<'_>, dur: f64) -> Result<()> {
        if let Some(w) = self.trace.as_deref_mut() {
            writeln!(w, "{:.9} {} {:.9}", self.now, what, dur)
                .map_err(|e| SimError::Trace(e.to_string()))?;
        }
        Ok(())
    }

    fn finish(mut self) -> SimResult {
        let window = self.cfg.sim_duration - self.cfg.warmup;
        self.counters.sim_time = self.now;
        self.counters.ap_queue = self.nodes[0].queue;
        let total_bits: f64 = self.per_sta_bits.iter().sum();
        let batch_mbps: Vec<f64> = self.batches.rates().iter().map(|r| r / 1e6).collect();
        let events = self.post_collisions + self.post_successes;
        SimResult {
            label: self.cfg.scenario.label.clone(),
            seed: self.cfg.seed,
            aggregate_mbps: total_bits / window / 1e6,
            per_sta_mbps: self.per_sta_bits.iter().map(|b| b / window / 1e6).collect(),
            ci_halfwidth_mbps: batch_interval(&batch_mbps),
            batch_mbps,
            collision_fraction: if events == 0 {
                0.0
            } else {
                self.post_collisions as f64 / events as f64
            },
            mean_nonempty_stas: if self.backlog_samples == 0 {
                0.0
            } else {
                self.backlog_sum as f64 / self.backlog_samples as f64
            },
            counters: self.counters,
        }
    }
}

/// Empirical attempt probability of `n_nodes` saturated contenders using
/// the backoff rules of `cfg`'s standard.
///
/// Every frame lasts exactly one slot, so each slot opportunity is either
/// idle or carries one or more attempts. The run spans `cfg.sim_duration`
/// seconds worth of slots and is seeded by `cfg.seed`. Returns attempts per
/// node per opportunity.
pub fn measure_attempt_rate(n_nodes: usize, cfg: &SimConfig) -> Result<f64> {
    cfg.validate()?;
    let phy = PhyParams64::standard(cfg.scenario.standard);
    let bp = phy.backoff(cfg.retry_limit)?;
    let opportunities = (cfg.sim_duration / phy.slot_time).round() as u64;
    attempt_rate_with(n_nodes, &bp, opportunities, cfg.seed)
}

/// [`measure_attempt_rate`] with explicit backoff parameters and run length.
pub fn attempt_rate_with(
    n_nodes: usize,
    bp: &BackoffParams,
    opportunities: u64,
    seed: u64,
) -> Result<f64> {
    if n_nodes == 0 || opportunities == 0 {
        return Err(SimError::InvalidConfig(
            "attempt-rate measurement needs at least one node and one opportunity".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<NodeState> = (0..n_nodes)
        .map(|_| {
            let mut n = NodeState::new(Role::Ap);
            n.queue = 1;
            n.reset_backoff(bp, &mut rng);
            n
        })
        .collect();
    let mut elapsed = 0u64;
    let mut attempts = 0u64;
    while elapsed < opportunities {
        let idle = nodes.iter().map(|n| n.backoff_counter).min().unwrap_or(0);
        if idle > 0 {
            let step = u64::from(idle).min(opportunities - elapsed) as u32;
            for n in &mut nodes {
                n.backoff_counter -= step;
            }
            elapsed += u64::from(step);
            continue;
        }
        let tx: Vec<usize> = (0..n_nodes)
            .filter(|&i| nodes[i].backoff_counter == 0)
            .collect();
        attempts += tx.len() as u64;
        for n in nodes.iter_mut().filter(|n| n.backoff_counter > 0) {
            n.backoff_counter -= 1;
        }
        let collided = tx.len() > 1;
        for i in tx {
            if collided {
                nodes[i].collided(bp, &mut rng);
            } else {
                nodes[i].reset_backoff(bp, &mut rng);
            }
        }
        elapsed += 1;
    }
    Ok(attempts as f64 / (n_nodes as f64 * opportunities as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrwlan_core::{RateClass, ScenarioConfig, Standard};
    use proptest::prelude::*;

    fn scenario(classes: &[(f64, u32)], d: u32) -> ScenarioConfig {
        let classes = classes
            .iter()
            .map(|&(r, n)| RateClass::mbps(r, n))
            .collect();
        ScenarioConfig::new("t", Standard::Dot11b, classes, d).unwrap()
    }

    fn short(s: ScenarioConfig, seed: u64) -> SimConfig {
        SimConfig::new(s, seed).with_duration(3.0, 0.5)
    }

    #[test]
    fn time_is_idle_plus_busy() {
        let cfg = short(scenario(&[(11.0, 3), (2.0, 2)], 1), 1);
        let r = run_simulation(&cfg).unwrap();
        let c = &r.counters;
        let t = c.idle_slots as f64 * 20e-6 + c.busy_time;
        assert!(
            (t - c.sim_time).abs() < 1e-9 * c.sim_time,
            "{t} vs {}",
            c.sim_time
        );
        assert!(c.sim_time >= 3.0);
    }

    #[test]
    fn data_conserved_through_acks() {
        for d in [1, 2, 3] {
            let cfg = short(scenario(&[(11.0, 2), (1.0, 2)], d), 7);
            let r = run_simulation(&cfg).unwrap();
            let c = &r.counters;
            for s in 0..4 {
                assert_eq!(
                    c.data_delivered[s],
                    u64::from(d) * c.acks_generated[s] + u64::from(c.rx_residual[s])
                );
                assert!(c.rx_residual[s] < d);
            }
            let acked: u64 = c.acks_generated.iter().sum::<u64>()
                - c.acks_pending.iter().map(|&a| u64::from(a)).sum::<u64>();
            assert_eq!(acked, c.sta_successes);
            assert_eq!(c.data_delivered.iter().sum::<u64>(), c.ap_successes);
            // Packets in flight per station never exceed the window.
            let in_flight = c.ap_queue as u64
                + c.rx_residual.iter().map(|&x| u64::from(x)).sum::<u64>()
                + u64::from(d) * c.acks_pending.iter().map(|&x| u64::from(x)).sum::<u64>();
            assert_eq!(in_flight, 4 * u64::from(cfg.tcp_window));
        }
    }

    #[test]
    fn tiny_window_loses_saturation() {
        let cfg = short(scenario(&[(11.0, 1)], 1), 3).with_window(1);
        assert!(matches!(
            run_simulation(&cfg),
            Err(SimError::SaturationLost { .. })
        ));
    }

    #[test]
    fn rejects_bad_durations() {
        let cfg = short(scenario(&[(11.0, 1)], 1), 3).with_duration(1.0, 2.0);
        assert!(matches!(
            run_simulation(&cfg),
            Err(SimError::InvalidConfig(_))
        ));
    }

    #[test]
    fn trace_covers_the_whole_run() {
        let cfg = short(scenario(&[(11.0, 2), (5.5, 1)], 2), 11);
        let mut buf = Vec::new();
        let r = run_simulation_traced(&cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut t = 0.0;
        let mut successes = 0;
        for line in text.lines() {
            let f: Vec<&str> = line.split(' ').collect();
            assert_eq!(f.len(), 4, "{line}");
            let start: f64 = f[0].parse().unwrap();
            assert!((start - t).abs() < 1e-6, "{line}");
            t = start + f[3].parse::<f64>().unwrap();
            match f[1] {
                "idle" => assert_eq!(f[2], "-"),
                "success" => successes += 1,
                "collision" => assert!(f[2].contains(',')),
                other => panic!("unknown kind {other}"),
            }
        }
        assert_eq!(
            successes,
            r.counters.ap_successes + r.counters.sta_successes
        );
        assert!((t - r.counters.sim_time).abs() < 1e-6);
        // Tracing must not perturb the run.
        assert_eq!(run_simulation(&cfg).unwrap(), r);
    }

    #[test]
    fn single_node_attempt_rate() {
        let bp = BackoffParams::new(31, 1023, 7).unwrap();
        let b = attempt_rate_with(1, &bp, 2_000_000, 5).unwrap();
        assert!((b - 2.0 / 33.0).abs() < 0.01 * 2.0 / 33.0, "{b}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn window_and_time_are_conserved(
            counts in proptest::collection::vec(1u32..4, 1..4),
            d in 1u32..4,
            seed in any::<u64>(),
        ) {
            let rates = [11.0, 5.5, 2.0];
            let classes: Vec<(f64, u32)> = counts.iter().zip(rates).map(|(&n, r)| (r, n)).collect();
            let cfg = SimConfig::new(scenario(&classes, d), seed)
                .with_duration(1.0, 0.2)
                .with_window(400);
            let r = run_simulation(&cfg).unwrap();
            let c = &r.counters;
            let m: u32 = counts.iter().sum();
            let in_flight = c.ap_queue as u64
                + c.rx_residual.iter().map(|&x| u64::from(x)).sum::<u64>()
                + u64::from(d) * c.acks_pending.iter().map(|&x| u64::from(x)).sum::<u64>();
            prop_assert_eq!(in_flight, u64::from(m) * 400);
            prop_assert_eq!(c.data_delivered.iter().sum::<u64>(), c.ap_successes);
            let t = c.idle_slots as f64 * 20e-6 + c.busy_time;
            prop_assert!((t - c.sim_time).abs() < 1e-9 * c.sim_time);
            prop_assert!(r.aggregate_mbps > 0.0 && r.ci_halfwidth_mbps >= 0.0);
        }
    }
}
