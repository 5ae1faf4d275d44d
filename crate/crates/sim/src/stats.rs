//! Batch-means estimate of a long-run rate.

/// Two-sided 97.5 % Student t quantiles for 1..=30 degrees of freedom.
const T_975: [f64; 30] = [
    12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622, 2.2281, 2.2010,
    2.1788, 2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009, 2.0930, 2.0860, 2.0796, 2.0739, 2.0687,
    2.0639, 2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423,
];

/// Student t 0.975 quantile; normal approximation above 30 degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    match dof {
        0 => f64::INFINITY,
        1..=30 => T_975[dof - 1],
        _ => 1.96,
    }
}

/// Accumulates an amount into equal-length time batches.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    sums: Vec<f64>,
    batch_len: f64,
}

impl BatchMeans {
    pub fn new(batches: usize, batch_len: f64) -> Self {
        Self {
            sums: vec![0.0; batches],
            batch_len,
        }
    }

    /// Adds `amount` at time `t` after the start of measurement.
    pub fn record(&mut self, t: f64, amount: f64) {
        let b = ((t / self.batch_len) as usize).min(self.sums.len() - 1);
        self.sums[b] += amount;
    }

    /// Per-batch rates (amount per second).
    pub fn rates(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.batch_len).collect()
    }
}

/// 95 % confidence half-width of the mean of `samples`.
pub fn batch_interval(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    t_quantile_975(n - 1) * (var / n as f64).sqrt()
}
