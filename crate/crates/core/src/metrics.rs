//! Per-run metric series, steady-state AUC, final values, and cross-seed
//! aggregation.

use crate::learners::Algo;

/// RMSPBE trace of one run: `values[t]` is the metric after `t` updates,
/// with `values[0]` recorded before the first update.
#[derive(Clone, Debug)]
pub struct MetricSeries {
    pub env: String,
    pub algo: Algo,
    pub config_id: String,
    pub seed: u64,
    pub values: Vec<f64>,
    /// Step at which the divergence guard fired, if it did. The remaining
    /// entries extend the last finite value so aggregates stay computable;
    /// the flag keeps the event visible in every output.
    pub diverged_at: Option<usize>,
}

impl MetricSeries {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn auc_ss(&self) -> f64 {
        auc_ss(&self.values)
    }

    pub fn final_value(&self) -> f64 {
        final_value(&self.values)
    }
}

/// Steady-state AUC: the time average of `e_t` over `t = floor(T/2) ..= T`
/// for a series `e_0 ..= e_T`.
pub fn auc_ss(values: &[f64]) -> f64 {
    assert!(values.len() >= 3, "steady-state AUC needs T >= 2");
    let t_max = values.len() - 1;
    let from = t_max / 2;
    neumaier_sum(&values[from..]) / (t_max - from + 1) as f64
}

/// Last entry of the series.
pub fn final_value(values: &[f64]) -> f64 {
    *values.last().expect("empty series")
}

/// Mean and sample standard deviation (n - 1 denominator) of a set of runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Aggregate per-run scalars. Sums are compensated so the result does not
/// depend on input order beyond ~1e-15 relative.
pub fn aggregate(values: &[f64]) -> Aggregate {
    assert!(values.len() >= 2, "aggregation needs at least two runs");
    let n = values.len() as f64;
    let mean = neumaier_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = neumaier_sum(&sq) / (n - 1.0);
    Aggregate { mean, std: var.sqrt(), n: values.len() }
}

/// Neumaier-compensated summation.
fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
