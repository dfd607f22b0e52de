//! Mean and spread of regret curves across runs.

use super::experiment::RunRecord;
use crate::error::{Error, Result};

/// Per-round mean and population standard deviation across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCurve {
    pub policy: String,
    pub runs: usize,
    pub avg_mean: Vec<f64>,
    pub avg_std: Vec<f64>,
    pub weak_mean: Vec<f64>,
    pub weak_std: Vec<f64>,
}

/// Final cumulative regret and total timing of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTotals {
    pub policy: String,
    pub runs: usize,
    pub final_avg_mean: f64,
    pub final_avg_std: f64,
    pub final_weak_mean: f64,
    pub final_weak_std: f64,
    /// Seconds of select plus update time per run.
    pub select_s_mean: f64,
    pub select_s_std: f64,
    /// Seconds of estimation time per run.
    pub estimator_s_mean: f64,
    pub estimator_s_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub horizon: usize,
    /// In order of first appearance in the records.
    pub curves: Vec<PolicyCurve>,
    pub totals: Vec<PolicyTotals>,
}

impl Summary {
    pub fn totals_for(&self, policy: &str) -> Option<&PolicyTotals> {
        self.totals.iter().find(|t| t.policy == policy)
    }

    pub fn curve_for(&self, policy: &str) -> Option<&PolicyCurve> {
        self.curves.iter().find(|c| c.policy == policy)
    }

    /// Aligned text table of the totals.
    pub fn totals_table(&self) -> String {
        let width = self.totals.iter().map(|t| t.policy.len()).max().unwrap_or(6).max(6);
        let mut out = format!(
            "{:<width$}  {:>4}  {:>22}  {:>22}  {:>20}  {:>20}\n",
            "policy", "runs", "final avg regret", "final weak regret", "select time (s)", "estimator time (s)"
        );
        for t in &self.totals {
            out.push_str(&format!(
                "{:<width$}  {:>4}  {:>11.3} ± {:>8.3}  {:>11.3} ± {:>8.3}  {:>9.4} ± {:>8.4}  {:>9.4} ± {:>8.4}\n",
                t.policy,
                t.runs,
                t.final_avg_mean,
                t.final_avg_std,
                t.final_weak_mean,
                t.final_weak_std,
                t.select_s_mean,
                t.select_s_std,
                t.estimator_s_mean,
                t.estimator_s_std
            ));
        }
        out
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups records by policy and averages across runs. All records must
/// share one horizon.
pub fn summarize(records: &[RunRecord]) -> Result<Summary> {
    let first = records.first().ok_or_else(|| Error::Parameter("no records to summarize".into()))?;
    let horizon = first.horizon();
    if let Some(bad) = records.iter().find(|r| r.horizon() != horizon || r.weak_regret_cum.len() != horizon) {
        return Err(Error::Parameter(format!(
            "mismatched horizons: run {} of '{}' has {} rounds, expected {horizon}",
            bad.run,
            bad.policy,
            bad.horizon()
        )));
    }
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.policy.as_str()) {
            order.push(&r.policy);
        }
    }
    let mut curves = Vec::with_capacity(order.len());
    let mut totals = Vec::with_capacity(order.len());
    for policy in order {
        let group: Vec<&RunRecord> = records.iter().filter(|r| r.policy == policy).collect();
        let mut curve = PolicyCurve {
            policy: policy.to_string(),
            runs: group.len(),
            avg_mean: Vec::with_capacity(horizon),
            avg_std: Vec::with_capacity(horizon),
            weak_mean: Vec::with_capacity(horizon),
            weak_std: Vec::with_capacity(horizon),
        };
        let mut column = vec![0.0; group.len()];
        for t in 0..horizon {
            for (c, r) in column.iter_mut().zip(&group) {
                *c = r.avg_regret_cum[t];
            }
            let (m, s) = mean_std(&column);
            curve.avg_mean.push(m);
            curve.avg_std.push(s);
            for (c, r) in column.iter_mut().zip(&group) {
                *c = r.weak_regret_cum[t];
            }
            let (m, s) = mean_std(&column);
            curve.weak_mean.push(m);
            curve.weak_std.push(s);
        }
        let secs = |f: &dyn Fn(&RunRecord) -> u64| mean_std(&group.iter().map(|r| f(r) as f64 * 1e-9).collect::<Vec<_>>());
        let (select_s_mean, select_s_std) = secs(&|r| r.total_select_ns());
        let (estimator_s_mean, estimator_s_std) = secs(&|r| r.estimator_ns);
        totals.push(PolicyTotals {
            policy: policy.to_string(),
            runs: group.len(),
            final_avg_mean: *curve.avg_mean.last().unwrap_or(&0.0),
            final_avg_std: *curve.avg_std.last().unwrap_or(&0.0),
            final_weak_mean: *curve.weak_mean.last().unwrap_or(&0.0),
            final_weak_std: *curve.weak_std.last().unwrap_or(&0.0),
            select_s_mean,
            select_s_std,
            estimator_s_mean,
            estimator_s_std,
        });
        curves.push(curve);
    }
    Ok(Summary { horizon, curves, totals })
}
