//! Per-replicate posterior summaries of estimands and their aggregation into
//! bias, MSE and interval coverage.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::inference::diagnostics::quantile_sorted;
use crate::inference::PosteriorDraws;
use crate::study::methods::{FitDiagnostics, Method};

/// Posterior summary of one estimand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimandSummary {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
    /// Central 50% interval.
    pub q25: f64,
    pub q75: f64,
    /// Central 80% interval.
    pub q10: f64,
    pub q90: f64,
}

pub fn summarize_estimands(draws: &PosteriorDraws) -> Vec<EstimandSummary> {
    (0..draws.n_params())
        .map(|k| {
            let mut v = draws.param_pooled(k);
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let variance = if v.len() > 1 {
                v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            v.sort_by(f64::total_cmp);
            EstimandSummary {
                name: draws.names[k].clone(),
                mean,
                variance,
                q25: quantile_sorted(&v, 0.25),
                q75: quantile_sorted(&v, 0.75),
                q10: quantile_sorted(&v, 0.10),
                q90: quantile_sorted(&v, 0.90),
            }
        })
        .collect()
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub summaries: Vec<EstimandSummary>,
    pub diagnostics: Option<FitDiagnostics>,
    /// Set when the fit failed; such results are excluded from metrics.
    pub error: Option<String>,
}

/// Everything recorded for one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    /// True estimand values from the replicate's realised parameters.
    pub truth: Vec<(String, f64)>,
    /// Share of each category's cases observed, `Σ X / Σ Y`.
    pub observed_share: Vec<f64>,
    pub methods: Vec<MethodResult>,
}

/// Aggregate performance of one method for one estimand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub estimand: String,
    pub method: Method,
    /// Replicates contributing.
    pub n: usize,
    /// Replicates whose fit failed.
    pub failed: usize,
    pub bias: f64,
    pub bias_se: f64,
    /// Mean over replicates of `bias² + posterior variance`.
    pub mse: f64,
    pub mse_se: f64,
    pub coverage50: f64,
    pub coverage80: f64,
    pub length50: f64,
    pub length80: f64,
}

impl MetricRow {
    /// `bias / bias_se`.
    pub fn bias_t(&self) -> f64 {
        self.bias / self.bias_se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub scenario: String,
    pub rows: Vec<MetricRow>,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Strict containment: a zero-width interval never covers.
fn covers(lo: f64, hi: f64, truth: f64) -> f64 {
    if lo < truth && truth < hi {
        1.0
    } else {
        0.0
    }
}

impl MetricsTable {
    pub fn from_replicates(scenario: &str, reps: &[ReplicateResult]) -> Self {
        // (estimand, method) -> per-replicate (bias, mse, cov50, cov80, len50, len80)
        let mut acc: BTreeMap<(String, Method), Vec<[f64; 6]>> = BTreeMap::new();
        let mut failed: BTreeMap<Method, usize> = BTreeMap::new();
        let mut order: Vec<(String, Method)> = Vec::new();
        for rep in reps {
            let truth: BTreeMap<&str, f64> = rep.truth.iter().map(|(n, v)| (n.as_str(), *v)).collect();
            for mr in &rep.methods {
                if mr.error.is_some() {
                    *failed.entry(mr.method).or_default() += 1;
                    continue;
                }
                for s in &mr.summaries {
                    let Some(&t) = truth.get(s.name.as_str()) else {
                        continue;
                    };
                    let key = (s.name.clone(), mr.method);
                    if !acc.contains_key(&key) {
                        order.push(key.clone());
                    }
                    let bias = s.mean - t;
                    acc.entry(key).or_default().push([
                        bias,
                        bias * bias + s.variance,
                        covers(s.q25, s.q75, t),
                        covers(s.q10, s.q90, t),
                        s.q75 - s.q25,
                        s.q90 - s.q10,
                    ]);
                }
            }
        }
        let rows = order
            .into_iter()
            .map(|key| {
                let v = &acc[&key];
                let col = |c: usize| v.iter().map(|r| r[c]).collect::<Vec<f64>>();
                let (bias, bias_se) = mean_se(&col(0));
                let (mse, mse_se) = mean_se(&col(1));
                MetricRow {
                    estimand: key.0.clone(),
                    method: key.1,
                    n: v.len(),
                    failed: failed.get(&key.1).copied().unwrap_or(0),
                    bias,
                    bias_se,
                    mse,
                    mse_se,
                    coverage50: mean_se(&col(2)).0,
                    coverage80: mean_se(&col(3)).0,
                    length50: mean_se(&col(4)).0,
                    length80: mean_se(&col(5)).0,
                }
            })
            .collect();
        Self {
            scenario: scenario.to_string(),
            rows,
        }
    }

    pub fn get(&self, estimand: &str, method: Method) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.estimand == estimand && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "scenario,estimand,method,n,failed,bias,bias_se,mse,mse_se,coverage50,coverage80,length50,length80\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:e},{:e},{:e},{:e},{},{},{:e},{:e}",
                self.scenario,
                r.estimand,
                r.method.name(),
                r.n,
                r.failed,
                r.bias,
                r.bias_se,
                r.mse,
                r.mse_se,
                r.coverage50,
                r.coverage80,
                r.length50,
                r.length80
            );
        }
        s
    }

    /// Aligned text: one row per estimand × method.
    pub fn to_text(&self) -> String {
        let mut s = format!("scenario: {}\n", self.scenario);
        let _ = writeln!(
            s,
            "{:<22} {:<14} {:>4} {:>11} {:>10} {:>11} {:>6} {:>6} {:>10} {:>10}",
            "estimand", "method", "n", "bias", "bias_se", "mse", "cov50", "cov80", "len50", "len80"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<22} {:<14} {:>4} {:>11.3e} {:>10.2e} {:>11.3e} {:>6.2} {:>6.2} {:>10.3e} {:>10.3e}",
                r.estimand,
                r.method.name(),
                r.n,
                r.bias,
                r.bias_se,
                r.mse,
                r.coverage50,
                r.coverage80,
                r.length50,
                r.length80
            );
        }
        s
    }
}
