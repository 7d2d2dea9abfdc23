//! Rank-normalised split R̂, bulk/tail effective sample size and summaries.
//!
//! Functions take one parameter's draws as a slice of chains. Constant or
//! non-finite input yields NaN.

use serde::{Deserialize, Serialize};

use super::PosteriorDraws;
use crate::special::std_normal_quantile;

fn degenerate(chains: &[Vec<f64>]) -> bool {
    let first = match chains.iter().flatten().next() {
        Some(v) => *v,
        None => return true,
    };
    chains.iter().flatten().any(|v| !v.is_finite()) || chains.iter().flatten().all(|v| *v == first)
}

/// Halve each chain, dropping the middle draw of odd-length chains.
pub fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let n = c.len();
        let half = n / 2;
        out.push(c[..half].to_vec());
        out.push(c[n - half..].to_vec());
    }
    out
}

/// Replace draws by normal scores of their pooled fractional ranks
/// (average ranks for ties, Blom offset 3/8).
pub fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let s = pooled.len();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; s];
    let mut k = 0;
    while k < s {
        let mut e = k;
        while e + 1 < s && pooled[order[e + 1]] == pooled[order[k]] {
            e += 1;
        }
        let avg = (k + e) as f64 / 2.0 + 1.0;
        for &idx in &order[k..=e] {
            ranks[idx] = avg;
        }
        k = e + 1;
    }
    let mut out = Vec::with_capacity(chains.len());
    let mut pos = 0;
    for c in chains {
        out.push(
            (0..c.len())
                .map(|t| std_normal_quantile((ranks[pos + t] - 0.375) / (s as f64 + 0.25)))
                .collect(),
        );
        pos += c.len();
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Classic potential scale reduction of equal-length chains.
fn rhat_basic(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| sample_var(c)).sum::<f64>() / chains.len() as f64;
    let b = n * sample_var(&means);
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Rank-normalised split R̂: the larger of the bulk and folded statistics.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    if chains.is_empty() || chains[0].len() < 4 || degenerate(chains) {
        return f64::NAN;
    }
    let split = split_chains(chains);
    let bulk = rhat_basic(&rank_normalize(&split));
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let med = quantile(&all, 0.5);
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|v| (v - med).abs()).collect())
        .collect();
    let tail = if degenerate(&folded) {
        f64::NAN
    } else {
        rhat_basic(&rank_normalize(&folded))
    };
    if tail.is_nan() {
        bulk
    } else {
        bulk.max(tail)
    }
}

fn autocov(x: &[f64], mean: f64, lag: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for t in 0..n - lag {
        s += (x[t] - mean) * (x[t + lag] - mean);
    }
    s / n as f64
}

/// Multi-chain effective sample size with Geyer's initial positive and
/// initial monotone sequence truncation.
pub fn ess_raw(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.first().map_or(0, Vec::len);
    if m == 0 || n < 3 || degenerate(chains) {
        return f64::NAN;
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let mean_acov = |lag: usize| -> f64 {
        chains
            .iter()
            .zip(&means)
            .map(|(c, mu)| autocov(c, *mu, lag))
            .sum::<f64>()
            / m as f64
    };
    let mean_var = mean_acov(0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += sample_var(&means);
    }
    let rho_at = |lag: usize| 1.0 - (mean_var - mean_acov(lag)) / var_plus;

    let mut rho = vec![0.0; n];
    let mut t = 0usize;
    let mut even = 1.0;
    rho[0] = even;
    let mut odd = rho_at(1);
    rho[1] = odd;
    while t + 5 < n && !(even + odd).is_nan() && even + odd > 0.0 {
        t += 2;
        even = rho_at(t);
        odd = rho_at(t + 1);
        if even + odd >= 0.0 {
            rho[t] = even;
            rho[t + 1] = odd;
        }
    }
    let max_t = t;
    if even > 0.0 {
        rho[max_t] = even;
    }
    let mut t = 0usize;
    while t + 4 <= max_t {
        t += 2;
        if rho[t] + rho[t + 1] > rho[t - 2] + rho[t - 1] {
            rho[t] = (rho[t - 2] + rho[t - 1]) / 2.0;
            rho[t + 1] = rho[t];
        }
    }
    let total = (m * n) as f64;
    let head: f64 = if max_t == 0 {
        rho[0]
    } else {
        rho[..max_t].iter().sum()
    };
    let tau = (-1.0 + 2.0 * head + rho[max_t]).max(1.0 / total.log10());
    total / tau
}

/// ESS of the mean: split chains, no rank transform.
pub fn ess_mean(chains: &[Vec<f64>]) -> f64 {
    ess_raw(&split_chains(chains))
}

/// Bulk ESS: rank-normalised split chains.
pub fn ess_bulk(chains: &[Vec<f64>]) -> f64 {
    if degenerate(chains) {
        return f64::NAN;
    }
    ess_raw(&rank_normalize(&split_chains(chains)))
}

/// Tail ESS: the smaller ESS of the 5% and 95% quantile indicators.
pub fn ess_tail(chains: &[Vec<f64>]) -> f64 {
    if degenerate(chains) {
        return f64::NAN;
    }
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let ess_q = |p: f64| {
        let q = quantile(&all, p);
        let ind: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| c.iter().map(|v| if *v <= q { 1.0 } else { 0.0 }).collect())
            .collect();
        ess_raw(&split_chains(&ind))
    };
    let (a, b) = (ess_q(0.05), ess_q(0.95));
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

/// Type-7 (linear interpolation) sample quantile.
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub quantiles: Vec<f64>,
    pub mcse_mean: f64,
    pub rhat: f64,
    pub ess_bulk: f64,
    pub ess_tail: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Per-parameter mean, SD, quantiles, MCSE of the mean (`SD / √ESS`), R̂ and ESS.
pub fn summarize(draws: &PosteriorDraws, probs: &[f64]) -> Vec<SummaryRow> {
    (0..draws.n_params())
        .map(|k| summarize_chains(&draws.names[k], &draws.param_chains(k), probs))
        .collect()
}

pub fn summarize_chains(name: &str, chains: &[Vec<f64>], probs: &[f64]) -> SummaryRow {
    let mut all: Vec<f64> = chains.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let mu = all.iter().sum::<f64>() / n;
    let sd = if all.len() > 1 {
        (all.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    all.sort_by(f64::total_cmp);
    let quantiles = probs.iter().map(|&p| quantile_sorted(&all, p)).collect();
    let constant = degenerate(chains);
    let (mcse, note) = if constant {
        (0.0, Some("constant draws: R-hat and ESS undefined".to_string()))
    } else {
        (sd / ess_mean(chains).sqrt(), None)
    };
    SummaryRow {
        name: name.to_string(),
        mean: mu,
        sd,
        quantiles,
        mcse_mean: mcse,
        rhat: split_rhat(chains),
        ess_bulk: ess_bulk(chains),
        ess_tail: ess_tail(chains),
        note,
    }
}

/// Run-level convergence summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rhat: Vec<f64>,
    pub ess_bulk: Vec<f64>,
    pub ess_tail: Vec<f64>,
    pub max_rhat: f64,
    pub min_ess_bulk: f64,
    pub min_ess_tail: f64,
    pub divergences: usize,
    pub max_depth_hits: usize,
}

impl Diagnostics {
    pub fn compute(draws: &PosteriorDraws) -> Self {
        let mut rhat = Vec::with_capacity(draws.n_params());
        let mut bulk = Vec::with_capacity(draws.n_params());
        let mut tail = Vec::with_capacity(draws.n_params());
        for k in 0..draws.n_params() {
            let ch = draws.param_chains(k);
            rhat.push(split_rhat(&ch));
            bulk.push(ess_bulk(&ch));
            tail.push(ess_tail(&ch));
        }
        let fmax = |v: &[f64]| v.iter().copied().filter(|x| !x.is_nan()).fold(f64::NAN, f64::max);
        let fmin = |v: &[f64]| v.iter().copied().filter(|x| !x.is_nan()).fold(f64::NAN, f64::min);
        Self {
            max_rhat: fmax(&rhat),
            min_ess_bulk: fmin(&bulk),
            min_ess_tail: fmin(&tail),
            rhat,
            ess_bulk: bulk,
            ess_tail: tail,
            divergences: draws.divergences(),
            max_depth_hits: draws.stats.iter().map(|s| s.max_depth_hits).sum(),
        }
    }
}
