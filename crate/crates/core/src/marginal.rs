//! Exact marginal likelihoods of a single stratum with missing categories.
//!
//! Two enumeration oracles sum explicitly over every allocation of the `m`
//! missing cases to categories, and a forward recursion computes the
//! binomial-thinning variant in `O(J m²)` time.

use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::special::{binomial_lpmf, log_sum_exp, poisson_lpmf};

/// Default cap on the number of missing cases an enumeration oracle accepts.
pub const DEFAULT_MISSING_CAP: u64 = 12;
/// Largest category count an enumeration oracle accepts.
pub const MAX_ORACLE_CATEGORIES: usize = 5;

/// One stratum: population `e`, observed counts `x` and missing count `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellInstance {
    pub e: Vec<u64>,
    pub x: Vec<u64>,
    pub m: u64,
}

impl CellInstance {
    pub fn new(e: Vec<u64>, x: Vec<u64>, m: u64) -> Result<Self> {
        dim_check("cell observed counts", x.len(), e.len())?;
        Ok(Self { e, x, m })
    }

    pub fn categories(&self) -> usize {
        self.e.len()
    }
}

/// Calls `f` on every composition `w` of `total` into `parts` nonnegative
/// parts, lexicographically in `(w_1, …, w_{parts-1})`.
pub fn for_each_composition(total: u64, parts: usize, mut f: impl FnMut(&[u64])) {
    if parts == 0 {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    let mut w = vec![0u64; parts];
    fn rec(w: &mut [u64], pos: usize, left: u64, f: &mut dyn FnMut(&[u64])) {
        if pos == w.len() - 1 {
            w[pos] = left;
            f(w);
            return;
        }
        for v in 0..=left {
            w[pos] = v;
            rec(w, pos + 1, left - v, f);
        }
    }
    rec(&mut w, 0, total, &mut f);
}

fn check_oracle_size(j: usize, m: u64, cap: u64) -> Result<()> {
    if j == 0 || j > MAX_ORACLE_CATEGORIES {
        return Err(Error::CapExceeded(format!(
            "oracle supports 1..={MAX_ORACLE_CATEGORIES} categories, got {j}"
        )));
    }
    if m > cap {
        return Err(Error::CapExceeded(format!(
            "{m} missing cases exceeds enumeration cap {cap}"
        )));
    }
    Ok(())
}

fn check_probs(what: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Error::Domain(format!("{what} must lie strictly inside (0, 1)")));
    }
    Ok(())
}

/// Poisson-thinning marginal by enumeration, with the default cap.
pub fn marginal_oracle_lpmf(cell: &CellInstance, lambda: &[f64], p: &[f64]) -> Result<f64> {
    marginal_oracle_lpmf_capped(cell, lambda, p, DEFAULT_MISSING_CAP)
}

/// `log Σ_w Π_j Poisson(x_j + w_j; λ_j E_j) Binomial(x_j; x_j + w_j, p_j)`
/// over compositions `w` of `m`.
pub fn marginal_oracle_lpmf_capped(
    cell: &CellInstance,
    lambda: &[f64],
    p: &[f64],
    cap: u64,
) -> Result<f64> {
    let j = cell.categories();
    check_oracle_size(j, cell.m, cap)?;
    dim_check("lambda", lambda.len(), j)?;
    dim_check("p", p.len(), j)?;
    if lambda.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::Domain("lambda must be positive and finite".into()));
    }
    check_probs("p", p)?;
    let mut terms = Vec::new();
    for_each_composition(cell.m, j, |w| {
        let mut t = 0.0;
        for k in 0..j {
            let y = cell.x[k] + w[k];
            t += poisson_lpmf(y, lambda[k] * cell.e[k] as f64) + binomial_lpmf(cell.x[k], y, p[k]);
        }
        terms.push(t);
    });
    Ok(log_sum_exp(&terms))
}

fn check_binomial_args(
    y_obs: &[u64],
    p: &[f64],
    theta: &[f64],
    e: &[u64],
) -> Result<()> {
    let j = e.len();
    dim_check("y_obs", y_obs.len(), j)?;
    dim_check("p", p.len(), j)?;
    dim_check("theta", theta.len(), j)?;
    check_probs("p", p)?;
    check_probs("theta", theta)
}

#[inline]
fn binomial_pair(y_obs: u64, y: u64, p: f64, theta: f64, e: u64) -> f64 {
    binomial_lpmf(y_obs, y, p) + binomial_lpmf(y, e, theta)
}

/// Binomial-thinning marginal by forward recursion over categories.
///
/// `Y_j ~ Binomial(E_j, θ_j)`, `X_j | Y_j ~ Binomial(Y_j, p_j)`; returns
/// `log P(X = y_obs, Σ_j (Y_j - X_j) = m)`.
pub fn binomial_miss_lpmf(
    y_obs: &[u64],
    m: u64,
    p: &[f64],
    theta: &[f64],
    e: &[u64],
) -> Result<f64> {
    binomial_miss_lpmf_counted(y_obs, m, p, theta, e).map(|(v, _)| v)
}

/// As [`binomial_miss_lpmf`], also returning the number of terms combined
/// by the recursion's inner log-sum-exp.
pub fn binomial_miss_lpmf_counted(
    y_obs: &[u64],
    m: u64,
    p: &[f64],
    theta: &[f64],
    e: &[u64],
) -> Result<(f64, u64)> {
    check_binomial_args(y_obs, p, theta, e)?;
    let n_cat = e.len();
    let width = m as usize + 1;
    // prev[t] = log prob that exactly t missing cases fall in the categories seen so far.
    let mut prev = vec![0.0; width];
    let mut next = vec![f64::NEG_INFINITY; width];
    let mut ops = 0u64;
    let mut scratch = Vec::with_capacity(width);
    for n in 0..n_cat {
        let (yn, pn, tn, en) = (y_obs[n], p[n], theta[n], e[n]);
        next[0] = prev[0] + binomial_pair(yn, yn, pn, tn, en);
        for tot in 1..width {
            if n > 0 {
                scratch.clear();
                for i in 0..=tot {
                    let here = (tot - i) as u64;
                    scratch.push(prev[i] + binomial_pair(yn, yn + here, pn, tn, en));
                }
                ops += scratch.len() as u64;
                next[tot] = log_sum_exp(&scratch);
            } else {
                next[tot] = binomial_pair(yn, yn + tot as u64, pn, tn, en);
            }
        }
        std::mem::swap(&mut prev, &mut next);
    }
    if n_cat == 0 {
        return Ok((if m == 0 { 0.0 } else { f64::NEG_INFINITY }, 0));
    }
    Ok((prev[m as usize], ops))
}

/// Binomial-thinning marginal by enumeration, with the default cap.
pub fn binomial_oracle_lpmf(
    y_obs: &[u64],
    m: u64,
    p: &[f64],
    theta: &[f64],
    e: &[u64],
) -> Result<f64> {
    binomial_oracle_lpmf_capped(y_obs, m, p, theta, e, DEFAULT_MISSING_CAP)
}

pub fn binomial_oracle_lpmf_capped(
    y_obs: &[u64],
    m: u64,
    p: &[f64],
    theta: &[f64],
    e: &[u64],
    cap: u64,
) -> Result<f64> {
    check_oracle_size(e.len(), m, cap)?;
    check_binomial_args(y_obs, p, theta, e)?;
    let mut terms = Vec::new();
    for_each_composition(m, e.len(), |w| {
        let t: f64 = (0..e.len())
            .map(|k| binomial_pair(y_obs[k], y_obs[k] + w[k], p[k], theta[k], e[k]))
            .sum();
        terms.push(t);
    });
    Ok(log_sum_exp(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_composition(2, 3, |w| seen.push(w.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 0, 2],
                vec![0, 1, 1],
                vec![0, 2, 0],
                vec![1, 0, 1],
                vec![1, 1, 0],
                vec![2, 0, 0]
            ]
        );
    }

    #[test]
    fn oracle_no_missing() {
        let cell = CellInstance::new(vec![10, 20], vec![2, 3], 0).unwrap();
        let lam = [0.3, 0.1];
        let p = [0.8, 0.6];
        let got = marginal_oracle_lpmf(&cell, &lam, &p).unwrap();
        let expected = poisson_lpmf(2, 3.0) + 2.0 * 0.8f64.ln() + poisson_lpmf(3, 2.0) + 3.0 * 0.6f64.ln();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn oracle_two_compositions_by_hand() {
        // w = (1, 0): e^{-1}·(1/2)·e^{-1}; w = (0, 1) likewise.
        let cell = CellInstance::new(vec![1, 1], vec![0, 0], 1).unwrap();
        let got = marginal_oracle_lpmf(&cell, &[1.0, 1.0], &[0.5, 0.5]).unwrap();
        let hand = (2.0 * (-2.0f64).exp() * 0.5).ln();
        assert!((got - hand).abs() < 1e-13);
        assert!((got + 2.0).abs() < 1e-13);
    }

    #[test]
    fn oracle_refuses_beyond_cap() {
        let cell = CellInstance::new(vec![1, 1], vec![0, 0], 13).unwrap();
        assert!(matches!(
            marginal_oracle_lpmf(&cell, &[1.0, 1.0], &[0.5, 0.5]),
            Err(Error::CapExceeded(_))
        ));
        let wide = CellInstance::new(vec![1; 6], vec![0; 6], 1).unwrap();
        assert!(matches!(
            marginal_oracle_lpmf(&wide, &[1.0; 6], &[0.5; 6]),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn dp_base_row_and_single_category() {
        let y = [2, 1, 0];
        let e = [5, 4, 3];
        let p = [0.7, 0.4, 0.9];
        let th = [0.3, 0.5, 0.2];
        let got = binomial_miss_lpmf(&y, 0, &p, &th, &e).unwrap();
        let expected: f64 = (0..3)
            .map(|k| binomial_lpmf(y[k], y[k], p[k]) + binomial_lpmf(y[k], e[k], th[k]))
            .sum();
        assert!((got - expected).abs() < 1e-12);

        let got1 = binomial_miss_lpmf(&[2], 3, &[0.6], &[0.4], &[9]).unwrap();
        let expected1 = binomial_lpmf(2, 5, 0.6) + binomial_lpmf(5, 9, 0.4);
        assert!((got1 - expected1).abs() < 1e-12);
        let o1 = binomial_oracle_lpmf(&[2], 3, &[0.6], &[0.4], &[9]).unwrap();
        assert!((o1 - expected1).abs() < 1e-12);
    }

    #[test]
    fn dp_impossible_allocation() {
        let v = binomial_miss_lpmf(&[2, 2], 3, &[0.5, 0.5], &[0.5, 0.5], &[3, 3]).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
        assert!(binomial_miss_lpmf(&[0], 0, &[1.0], &[0.5], &[3]).is_err());
    }

    #[test]
    fn dp_op_count_is_quadratic_in_missing() {
        let (_, ops) =
            binomial_miss_lpmf_counted(&[0; 4], 10, &[0.5; 4], &[0.5; 4], &[30; 4]).unwrap();
        // Σ_{tot=1..m} (tot + 1) per category after the first.
        assert_eq!(ops, 3 * (2..=11).sum::<u64>());
    }
}
