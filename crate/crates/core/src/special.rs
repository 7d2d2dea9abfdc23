//! Scalar numerics shared by the likelihoods, estimators and samplers.

use statrs::function::factorial::ln_factorial as statrs_ln_factorial;

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn ln_factorial(k: u64) -> f64 {
    statrs_ln_factorial(k)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Numerically stable `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Numerically stable `log(sum(exp(xs)))`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Poisson log-pmf with the rate-zero floor: rate 0 and count 0 gives 0,
/// rate 0 and a positive count gives `-inf`.
#[inline]
pub fn poisson_lpmf(k: u64, rate: f64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let kf = k as f64;
    let lead = if k == 0 { 0.0 } else { kf * rate.ln() };
    lead - rate - ln_factorial(k)
}

/// Poisson log-pmf parameterised by the log rate.
#[inline]
pub fn poisson_lpmf_log_rate(k: u64, log_rate: f64) -> f64 {
    if log_rate == f64::NEG_INFINITY {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let lead = if k == 0 { 0.0 } else { k as f64 * log_rate };
    lead - log_rate.exp() - ln_factorial(k)
}

/// Binomial log-pmf `log P(K = k | n, p)` with the usual conventions at `p ∈ {0, 1}`.
pub fn binomial_lpmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let fails = n - k;
    let mut out = ln_choose(n, k);
    if k > 0 {
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        out += k as f64 * p.ln();
    }
    if fails > 0 {
        if p == 1.0 {
            return f64::NEG_INFINITY;
        }
        out += fails as f64 * (-p).ln_1p();
    }
    out
}

#[inline]
pub fn inv_logit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `log(inv_logit(x))`.
#[inline]
pub fn log_inv_logit(x: f64) -> f64 {
    -softplus(-x)
}

/// `log(1 - inv_logit(x))`.
#[inline]
pub fn log1m_inv_logit(x: f64) -> f64 {
    -softplus(x)
}

#[inline]
pub fn normal_lpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

/// Half-normal log density on `x > 0`, including the factor 2.
#[inline]
pub fn half_normal_lpdf(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    std::f64::consts::LN_2 + normal_lpdf(x, 0.0, scale)
}

#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    // libm's erfc is accurate to about 1 ulp; statrs 0.19 loses ~1e-10.
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// The first three tails `c_k = k / (x + c_{k+1})` of the Laplace continued
/// fraction for the upper-tail Mills ratio, which is `1 / (x + c_1)`. 100
/// terms give full double precision from `x = 3` upwards.
pub fn mills_fraction_tails(x: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    let mut tail = 0.0;
    for k in (1..=100).rev() {
        tail = k as f64 / (x + tail);
        if k <= 3 {
            out[k - 1] = tail;
        }
    }
    out
}

/// Upper-tail Mills ratio `(1 - Φ(x)) / φ(x)` for `x ≥ 3`.
fn mills_ratio_upper(x: f64) -> f64 {
    1.0 / (x + mills_fraction_tails(x)[0])
}

/// `φ(z) / Φ(z)`, the inverse Mills ratio of the lower tail.
///
/// Direct evaluation for `z ≥ -3`; below that the continued-fraction Mills
/// ratio is used, since `erfc` loses relative accuracy deep in the tail.
pub fn phi_over_cdf(z: f64) -> f64 {
    if z >= -3.0 {
        std_normal_pdf(z) / std_normal_cdf(z)
    } else {
        1.0 / mills_ratio_upper(-z)
    }
}

/// Standard normal quantile function.
pub fn std_normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}
