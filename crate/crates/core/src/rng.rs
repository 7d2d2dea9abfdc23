//! Seeded random streams and small discrete samplers.
//!
//! Every random draw derives from a root seed and a stream id, so results do
//! not depend on the order in which parallel work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};

/// SplitMix64 finaliser; used to hash stream labels into stream ids.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stream id for a path of labels, e.g. `[replicate, method, chain]`.
pub fn derive_stream(path: &[u64]) -> u64 {
    path.iter()
        .fold(0x5EED_u64, |acc, &p| mix64(acc ^ mix64(p)))
}

/// ChaCha8 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("finite positive rate").sample(rng) as u64
}

pub fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Multinomial draw by sequential conditional binomials. `weights` need not
/// be normalised but must be nonnegative with a positive sum.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, weights: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; weights.len()];
    let mut left = n;
    let mut rest: f64 = weights.iter().sum();
    for (k, &w) in weights.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == weights.len() || rest <= 0.0 {
            out[k] = left;
            left = 0;
            break;
        }
        let draw = binomial(rng, left, (w / rest).min(1.0));
        out[k] = draw;
        left -= draw;
        rest -= w;
    }
    // Any remainder left by rounding in `rest` goes to the last positive weight.
    if left > 0 {
        if let Some(k) = weights.iter().rposition(|&w| w > 0.0) {
            out[k] += left;
        }
    }
    out
}

/// Gamma(shape, 1) variate.
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
}
