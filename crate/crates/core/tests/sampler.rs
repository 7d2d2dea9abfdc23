//! NUTS behaviour on targets with known moments.

use missrate_core::inference::{sample_posterior, summarize, LogDensity, SamplerConfig};
use missrate_core::Result;

struct Gaussian {
    // Precision matrix, row-major.
    prec: Vec<f64>,
    dim: usize,
}

impl Gaussian {
    fn standard(dim: usize) -> Self {
        let mut prec = vec![0.0; dim * dim];
        for k in 0..dim {
            prec[k * dim + k] = 1.0;
        }
        Self { prec, dim }
    }

    fn correlated(rho: f64) -> Self {
        let d = 1.0 - rho * rho;
        Self {
            prec: vec![1.0 / d, -rho / d, -rho / d, 1.0 / d],
            dim: 2,
        }
    }
}

impl LogDensity for Gaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_grad(&self, q: &[f64], grad: &mut [f64]) -> Result<f64> {
        let mut lp = 0.0;
        for r in 0..self.dim {
            let row: f64 = (0..self.dim).map(|c| self.prec[r * self.dim + c] * q[c]).sum();
            grad[r] = -row;
            lp -= 0.5 * q[r] * row;
        }
        Ok(lp)
    }
}

fn config(seed: u64) -> SamplerConfig {
    SamplerConfig {
        chains: 4,
        warmup: 500,
        draws: 1000,
        seed,
        ..SamplerConfig::default()
    }
}

#[test]
fn standard_normal_moments() {
    let target = Gaussian::standard(3);
    let names = vec!["a".into(), "b".into(), "c".into()];
    let draws = sample_posterior(&target, &config(11), names).unwrap();
    assert_eq!(draws.n_draws(), 4000);
    for row in summarize(&draws, &[0.5]) {
        assert!(row.mean.abs() < 4.0 / row.ess_bulk.sqrt(), "{row:?}");
        assert!((row.sd * row.sd - 1.0).abs() < 0.1, "{row:?}");
        assert!(row.rhat < 1.01, "{row:?}");
    }
    assert_eq!(draws.divergences(), 0);
}

#[test]
fn correlated_gaussian_recovers_correlation() {
    let target = Gaussian::correlated(0.9);
    let draws = sample_posterior(&target, &config(5), vec!["x".into(), "y".into()]).unwrap();
    let x = draws.param_pooled(0);
    let y = draws.param_pooled(1);
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let r = sxy / (sxx * syy).sqrt();
    assert!((r - 0.9).abs() < 0.05, "correlation {r}");
}

#[test]
fn identical_seed_gives_identical_draws() {
    let target = Gaussian::standard(2);
    let mut cfg = config(99);
    cfg.warmup = 100;
    cfg.draws = 100;
    let a = sample_posterior(&target, &cfg, vec!["a".into(), "b".into()]).unwrap();
    let b = sample_posterior(&target, &cfg, vec!["a".into(), "b".into()]).unwrap();
    assert_eq!(a.values, b.values);
    cfg.seed = 100;
    let c = sample_posterior(&target, &cfg, vec!["a".into(), "b".into()]).unwrap();
    assert_ne!(a.values, c.values);
}

struct Bimodal;

impl LogDensity for Bimodal {
    fn dim(&self) -> usize {
        1
    }

    fn log_density_grad(&self, q: &[f64], grad: &mut [f64]) -> Result<f64> {
        // Equal mixture of N(-8, 0.5²) and N(8, 0.5²).
        let a = -0.5 * ((q[0] + 8.0) / 0.5).powi(2);
        let b = -0.5 * ((q[0] - 8.0) / 0.5).powi(2);
        let top = a.max(b);
        let (wa, wb) = ((a - top).exp(), (b - top).exp());
        let lp = top + (wa + wb).ln();
        grad[0] = (wa * (-(q[0] + 8.0) / 0.25) + wb * (-(q[0] - 8.0) / 0.25)) / (wa + wb);
        Ok(lp)
    }
}

#[test]
fn separated_modes_are_flagged_by_rhat() {
    let mut cfg = config(3);
    cfg.chains = 8;
    cfg.warmup = 200;
    cfg.draws = 300;
    cfg.init_scale = 10.0;
    let draws = sample_posterior(&Bimodal, &cfg, vec!["x".into()]).unwrap();
    let chains = draws.param_chains(0);
    let signs: Vec<bool> = chains.iter().map(|c| c[0] > 0.0).collect();
    // With 8 dispersed starts both modes are occupied except with prob 2^-7.
    assert!(signs.iter().any(|s| *s) && signs.iter().any(|s| !*s));
    let row = &summarize(&draws, &[])[0];
    assert!(row.rhat > 1.1, "R-hat {}", row.rhat);
}

#[test]
fn invalid_config_is_rejected() {
    let mut cfg = config(1);
    cfg.target_accept = 0.3;
    assert!(sample_posterior(&Gaussian::standard(1), &cfg, vec!["a".into()]).is_err());
    let cfg = config(1);
    assert!(sample_posterior(&Gaussian::standard(2), &cfg, vec!["a".into()]).is_err());
}
