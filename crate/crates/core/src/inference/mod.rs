//! Gradient-based MCMC over unconstrained targets, convergence diagnostics
//! and posterior summaries.

mod adapt;
pub mod diagnostics;
mod nuts;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::GeoParams;
use crate::rng::{multinomial, stream_rng};
use crate::special::log1m_inv_logit;
use crate::tables::{CaseTable, DesignMatrices, PopulationTable};

pub use diagnostics::{
    ess_bulk, ess_mean, ess_tail, quantile, split_rhat, summarize, Diagnostics, SummaryRow,
};

/// A log density on ℝⁿ with its gradient.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log density. `-inf`
    /// marks a point outside the support; NaN is reported as an error.
    fn log_density_grad(&self, position: &[f64], grad: &mut [f64]) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    pub seed: u64,
    /// Initial values are uniform on `(-init_scale, init_scale)`.
    pub init_scale: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 500,
            draws: 500,
            target_accept: 0.8,
            max_depth: 10,
            seed: 1,
            init_scale: 2.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.draws == 0 {
            return Err(Error::Config("chains and draws must be positive".into()));
        }
        if !(self.target_accept > 0.5 && self.target_accept < 1.0) {
            return Err(Error::Config(format!(
                "target_accept must lie in (0.5, 1), got {}",
                self.target_accept
            )));
        }
        if self.max_depth == 0 || self.max_depth > 20 {
            return Err(Error::Config("max_depth must be in 1..=20".into()));
        }
        if !(self.init_scale >= 0.0) {
            return Err(Error::Config("init_scale must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Per-chain sampler statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
    pub mean_accept: f64,
    pub divergences: usize,
    pub max_depth_hits: usize,
    pub leapfrog_steps: u64,
}

/// Posterior draws stored chain-major: `values[(c * iters + t) * params + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub names: Vec<String>,
    pub chains: usize,
    pub iters: usize,
    pub values: Vec<f64>,
    pub divergent: Vec<bool>,
    pub tree_depth: Vec<u8>,
    pub accept_stat: Vec<f64>,
    pub stats: Vec<ChainStats>,
}

impl PosteriorDraws {
    /// Draws with no sampler statistics, e.g. derived quantities.
    pub fn from_values(names: Vec<String>, chains: usize, iters: usize, values: Vec<f64>) -> Result<Self> {
        let n = chains * iters;
        if values.len() != n * names.len() {
            return Err(Error::Dimension(format!(
                "{} values for {chains} x {iters} x {} draws",
                values.len(),
                names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Dimension(format!("duplicate parameter name {dup}")));
        }
        Ok(Self {
            names,
            chains,
            iters,
            values,
            divergent: vec![false; n],
            tree_depth: vec![0; n],
            accept_stat: vec![f64::NAN; n],
            stats: Vec::new(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn n_draws(&self) -> usize {
        self.chains * self.iters
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    #[inline]
    pub fn get(&self, chain: usize, iter: usize, param: usize) -> f64 {
        self.values[(chain * self.iters + iter) * self.names.len() + param]
    }

    /// Draw `t` of all parameters, counting across chains.
    pub fn draw(&self, t: usize) -> &[f64] {
        let p = self.names.len();
        &self.values[t * p..(t + 1) * p]
    }

    /// One parameter as `chains` vectors of `iters` draws.
    pub fn param_chains(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.chains)
            .map(|c| (0..self.iters).map(|t| self.get(c, t, param)).collect())
            .collect()
    }

    /// One parameter with all chains pooled.
    pub fn param_pooled(&self, param: usize) -> Vec<f64> {
        (0..self.n_draws())
            .map(|t| self.values[t * self.names.len() + param])
            .collect()
    }

    pub fn divergences(&self) -> usize {
        self.divergent.iter().filter(|d| **d).count()
    }

    /// Apply `f` to each draw to get new named quantities.
    pub fn map_draws<F>(&self, names: Vec<String>, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let mut values = Vec::with_capacity(self.n_draws() * names.len());
        for t in 0..self.n_draws() {
            let out = f(self.draw(t))?;
            if out.len() != names.len() {
                return Err(Error::Dimension("derived draw length".into()));
            }
            values.extend(out);
        }
        let mut d = Self::from_values(names, self.chains, self.iters, values)?;
        d.divergent = self.divergent.clone();
        d.tree_depth = self.tree_depth.clone();
        d.accept_stat = self.accept_stat.clone();
        d.stats = self.stats.clone();
        Ok(d)
    }
}

/// Runs `config.chains` independent chains in parallel.
///
/// Chain `c` draws from the RNG stream `(config.seed, c + 1)`, so output is
/// identical regardless of thread count. Draws are recorded on the
/// unconstrained scale of `target`.
pub fn sample_posterior<T: LogDensity>(target: &T, config: &SamplerConfig, names: Vec<String>) -> Result<PosteriorDraws> {
    config.validate()?;
    let dim = target.dim();
    if names.len() != dim {
        return Err(Error::Dimension(format!(
            "{} names for a {dim}-dimensional target",
            names.len()
        )));
    }
    let runs: Vec<Result<nuts::ChainOutput>> = (0..config.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(config.seed, c as u64 + 1);
            nuts::run_chain(target, config, &mut rng)
        })
        .collect();
    let n = config.chains * config.draws;
    let mut out = PosteriorDraws {
        names,
        chains: config.chains,
        iters: config.draws,
        values: Vec::with_capacity(n * dim),
        divergent: Vec::with_capacity(n),
        tree_depth: Vec::with_capacity(n),
        accept_stat: Vec::with_capacity(n),
        stats: Vec::with_capacity(config.chains),
    };
    for run in runs {
        let run = run?;
        if run.stats.divergences == config.draws {
            return Err(Error::Sampler(
                "every post-warmup transition diverged".into(),
            ));
        }
        out.values.extend(run.values);
        out.divergent.extend(run.divergent);
        out.tree_depth.extend(run.tree_depth);
        out.accept_stat.extend(run.accept_stat);
        out.stats.push(run.stats);
    }
    Ok(out)
}

/// Draw an allocation of each stratum's missing cases to categories,
/// proportional to the expected missing count per category under `params`.
///
/// Returns a table whose observed counts are the imputed missing cases.
pub fn allocate_missing<R: Rng + ?Sized>(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    params: &[GeoParams],
    rng: &mut R,
) -> Result<CaseTable> {
    cases.conforms_to(pop)?;
    let d = pop.dims();
    let mut out = CaseTable::zeros(d);
    let mut w = vec![0.0; d.categories];
    for (g, gp) in params.iter().enumerate().take(d.geos) {
        for i in 0..d.strata {
            let m = cases.m(i, g);
            if m == 0 {
                continue;
            }
            let mis = design.zdot(i, &gp.gamma);
            let logs: Vec<f64> = (0..d.categories)
                .map(|j| {
                    let e = pop.get(i, g, j);
                    if e == 0 {
                        f64::NEG_INFINITY
                    } else {
                        log1m_inv_logit(mis + gp.eta[j]) + gp.log_lambda[j] + (e as f64).ln()
                    }
                })
                .collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return Err(Error::Imputation(format!(
                    "stratum {i} in geography {g} has missing cases but no population"
                )));
            }
            for (wj, l) in w.iter_mut().zip(&logs) {
                *wj = (l - top).exp();
            }
            for (j, v) in multinomial(rng, m, &w).into_iter().enumerate() {
                out.set_x(i, g, j, v);
            }
        }
    }
    Ok(out)
}
