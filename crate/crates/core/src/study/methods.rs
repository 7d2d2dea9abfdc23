//! Inferential methods compared in the simulation study: the joint model,
//! complete-case analysis, and multiple imputation followed by the
//! complete-case model.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{sample_posterior, Diagnostics, PosteriorDraws, SamplerConfig};
use crate::model::{Parameterization, PosteriorTarget};
use crate::params::{ModelKind, ParamLayout, PriorConfig};
use crate::rng::{derive_stream, gamma, multinomial, stream_rng};
use crate::study::estimands::compute_estimands;
use crate::tables::{CaseTable, DesignMatrices, PopulationTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Joint,
    CompleteCase,
    MiAdhoc,
    MiGibbs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Joint, Method::CompleteCase, Method::MiAdhoc, Method::MiGibbs];

    pub fn name(self) -> &'static str {
        match self {
            Method::Joint => "joint",
            Method::CompleteCase => "complete-case",
            Method::MiAdhoc => "mi-adhoc",
            Method::MiGibbs => "mi-gibbs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }

    /// Model fitted to the (possibly imputed) data.
    pub fn kind(self) -> ModelKind {
        match self {
            Method::Joint => ModelKind::Joint,
            _ => ModelKind::CompleteCase,
        }
    }

    fn stream_id(self) -> u64 {
        self as u64 + 1
    }
}

/// Multiple-imputation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiSettings {
    /// Completed datasets per analysis.
    pub imputations: usize,
    /// Gibbs burn-in iterations.
    pub gibbs_burn: usize,
    /// Gibbs iterations between retained datasets.
    pub gibbs_thin: usize,
}

impl Default for MiSettings {
    fn default() -> Self {
        Self {
            imputations: 20,
            gibbs_burn: 250,
            gibbs_thin: 25,
        }
    }
}

/// Parameter names of a fitted model on the reporting scale.
pub fn param_names(layout: &ParamLayout, pop: &PopulationTable, design: &DesignMatrices) -> Vec<String> {
    let l = pop.labels();
    layout.names(&l.geos, &l.categories, &design.z_names)
}

/// Samples the posterior of `kind`, with the observation blocks
/// non-centered, and returns draws on the reporting scale (`θ_g` and `σ` rather than `z` and
/// `log σ`).
pub fn fit_model(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    prior: &PriorConfig,
    config: &SamplerConfig,
    kind: ModelKind,
) -> Result<PosteriorDraws> {
    let target = PosteriorTarget::new(pop, cases, design, prior, kind)?
        .with_parameterization(Parameterization::OBSERVATION_NON_CENTERED);
    fit_target(&target, pop, design, config)
}

/// As [`fit_model`] for an already built (e.g. prior-only) target.
pub fn fit_target(
    target: &PosteriorTarget,
    pop: &PopulationTable,
    design: &DesignMatrices,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    let layout = target.layout().clone();
    let names = param_names(&layout, pop, design);
    let raw = sample_posterior(target, config, names.clone())?;
    raw.map_draws(names, |t| Ok(layout.constrain(&target.to_centered(t))))
}

pub fn fit_joint(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    prior: &PriorConfig,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    fit_model(pop, cases, design, prior, config, ModelKind::Joint)
}

/// Poisson model for the observed counts only; missing cases are ignored.
pub fn fit_complete_case(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    prior: &PriorConfig,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    fit_model(pop, cases, design, prior, config, ModelKind::CompleteCase)
}

/// Draws of the estimands implied by each posterior draw of a `kind` fit.
pub fn estimand_draws(
    draws: &PosteriorDraws,
    kind: ModelKind,
    pop: &PopulationTable,
    design: &DesignMatrices,
) -> Result<PosteriorDraws> {
    let d = pop.dims();
    let layout = ParamLayout::new(kind, d.categories, design.k(), d.geos);
    if draws.n_params() != layout.dim() {
        return Err(Error::Dimension(format!(
            "{} draw columns for a {}-parameter model",
            draws.n_params(),
            layout.dim()
        )));
    }
    let eval = |v: &[f64]| -> Result<Vec<(String, f64)>> {
        let (geo, hyper) = layout.unpack(&layout.unconstrain(v));
        Ok(compute_estimands(&geo, Some(&hyper), pop, design)?.named(&pop.labels().categories))
    };
    let names: Vec<String> = eval(draws.draw(0))?.into_iter().map(|(n, _)| n).collect();
    draws.map_draws(names, |v| Ok(eval(v)?.into_iter().map(|(_, x)| x).collect()))
}

/// Completes the data by allocating each stratum's missing cases with
/// probabilities proportional to its category populations.
pub fn impute_adhoc<R: Rng + ?Sized>(pop: &PopulationTable, cases: &CaseTable, rng: &mut R) -> Result<CaseTable> {
    cases.conforms_to(pop)?;
    let d = pop.dims();
    let mut out = cases.without_missing();
    for g in 0..d.geos {
        for i in 0..d.strata {
            let m = cases.m(i, g);
            if m == 0 {
                continue;
            }
            let w: Vec<f64> = pop.row(i, g).iter().map(|&e| e as f64).collect();
            if w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Imputation(format!(
                    "stratum {i} of geography {g} has {m} missing cases but no population"
                )));
            }
            for (j, eps) in multinomial(rng, m, &w).into_iter().enumerate() {
                out.set_x(i, g, j, cases.x(i, g, j) + eps);
            }
        }
    }
    Ok(out)
}

fn dirichlet<R: Rng + ?Sized>(rng: &mut R, shape: &[f64], out: &mut [f64]) {
    let mut total = 0.0;
    for (o, &a) in out.iter_mut().zip(shape) {
        *o = gamma(rng, a);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Data-augmentation Gibbs sampler assuming missingness at random: per
/// stratum, `ε ~ Multinomial(m, θ)` then `θ ~ Dirichlet(1 + x + ε)`.
///
/// After `n_burn` sweeps, every `thin`-th of the next `n_keep` sweeps yields
/// a completed table, so `n_keep / thin` tables are returned.
pub fn impute_gibbs<R: Rng + ?Sized>(
    cases: &CaseTable,
    n_burn: usize,
    n_keep: usize,
    thin: usize,
    rng: &mut R,
) -> Result<Vec<CaseTable>> {
    if thin == 0 {
        return Err(Error::Config("Gibbs thinning must be positive".into()));
    }
    let d = cases.dims();
    let nj = d.categories;
    let mut theta = vec![0.0; d.n_cells()];
    let mut eps = vec![0u64; d.n_cells()];
    let mut shape = vec![0.0; nj];
    for r in 0..d.n_rows() {
        let x = &cases.observed()[r * nj..(r + 1) * nj];
        for (s, &xv) in shape.iter_mut().zip(x) {
            *s = 1.0 + xv as f64;
        }
        dirichlet(rng, &shape, &mut theta[r * nj..(r + 1) * nj]);
    }
    let mut out = Vec::with_capacity(n_keep / thin);
    for sweep in 0..n_burn + n_keep {
        for r in 0..d.n_rows() {
            let cell = r * nj..(r + 1) * nj;
            let m = cases.missing()[r];
            let alloc = multinomial(rng, m, &theta[cell.clone()]);
            eps[cell.clone()].copy_from_slice(&alloc);
            let x = &cases.observed()[cell.clone()];
            for ((s, &xv), &e) in shape.iter_mut().zip(x).zip(&alloc) {
                *s = 1.0 + (xv + e) as f64;
            }
            dirichlet(rng, &shape, &mut theta[cell]);
        }
        if sweep >= n_burn && (sweep - n_burn + 1).is_multiple_of(thin) {
            let observed: Vec<u64> = cases.observed().iter().zip(&eps).map(|(x, e)| x + e).collect();
            out.push(CaseTable::new(d, observed, vec![0; d.n_rows()])?);
        }
    }
    Ok(out)
}

/// Concatenates posterior draws from several fits into one superset, each
/// fit's chains becoming chains of the result.
pub fn pool_mi(fits: &[PosteriorDraws]) -> Result<PosteriorDraws> {
    let first = fits
        .first()
        .ok_or_else(|| Error::Dimension("no fits to pool".into()))?;
    let mut out = first.clone();
    for f in &fits[1..] {
        if f.names != first.names || f.iters != first.iters {
            return Err(Error::Dimension(
                "pooled fits must share parameter names and iteration counts".into(),
            ));
        }
        out.chains += f.chains;
        out.values.extend_from_slice(&f.values);
        out.divergent.extend_from_slice(&f.divergent);
        out.tree_depth.extend_from_slice(&f.tree_depth);
        out.accept_stat.extend_from_slice(&f.accept_stat);
        out.stats.extend(f.stats.iter().cloned());
    }
    Ok(out)
}

/// Worst-case convergence summary across one or more fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub fits: usize,
    pub max_rhat: f64,
    /// Minimum bulk and tail ESS divided by the number of draws.
    pub min_bulk_efficiency: f64,
    pub min_tail_efficiency: f64,
    pub divergences: usize,
    pub max_depth_hits: usize,
}

impl FitDiagnostics {
    pub fn of(draws: &PosteriorDraws) -> Self {
        let d = Diagnostics::compute(draws);
        let n = draws.n_draws() as f64;
        Self {
            fits: 1,
            max_rhat: d.max_rhat,
            min_bulk_efficiency: d.min_ess_bulk / n,
            min_tail_efficiency: d.min_ess_tail / n,
            divergences: d.divergences,
            max_depth_hits: d.max_depth_hits,
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            fits: self.fits + other.fits,
            max_rhat: self.max_rhat.max(other.max_rhat),
            min_bulk_efficiency: self.min_bulk_efficiency.min(other.min_bulk_efficiency),
            min_tail_efficiency: self.min_tail_efficiency.min(other.min_tail_efficiency),
            divergences: self.divergences + other.divergences,
            max_depth_hits: self.max_depth_hits + other.max_depth_hits,
        }
    }
}

/// Result of applying a method to one dataset.
#[derive(Debug, Clone)]
pub struct MethodFit {
    pub method: Method,
    /// Parameter draws on the reporting scale; pooled over imputations for MI.
    pub draws: PosteriorDraws,
    pub diagnostics: FitDiagnostics,
}

/// Runs `method` on one dataset. Randomness for imputation and sampling is
/// derived from `(config.seed, stream)`.
#[allow(clippy::too_many_arguments)]
pub fn run_method(
    method: Method,
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    prior: &PriorConfig,
    config: &SamplerConfig,
    mi: &MiSettings,
    stream: u64,
) -> Result<MethodFit> {
    let seeded = |tag: u64| SamplerConfig {
        seed: derive_stream(&[config.seed, stream, method.stream_id(), tag]),
        ..config.clone()
    };
    let completed = match method {
        Method::Joint | Method::CompleteCase => {
            let draws = fit_model(pop, cases, design, prior, &seeded(0), method.kind())?;
            let diagnostics = FitDiagnostics::of(&draws);
            return Ok(MethodFit {
                method,
                draws,
                diagnostics,
            });
        }
        Method::MiAdhoc => {
            let mut rng = stream_rng(config.seed, derive_stream(&[stream, method.stream_id(), u64::MAX]));
            (0..mi.imputations)
                .map(|_| impute_adhoc(pop, cases, &mut rng))
                .collect::<Result<Vec<_>>>()?
        }
        Method::MiGibbs => {
            let mut rng = stream_rng(config.seed, derive_stream(&[stream, method.stream_id(), u64::MAX]));
            impute_gibbs(cases, mi.gibbs_burn, mi.imputations * mi.gibbs_thin, mi.gibbs_thin, &mut rng)?
        }
    };
    if completed.is_empty() {
        return Err(Error::Config("multiple imputation needs at least one dataset".into()));
    }
    let fits = completed
        .par_iter()
        .enumerate()
        .map(|(k, data)| fit_model(pop, data, design, prior, &seeded(k as u64 + 1), ModelKind::CompleteCase))
        .collect::<Result<Vec<_>>>()?;
    let diagnostics = fits
        .iter()
        .map(FitDiagnostics::of)
        .reduce(|a, b| a.merge(&b))
        .expect("at least one fit");
    Ok(MethodFit {
        method,
        draws: pool_mi(&fits)?,
        diagnostics,
    })
}
