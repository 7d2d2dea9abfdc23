//! Simulation-study harness: data generation, comparator methods, estimands
//! and performance metrics.

mod dgp;
mod estimands;
mod methods;
mod metrics;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dgp::{
    expected_observed_share, generate_dataset, solve_reference_level, ObservationLevels, ScenarioSpec,
    SimulatedDataset, AGE_LOG_ODDS, AGE_LOG_RATE,
};
pub use estimands::{compute_estimands, EstimandSet};
pub use methods::{
    estimand_draws, fit_complete_case, fit_joint, fit_model, fit_target, impute_adhoc, impute_gibbs,
    param_names, pool_mi, run_method, FitDiagnostics, Method, MethodFit, MiSettings,
};
pub use metrics::{
    summarize_estimands, EstimandSummary, MethodResult, MetricRow, MetricsTable, ReplicateResult,
};

use crate::error::{Error, Result};
use crate::inference::SamplerConfig;
use crate::io::read_population;
use crate::params::PriorConfig;
use crate::rng::{derive_stream, stream_rng};
use crate::tables::{DesignMatrices, PopulationTable};

/// Synthetic Wayne County census: 18 sex × age strata, 13 PUMAs and four
/// race/ethnicity categories. Category totals are the 2010 census totals;
/// the split across strata and PUMAs is synthetic.
pub const WAYNE_CENSUS_CSV: &str = include_str!("../../data/wayne_census.csv");

pub fn wayne_census() -> PopulationTable {
    read_population(WAYNE_CENSUS_CSV.as_bytes()).expect("packaged census parses")
}

/// Sub-table with `geos` geographies drawn without replacement (kept in
/// their original order) and the named categories in the given order.
pub fn downscale(pop: &PopulationTable, geos: usize, categories: &[&str], seed: u64) -> Result<PopulationTable> {
    let labels = pop.labels();
    if geos == 0 || geos > labels.geos.len() {
        return Err(Error::Config(format!(
            "cannot sample {geos} of {} geographies",
            labels.geos.len()
        )));
    }
    let mut rng = stream_rng(seed, derive_stream(&[0xD0_5CA1E]));
    let mut picked = sample(&mut rng, labels.geos.len(), geos).into_vec();
    picked.sort_unstable();
    let cats = categories
        .iter()
        .map(|c| {
            labels
                .categories
                .iter()
                .position(|l| l == c)
                .ok_or_else(|| Error::Config(format!("unknown category `{c}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    pop.select(&picked, &cats)
}

/// Sex + age effect coding for a table whose strata are labelled `SEX:AGE`.
pub fn sex_age_design(pop: &PopulationTable) -> Result<DesignMatrices> {
    let mut d = DesignMatrices::sum_to_zero_sex_age(&pop.labels().strata)
        .ok_or_else(|| Error::Config("stratum labels must look like SEX:AGE".into()))?;
    d.w = nalgebra::DMatrix::zeros(pop.dims().geos, 0);
    Ok(d)
}

/// Fitting settings shared by every replicate of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub sampler: SamplerConfig,
    pub prior: PriorConfig,
    pub methods: Vec<Method>,
    pub mi: MiSettings,
}

/// Generates replicate `r` of `spec`. The dataset depends only on
/// `(spec.seed, r)`.
pub fn replicate_dataset(
    pop: &PopulationTable,
    design: &DesignMatrices,
    spec: &ScenarioSpec,
    r: usize,
) -> Result<SimulatedDataset> {
    let mut rng = stream_rng(spec.seed, derive_stream(&[r as u64, 0]));
    generate_dataset(pop, design, spec, &mut rng)
}

/// True estimands of a simulated dataset.
pub fn dataset_truth(
    data: &SimulatedDataset,
    pop: &PopulationTable,
    design: &DesignMatrices,
) -> Result<Vec<(String, f64)>> {
    Ok(compute_estimands(&data.params, Some(&data.hyper), pop, design)?.named(&pop.labels().categories))
}

/// Share of each category's latent cases that were observed.
pub fn observed_share(data: &SimulatedDataset, pop: &PopulationTable) -> Vec<f64> {
    let d = pop.dims();
    let mut x = vec![0.0; d.categories];
    let mut y = vec![0.0; d.categories];
    for (k, (&xv, &yv)) in data.cases.observed().iter().zip(&data.latent).enumerate() {
        x[k % d.categories] += xv as f64;
        y[k % d.categories] += yv as f64;
    }
    x.iter().zip(&y).map(|(a, b)| a / b).collect()
}

/// Fits one method and summarises its estimand draws; failures are
/// captured in the result rather than propagated.
pub fn evaluate_method(
    method: Method,
    pop: &PopulationTable,
    data: &SimulatedDataset,
    design: &DesignMatrices,
    config: &StudyConfig,
    stream: u64,
) -> MethodResult {
    let run = || -> Result<(Vec<EstimandSummary>, FitDiagnostics)> {
        let fit = run_method(
            method,
            pop,
            &data.cases,
            design,
            &config.prior,
            &config.sampler,
            &config.mi,
            stream,
        )?;
        let est = estimand_draws(&fit.draws, method.kind(), pop, design)?;
        Ok((summarize_estimands(&est), fit.diagnostics))
    };
    match run() {
        Ok((summaries, diagnostics)) => MethodResult {
            method,
            summaries,
            diagnostics: Some(diagnostics),
            error: None,
        },
        Err(e) => MethodResult {
            method,
            summaries: Vec::new(),
            diagnostics: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn run_replicate(
    pop: &PopulationTable,
    design: &DesignMatrices,
    spec: &ScenarioSpec,
    config: &StudyConfig,
    r: usize,
) -> Result<ReplicateResult> {
    let data = replicate_dataset(pop, design, spec, r)?;
    let truth = dataset_truth(&data, pop, design)?;
    let stream = derive_stream(&[spec.seed, r as u64]);
    let methods = config
        .methods
        .iter()
        .map(|&m| evaluate_method(m, pop, &data, design, config, stream))
        .collect();
    Ok(ReplicateResult {
        replicate: r,
        truth,
        observed_share: observed_share(&data, pop),
        methods,
    })
}

/// Runs every replicate of `spec` in parallel and aggregates the metrics.
pub fn evaluate_replicates(
    spec: &ScenarioSpec,
    config: &StudyConfig,
    pop: &PopulationTable,
    design: &DesignMatrices,
) -> Result<(MetricsTable, Vec<ReplicateResult>)> {
    if spec.replicates < 2 {
        return Err(Error::Config("a study needs at least two replicates".into()));
    }
    let reps = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(pop, design, spec, config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok((MetricsTable::from_replicates(&spec.name, &reps), reps))
}
