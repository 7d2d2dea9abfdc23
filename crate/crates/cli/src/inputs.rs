use std::path::Path;

use anyhow::{Context, Result};
use missrate_core::io::{load_design_csv, load_population_csv};
use missrate_core::study::{downscale, sex_age_design, wayne_census};
use missrate_core::{DesignMatrices, PopulationTable};

use crate::args::PopArgs;

pub fn population(path: &Path) -> Result<PopulationTable> {
    load_population_csv(path).with_context(|| format!("reading population {}", path.display()))
}

/// The requested population table, downscaled if asked.
pub fn population_from(args: &PopArgs, seed: u64) -> Result<PopulationTable> {
    let pop = match &args.pop {
        Some(p) => population(p)?,
        None => wayne_census(),
    };
    if args.geos.is_none() && args.categories.is_none() {
        return Ok(pop);
    }
    let geos = args.geos.unwrap_or(pop.dims().geos);
    let cats: Vec<&str> = match &args.categories {
        Some(c) => c.iter().map(String::as_str).collect(),
        None => pop.labels().categories.iter().map(String::as_str).collect(),
    };
    Ok(downscale(&pop, geos, &cats, seed)?)
}

/// Covariates from `path`, else sex + age coding for `SEX:AGE` strata,
/// else none.
pub fn design(pop: &PopulationTable, path: Option<&Path>) -> Result<DesignMatrices> {
    if let Some(p) = path {
        return load_design_csv(p, None, pop).with_context(|| format!("reading design {}", p.display()));
    }
    let d = pop.dims();
    Ok(sex_age_design(pop).unwrap_or_else(|_| DesignMatrices::empty(d.strata, d.geos)))
}
