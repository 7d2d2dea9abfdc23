//! Fixtures shared by the benchmarks in `benches/`.

use missrate_core::rng::stream_rng;
use missrate_core::study::{downscale, replicate_dataset, sex_age_design, wayne_census, ScenarioSpec};
use missrate_core::{CaseTable, DesignMatrices, PopulationTable};

/// Desk-scale problem: four PUMAs, Black/Other/White, sex + age covariates,
/// one replicate of the 90% observed scenario.
pub fn desk_problem() -> (PopulationTable, CaseTable, DesignMatrices) {
    let pop = downscale(&wayne_census(), 4, &["Black", "Other", "White"], 2024).expect("packaged census");
    let design = sex_age_design(&pop).expect("sex:age strata");
    let spec = ScenarioSpec::reference(0.9, &pop, &design, 1, 90).expect("reference scenario");
    let data = replicate_dataset(&pop, &design, &spec, 0).expect("simulated replicate");
    (pop, data.cases, design)
}

/// A uniform point in `(-1, 1)^dim`.
pub fn random_point(dim: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = stream_rng(seed, 0);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}
