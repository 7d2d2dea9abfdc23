use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "missrate", version, about = "Disease rates with categories missing not at random")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate replicate datasets and their true estimands.
    Simulate(SimulateArgs),
    /// Fit one method to a case table and summarise the estimands.
    Fit(FitArgs),
    /// Check the identifiability conditions for a population table.
    CheckId(CheckIdArgs),
    /// Closed-form estimates and approximate posteriors of the covariate-free model.
    Estimate(EstimateArgs),
    /// Aggregate fitted replicates into bias, MSE and coverage tables.
    Report(ReportArgs),
    /// Run the exact-likelihood and gradient equivalence checks.
    Check(CheckArgs),
}

/// Population input shared by several commands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PopArgs {
    /// Population CSV (`stratum,geo,category,count`); defaults to the
    /// packaged Wayne County table.
    #[arg(long)]
    pub pop: Option<PathBuf>,
    /// Keep this many geographies, sampled with `--seed`.
    #[arg(long)]
    pub geos: Option<usize>,
    /// Keep these categories, in this order (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub pop: PopArgs,
    /// Target share of cases observed for the reference design (e.g. 0.9),
    /// or a JSON scenario file.
    #[arg(long)]
    pub scenario: String,
    /// Defaults to 2 for a target share; overrides a scenario file.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Defaults to 1 for a target share; overrides a scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplerArgs {
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 500)]
    pub warmup: usize,
    #[arg(long, default_value_t = 500)]
    pub draws: usize,
    #[arg(long, default_value_t = 0.8)]
    pub target_accept: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub pop: PathBuf,
    #[arg(long)]
    pub cases: PathBuf,
    /// Stratum covariate CSV (`stratum,<name>...`). Without it, `SEX:AGE`
    /// strata get sex + age effect coding and other tables no covariates.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// joint | complete-case | mi-adhoc | mi-gibbs
    #[arg(long, default_value = "joint")]
    pub method: String,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Completed datasets for the multiple-imputation methods.
    #[arg(long, default_value_t = 20)]
    pub imputations: usize,
    /// Use the wider applied prior on the observation covariate scales.
    #[arg(long)]
    pub applied_prior: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckIdArgs {
    #[arg(long)]
    pub pop: PathBuf,
    /// With covariates the local conditions are checked per geography;
    /// otherwise the global conditions of the covariate-free model.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Evaluate parameter-domain conditions at the closed-form estimates
    /// from these cases instead of a nominal interior point.
    #[arg(long)]
    pub cases: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub pop: PathBuf,
    #[arg(long)]
    pub cases: PathBuf,
    /// Gamma prior shape for the minority rate in the approximate posterior.
    #[arg(long, default_value_t = 1.0)]
    pub alpha1: f64,
    /// Prior rates swept for the approximate posterior.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10,100,1000,10000")]
    pub rates: Vec<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Directory written by `simulate`, with fits under `rep-*/`.
    pub study: PathBuf,
    /// Output directory; defaults to `<study>/report`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    /// Random instances per suite.
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}
