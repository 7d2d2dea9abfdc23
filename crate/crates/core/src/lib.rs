//! Joint Bayesian selection models for disease counts whose categorical
//! covariate (e.g. race) is missing not at random.
//!
//! The crate provides observed-data likelihoods with the missing categories
//! summed out, exact enumeration oracles, closed-form estimators and
//! identifiability checks, a NUTS sampler with convergence diagnostics, the
//! comparator methods used in simulation studies, and table I/O.

// `!(x > 0.0)` is used on purpose so that NaN fails domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod inference;
pub mod io;
pub mod manifest;
pub mod marginal;
pub mod model;
pub mod params;
pub mod rng;
pub mod special;
pub mod study;
pub mod tables;

pub use error::{Error, Result};
pub use estimators::{
    ApproxPosterior, ConditionResult, IdentifiabilityReport, SimpleEstimates,
};
pub use inference::{
    sample_posterior, ChainStats, Diagnostics, LogDensity, PosteriorDraws, SamplerConfig,
    SummaryRow,
};
pub use marginal::CellInstance;
pub use model::{Parameterization, PosteriorTarget, SimpleTarget};
pub use params::{
    Block, BlockPrior, GeoParams, HyperParams, ModelKind, ParamLayout, PriorConfig, SimplePrior,
};
pub use tables::{CaseTable, DesignMatrices, Dims, Labels, PopulationTable};
