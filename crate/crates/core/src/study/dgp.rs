//! Scenario definitions and the simulation data-generating process.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{GeoParams, HyperParams};
use crate::rng::{binomial, poisson};
use crate::special::{inv_logit, logit};
use crate::tables::{CaseTable, DesignMatrices, PopulationTable};

/// Log-rate age effects mimicking early COVID-19 relative risk by 10-year
/// age band (the ninth band is implied by the sum-to-zero coding).
pub const AGE_LOG_RATE: [f64; 9] = [-2.5, -2.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.5];
/// Observation log-odds age effects: older cases report race more often.
pub const AGE_LOG_ODDS: [f64; 9] = [-0.3, -0.3, -0.2, -0.2, -0.2, -0.1, 0.1, 0.4, 0.8];

/// How the population observation log-odds `α_η` are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationLevels {
    /// Observation proportions are `ratio_j · w` for a reference level `w`
    /// solved so that the expected share of cases observed equals `target`.
    Target { target: f64, ratios: Vec<f64> },
    /// `α_η` given directly; `+inf` means every case is observed.
    Fixed(Vec<f64>),
}

/// A simulation scenario: hyperparameters of the generating hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub replicates: usize,
    pub seed: u64,
    pub alpha_lambda: Vec<f64>,
    pub alpha_beta: Vec<f64>,
    pub alpha_gamma: Vec<f64>,
    pub observation: ObservationLevels,
    /// Hierarchical scales for (log λ, η, β, γ); zero gives a point mass.
    pub sigma: [f64; 4],
}

fn category_ratio(label: &str) -> Option<f64> {
    let l = label.to_ascii_lowercase();
    if l.starts_with("black") {
        Some(0.75 / 0.9)
    } else if l.starts_with("hisp") {
        Some(1.0)
    } else if l.starts_with("other") {
        Some(0.6 / 0.9)
    } else if l.starts_with("white") {
        Some(1.0)
    } else {
        None
    }
}

impl ScenarioSpec {
    /// The reference simulation design: equal baseline log-rates of -4,
    /// observation proportions relative to White of 0.75/0.9 (Black),
    /// 1 (Hispanic) and 0.6/0.9 (Other), disease and observation scales 0.5
    /// and 0.3, and age effects from [`AGE_LOG_RATE`] / [`AGE_LOG_ODDS`].
    ///
    /// `design` must be the sex + age effect coding of
    /// [`DesignMatrices::sum_to_zero_sex_age`] with two sexes and nine ages.
    pub fn reference(
        target: f64,
        pop: &PopulationTable,
        design: &DesignMatrices,
        replicates: usize,
        seed: u64,
    ) -> Result<Self> {
        let ratios = pop
            .labels()
            .categories
            .iter()
            .map(|c| {
                category_ratio(c).ok_or_else(|| {
                    Error::Config(format!("no reference observation ratio for category `{c}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if design.k() != 9 || !design.z_names.first().is_some_and(|n| n.starts_with("sex:")) {
            return Err(Error::Config(
                "reference scenario needs the sex + 9-level age effect coding".into(),
            ));
        }
        let mut alpha_beta = vec![0.0];
        alpha_beta.extend_from_slice(&AGE_LOG_RATE[..8]);
        let mut alpha_gamma = vec![0.0];
        alpha_gamma.extend_from_slice(&AGE_LOG_ODDS[..8]);
        Ok(Self {
            name: format!("{:.0}% observed", 100.0 * target),
            replicates,
            seed,
            alpha_lambda: vec![-4.0; ratios.len()],
            alpha_beta,
            alpha_gamma,
            observation: ObservationLevels::Target { target, ratios },
            sigma: [0.5, 0.3, 0.5, 0.3],
        })
    }

    pub fn check(&self, j: usize, k: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.alpha_lambda.len() != j || self.alpha_beta.len() != k || self.alpha_gamma.len() != k {
            return bad(format!("scenario constants do not conform to J={j}, K={k}"));
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("scenario scales must be finite and nonnegative".into());
        }
        match &self.observation {
            ObservationLevels::Target { target, ratios } => {
                if !(*target > 0.0 && *target < 1.0) {
                    return bad(format!("target proportion {target} outside (0, 1)"));
                }
                if ratios.len() != j || ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return bad("observation ratios must be J positive numbers".into());
                }
            }
            ObservationLevels::Fixed(eta) => {
                if eta.len() != j || eta.iter().any(|v| v.is_nan()) {
                    return bad("fixed observation log-odds must be J numbers".into());
                }
            }
        }
        Ok(())
    }

    /// Population observation log-odds `α_η`.
    pub fn alpha_eta(&self, pop: &PopulationTable, design: &DesignMatrices) -> Result<Vec<f64>> {
        let d = pop.dims();
        self.check(d.categories, design.k())?;
        match &self.observation {
            ObservationLevels::Fixed(eta) => Ok(eta.clone()),
            ObservationLevels::Target { target, ratios } => {
                let w = solve_reference_level(pop, design, self, *target, ratios)?;
                Ok(ratios.iter().map(|r| logit(r * w)).collect())
            }
        }
    }

    /// True hyperparameters of the generating hierarchy.
    pub fn hyper(&self, pop: &PopulationTable, design: &DesignMatrices) -> Result<HyperParams> {
        let alpha_eta = self.alpha_eta(pop, design)?;
        let j = self.alpha_lambda.len();
        let k = self.alpha_beta.len();
        let [sl, se, sb, sg] = self.sigma;
        Ok(HyperParams::new(
            [
                self.alpha_lambda.clone(),
                alpha_eta,
                self.alpha_beta.clone(),
                self.alpha_gamma.clone(),
            ],
            [vec![sl; j], vec![se; j], vec![sb; k], vec![sg; k]],
        ))
    }
}

/// Expected share of cases observed when the observation log-odds are
/// `eta` and every other parameter sits at its hierarchical mean:
/// `Σ μ_igj p_igj / Σ μ_igj` with `μ = E exp(α_λ + z·α_β)`.
pub fn expected_observed_share(
    pop: &PopulationTable,
    design: &DesignMatrices,
    spec: &ScenarioSpec,
    eta: &[f64],
) -> f64 {
    let d = pop.dims();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d.strata {
        let lin = design.zdot(i, &spec.alpha_beta);
        let mis = design.zdot(i, &spec.alpha_gamma);
        for g in 0..d.geos {
            for j in 0..d.categories {
                let mu = pop.get(i, g, j) as f64 * (spec.alpha_lambda[j] + lin).exp();
                num += mu * inv_logit(mis + eta[j]);
                den += mu;
            }
        }
    }
    num / den
}

/// Reference observation proportion `w` such that observation proportions
/// `ratio_j · w` give an expected observed share of `target`, found by
/// bisection on `(0, 1 / max ratio)`.
pub fn solve_reference_level(
    pop: &PopulationTable,
    design: &DesignMatrices,
    spec: &ScenarioSpec,
    target: f64,
    ratios: &[f64],
) -> Result<f64> {
    let share = |w: f64| {
        let eta: Vec<f64> = ratios.iter().map(|r| logit(r * w)).collect();
        expected_observed_share(pop, design, spec, &eta)
    };
    let hi_w = 1.0 / ratios.iter().copied().fold(0.0, f64::max);
    // The share is continuous and increasing in w, from 0 at w = 0 to its
    // supremum as the most observed category reaches proportion 1.
    let sup = share(hi_w * (1.0 - 1e-15));
    if !(target < sup) {
        return Err(Error::Config(format!(
            "target observed share {target} is unattainable with these ratios (max {sup:.6})"
        )));
    }
    let (mut lo, mut hi) = (0.0, hi_w);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if share(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One simulated dataset with its generating values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDataset {
    pub cases: CaseTable,
    pub params: Vec<GeoParams>,
    pub hyper: HyperParams,
    /// Latent complete counts `Y[i, g, j]` in table cell order.
    pub latent: Vec<u64>,
}

fn draw_block<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], sd: f64) -> Vec<f64> {
    if sd == 0.0 {
        return mean.to_vec();
    }
    mean.iter()
        .map(|&m| Normal::new(m, sd).expect("finite scale").sample(rng))
        .collect()
}

/// Draws geography parameters from the hierarchy, complete counts
/// `Y ~ Poisson(λ e^{zβ} E)`, observed counts `X ~ Binomial(Y, p)` and
/// missing counts `M = Σ_j (Y - X)`.
pub fn generate_dataset<R: Rng + ?Sized>(
    pop: &PopulationTable,
    design: &DesignMatrices,
    spec: &ScenarioSpec,
    rng: &mut R,
) -> Result<SimulatedDataset> {
    let d = pop.dims();
    design.conforms_to(d)?;
    let hyper = spec.hyper(pop, design)?;
    let [sl, se, sb, sg] = spec.sigma;
    let params: Vec<GeoParams> = (0..d.geos)
        .map(|_| {
            GeoParams::new(
                draw_block(rng, &spec.alpha_lambda, sl),
                draw_block(rng, hyper.alpha(crate::params::Block::Eta), se),
                draw_block(rng, &spec.alpha_beta, sb),
                draw_block(rng, &spec.alpha_gamma, sg),
            )
        })
        .collect();
    let mut cases = CaseTable::zeros(d);
    let mut latent = vec![0u64; d.n_cells()];
    for (g, gp) in params.iter().enumerate() {
        for i in 0..d.strata {
            let lin = design.zdot(i, &gp.beta);
            let mis = design.zdot(i, &gp.gamma);
            let mut m = 0;
            for j in 0..d.categories {
                let e = pop.get(i, g, j) as f64;
                let y = poisson(rng, (gp.log_lambda[j] + lin).exp() * e);
                let x = binomial(rng, y, inv_logit(mis + gp.eta[j]));
                latent[d.cell(i, g, j)] = y;
                cases.set_x(i, g, j, x);
                m += y - x;
            }
            cases.set_m(i, g, m);
        }
    }
    Ok(SimulatedDataset {
        cases,
        params,
        hyper,
        latent,
    })
}
