//! Epidemiological estimands: modelled incidence, standardised incidence
//! and their ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Block, GeoParams, HyperParams};
use crate::special::inv_logit;
use crate::tables::{DesignMatrices, PopulationTable};

/// Estimands for each category; the last category is the reference for
/// relative quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimandSet {
    /// Population-weighted expected cases per person, `𝕀_j`.
    pub incidence: Vec<f64>,
    /// `𝕀_j / 𝕀_J`.
    pub relative_incidence: Vec<f64>,
    /// Incidence under the population-average stratum rates, `𝕊𝕀_j`.
    pub standardized: Vec<f64>,
    /// `𝕀_j / 𝕊𝕀_j`.
    pub sir: Vec<f64>,
    /// `exp(α_λj - α_λJ)`, when hyperparameters are given.
    pub population_relative_rate: Option<Vec<f64>>,
    /// `inv_logit(α_ηj)`, when the hyperparameters include observation levels.
    pub observation_probability: Option<Vec<f64>>,
}

impl EstimandSet {
    /// Flattened `(name, value)` pairs, e.g. `I[Black]`, `RR[Black]`.
    /// Relative quantities skip the reference category.
    pub fn named(&self, categories: &[String]) -> Vec<(String, f64)> {
        let j = self.incidence.len();
        let mut out = Vec::new();
        let mut push = |prefix: &str, v: &[f64], skip_ref: bool| {
            for (c, x) in v.iter().enumerate() {
                if skip_ref && c + 1 == j {
                    continue;
                }
                out.push((format!("{prefix}[{}]", categories[c]), *x));
            }
        };
        push("I", &self.incidence, false);
        push("RR", &self.relative_incidence, true);
        push("SI", &self.standardized, false);
        push("SIR", &self.sir, false);
        if let Some(v) = &self.population_relative_rate {
            push("RR_pop", v, true);
        }
        if let Some(v) = &self.observation_probability {
            push("p_obs", v, false);
        }
        out
    }
}

/// Computes the estimands from per-geography rates
/// `r_igj = λ_gj exp(z_i·β_g)`. Only `log_lambda` and `beta` of `params` are
/// used.
pub fn compute_estimands(
    params: &[GeoParams],
    hyper: Option<&HyperParams>,
    pop: &PopulationTable,
    design: &DesignMatrices,
) -> Result<EstimandSet> {
    let d = pop.dims();
    if params.len() != d.geos {
        return Err(Error::Dimension(format!(
            "{} geography parameter sets for {} geographies",
            params.len(),
            d.geos
        )));
    }
    let (ni, nj) = (d.strata, d.categories);
    // Expected cases and populations by (stratum, category), summed over geographies.
    let mut cases = vec![0.0; ni * nj];
    let mut people = vec![0.0; ni * nj];
    for (g, gp) in params.iter().enumerate() {
        if gp.log_lambda.len() != nj || gp.beta.len() != design.k() {
            return Err(Error::Dimension("geography parameters do not conform".into()));
        }
        for i in 0..ni {
            let lin = design.zdot(i, &gp.beta);
            for j in 0..nj {
                let e = pop.get(i, g, j) as f64;
                cases[i * nj + j] += e * (gp.log_lambda[j] + lin).exp();
                people[i * nj + j] += e;
            }
        }
    }
    let col_sum = |v: &[f64], j: usize| (0..ni).map(|i| v[i * nj + j]).sum::<f64>();
    let row_sum = |v: &[f64], i: usize| v[i * nj..(i + 1) * nj].iter().sum::<f64>();

    let mut incidence = Vec::with_capacity(nj);
    for j in 0..nj {
        let n = col_sum(&people, j);
        if n <= 0.0 {
            return Err(Error::Domain(format!("category {j} has no population")));
        }
        incidence.push(col_sum(&cases, j) / n);
    }
    // ψ_i: stratum incidence averaged over categories and geographies. Strata
    // with no population never receive weight below, so their ψ is unused.
    let psi: Vec<f64> = (0..ni)
        .map(|i| {
            let n = row_sum(&people, i);
            if n > 0.0 {
                row_sum(&cases, i) / n
            } else {
                0.0
            }
        })
        .collect();
    let standardized: Vec<f64> = (0..nj)
        .map(|j| (0..ni).map(|i| people[i * nj + j] * psi[i]).sum::<f64>() / col_sum(&people, j))
        .collect();
    let reference = incidence[nj - 1];
    Ok(EstimandSet {
        relative_incidence: incidence.iter().map(|v| v / reference).collect(),
        sir: incidence.iter().zip(&standardized).map(|(a, b)| a / b).collect(),
        incidence,
        standardized,
        population_relative_rate: hyper.map(|h| {
            let a = h.alpha(Block::Lambda);
            a.iter().map(|v| (v - a[nj - 1]).exp()).collect()
        }),
        observation_probability: hyper
            .filter(|h| h.alpha(Block::Eta).len() == nj)
            .map(|h| h.alpha(Block::Eta).iter().map(|&v| inv_logit(v)).collect()),
    })
}
