//! Observed-data likelihoods, hierarchical priors and the unconstrained
//! log posterior with its analytic gradient.
//!
//! The missing-category count of a stratum is Poisson with rate
//! `exp(z·β) Σ_j (1 - p_j) λ_j E_j`, and each observed count is Poisson with
//! rate `p_j λ_j exp(z·β) E_j`; the latent allocation of missing cases has
//! already been summed out.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::inference::LogDensity;
use crate::params::{Block, GeoParams, HyperParams, ModelKind, ParamLayout, PriorConfig};
use crate::special::{
    half_normal_lpdf, ln_factorial, log1m_inv_logit, log_inv_logit, log_sum_exp,
    normal_lpdf, poisson_lpmf, poisson_lpmf_log_rate, LN_2PI,
};
use crate::tables::{CaseTable, DesignMatrices, PopulationTable};

fn check_axes(pop: &PopulationTable, cases: &CaseTable) -> Result<()> {
    cases.conforms_to(pop)
}

/// Log-likelihood of the covariate-free model on a single geography.
pub fn log_lik_simple(
    pop: &PopulationTable,
    cases: &CaseTable,
    lambda: &[f64],
    p: &[f64],
) -> Result<f64> {
    pop.require_single_geo()?;
    check_axes(pop, cases)?;
    let d = pop.dims();
    dim_check("lambda", lambda.len(), d.categories)?;
    dim_check("p", p.len(), d.categories)?;
    if lambda.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::Domain("lambda must be positive and finite".into()));
    }
    if p.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Error::Domain("p must lie strictly inside (0, 1)".into()));
    }
    let mut total = 0.0;
    for i in 0..d.strata {
        let mut miss_rate = 0.0;
        for j in 0..d.categories {
            let e = pop.get(i, 0, j) as f64;
            total += poisson_lpmf(cases.x(i, 0, j), p[j] * lambda[j] * e);
            miss_rate += lambda[j] * (1.0 - p[j]) * e;
        }
        total += poisson_lpmf(cases.m(i, 0), miss_rate);
    }
    Ok(total)
}

/// Log-likelihood contribution of stratum `i` in geography `g`.
fn row_log_lik(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    gp: &GeoParams,
    i: usize,
    g: usize,
    with_missing: bool,
) -> f64 {
    let jn = pop.dims().categories;
    let lin = design.zdot(i, &gp.beta);
    let mis = if with_missing {
        design.zdot(i, &gp.gamma)
    } else {
        0.0
    };
    let mut total = 0.0;
    let mut miss_terms = Vec::with_capacity(jn);
    for j in 0..jn {
        let e = pop.get(i, g, j);
        let ln_e = if e == 0 {
            f64::NEG_INFINITY
        } else {
            (e as f64).ln()
        };
        let a = mis + if with_missing { gp.eta[j] } else { 0.0 };
        let obs_log_rate = if with_missing {
            log_inv_logit(a) + gp.log_lambda[j] + lin + ln_e
        } else {
            gp.log_lambda[j] + lin + ln_e
        };
        total += poisson_lpmf_log_rate(cases.x(i, g, j), obs_log_rate);
        if with_missing {
            miss_terms.push(log1m_inv_logit(a) + gp.log_lambda[j] + ln_e);
        }
    }
    if with_missing {
        total += poisson_lpmf_log_rate(cases.m(i, g), log_sum_exp(&miss_terms) + lin);
    }
    total
}

fn check_geo_params(
    pop: &PopulationTable,
    design: &DesignMatrices,
    params: &[GeoParams],
    kind: ModelKind,
) -> Result<()> {
    let d = pop.dims();
    dim_check("geography parameter sets", params.len(), d.geos)?;
    design.conforms_to(d)?;
    for gp in params {
        gp.check(d.categories, design.k(), kind)?;
    }
    Ok(())
}

/// Log-likelihood of the covariate model on a single geography.
pub fn log_lik_full(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    params: &GeoParams,
) -> Result<f64> {
    pop.require_single_geo()?;
    log_lik_geo(pop, cases, design, std::slice::from_ref(params))
}

/// Log-likelihood of the multi-geography model: the sum of the per-geography
/// covariate-model likelihoods.
pub fn log_lik_geo(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    params: &[GeoParams],
) -> Result<f64> {
    check_axes(pop, cases)?;
    check_geo_params(pop, design, params, ModelKind::Joint)?;
    let d = pop.dims();
    let mut total = 0.0;
    for (g, gp) in params.iter().enumerate() {
        for i in 0..d.strata {
            total += row_log_lik(pop, cases, design, gp, i, g, true);
        }
    }
    nan_guard(total)
}

/// Complete-case log-likelihood: Poisson on observed counts with rate
/// `λ_j exp(z·β) E_j`, missing counts ignored.
pub fn log_lik_complete_case(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    params: &[GeoParams],
) -> Result<f64> {
    check_axes(pop, cases)?;
    check_geo_params(pop, design, params, ModelKind::CompleteCase)?;
    let d = pop.dims();
    let mut total = 0.0;
    for (g, gp) in params.iter().enumerate() {
        for i in 0..d.strata {
            total += row_log_lik(pop, cases, design, gp, i, g, false);
        }
    }
    nan_guard(total)
}

fn nan_guard(v: f64) -> Result<f64> {
    if v.is_nan() {
        Err(Error::Evaluation("log density evaluated to NaN".into()))
    } else {
        Ok(v)
    }
}

/// Normal hierarchical prior of the geography parameters around
/// `α + Π w_g` with diagonal scales `σ`.
pub fn log_prior_hier(
    params: &[GeoParams],
    hyper: &HyperParams,
    w: &DMatrix<f64>,
    kind: ModelKind,
) -> Result<f64> {
    let mut total = 0.0;
    for &b in kind.blocks() {
        if hyper.sigma(b).iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Domain(format!("sigma_{} must be positive", b.name())));
        }
    }
    for (g, gp) in params.iter().enumerate() {
        let wg: Option<Vec<f64>> = (w.ncols() > 0).then(|| w.row(g).iter().copied().collect());
        for &b in kind.blocks() {
            let mu = hyper.location(b, wg.as_deref());
            let theta = b.of(gp);
            dim_check(&format!("{} block", b.name()), theta.len(), mu.len())?;
            for ((t, m), s) in theta.iter().zip(&mu).zip(hyper.sigma(b)) {
                total += normal_lpdf(*t, *m, *s);
            }
        }
    }
    nan_guard(total)
}

/// Normal hyperprior on `α` and half-normal on `σ`. Returns `-inf` for any
/// non-positive `σ`.
pub fn log_hyperprior(hyper: &HyperParams, config: &PriorConfig, kind: ModelKind) -> f64 {
    let mut total = 0.0;
    for &b in kind.blocks() {
        let bp = config.block(b);
        for ((a, m), s) in hyper.alpha(b).iter().zip(&bp.alpha_mean).zip(&bp.alpha_scale) {
            total += normal_lpdf(*a, *m, *s);
        }
        for (sig, s) in hyper.sigma(b).iter().zip(&bp.sigma_scale) {
            total += half_normal_lpdf(*sig, *s);
        }
    }
    total
}

/// Log posterior on the constrained scale (no Jacobian):
/// likelihood + hierarchical prior + hyperprior.
#[allow(clippy::too_many_arguments)]
pub fn log_posterior_unnormalized(
    pop: &PopulationTable,
    cases: &CaseTable,
    design: &DesignMatrices,
    params: &[GeoParams],
    hyper: &HyperParams,
    config: &PriorConfig,
    kind: ModelKind,
) -> Result<f64> {
    let lik = match kind {
        ModelKind::Joint => log_lik_geo(pop, cases, design, params)?,
        ModelKind::CompleteCase => log_lik_complete_case(pop, cases, design, params)?,
    };
    let w = area_matrix(design, pop.dims().geos);
    let prior = log_prior_hier(params, hyper, &w, kind)?;
    nan_guard(lik + prior + log_hyperprior(hyper, config, kind))
}

fn area_matrix(design: &DesignMatrices, geos: usize) -> DMatrix<f64> {
    if design.d() == 0 {
        DMatrix::zeros(geos, 0)
    } else {
        design.w.clone()
    }
}

/// Which blocks of geography parameters are stored non-centered, as
/// standardised deviations `z` with `θ_g = α + Π w_g + σ ⊙ z_g`.
///
/// The posterior is the same either way. Non-centering removes the funnel
/// between `θ_g` and small `σ` for blocks the data say little about, but
/// makes strongly informed blocks stiff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Parameterization {
    /// Indexed by [`Block`].
    pub non_centered: [bool; 4],
}

impl Parameterization {
    pub const CENTERED: Self = Self { non_centered: [false; 4] };
    pub const NON_CENTERED: Self = Self { non_centered: [true; 4] };
    /// Observation blocks (`η`, `γ`) non-centered, disease blocks centered.
    pub const OBSERVATION_NON_CENTERED: Self = Self {
        non_centered: [false, true, false, true],
    };

    pub fn is_non_centered(&self, b: Block) -> bool {
        self.non_centered[b as usize]
    }
}

/// Log posterior over the flat unconstrained vector described by a
/// [`ParamLayout`], with analytic gradient.
///
/// `σ` blocks enter as `log σ` and the Jacobian `Σ log σ` is added. Area
/// loadings `Π` are fixed.
#[derive(Debug, Clone)]
pub struct PosteriorTarget {
    layout: ParamLayout,
    parameterization: Parameterization,
    strata: usize,
    // Row-major I × K copy of Z.
    z: Vec<f64>,
    // Hierarchical location offsets Π_b w_g, per geography and block.
    offsets: Vec<[Vec<f64>; 4]>,
    ln_e: Vec<f64>,
    x: Vec<f64>,
    m: Vec<f64>,
    const_term: f64,
    prior: PriorConfig,
    likelihood: bool,
}

impl PosteriorTarget {
    pub fn new(
        pop: &PopulationTable,
        cases: &CaseTable,
        design: &DesignMatrices,
        prior: &PriorConfig,
        kind: ModelKind,
    ) -> Result<Self> {
        Self::with_loadings(pop, cases, design, prior, kind, &[None, None, None, None])
    }

    /// As [`PosteriorTarget::new`] with fixed area loadings `Π_b`.
    pub fn with_loadings(
        pop: &PopulationTable,
        cases: &CaseTable,
        design: &DesignMatrices,
        prior: &PriorConfig,
        kind: ModelKind,
        pi: &[Option<DMatrix<f64>>; 4],
    ) -> Result<Self> {
        check_axes(pop, cases)?;
        let d = pop.dims();
        design.conforms_to(d)?;
        let k = design.k();
        prior.check(d.categories, k, kind)?;
        let layout = ParamLayout::new(kind, d.categories, k, d.geos);

        let mut z = Vec::with_capacity(d.strata * k);
        for i in 0..d.strata {
            for c in 0..k {
                z.push(design.z[(i, c)]);
            }
        }
        let mut offsets = Vec::with_capacity(d.geos);
        for g in 0..d.geos {
            let mut per: [Vec<f64>; 4] = Default::default();
            for &b in kind.blocks() {
                let n = b.len(d.categories, k);
                let mut off = vec![0.0; n];
                if let Some(p) = &pi[b as usize] {
                    if p.nrows() != n || p.ncols() != design.d() {
                        return Err(Error::Dimension(format!(
                            "Pi_{} must be {n} x {}",
                            b.name(),
                            design.d()
                        )));
                    }
                    for (r, o) in off.iter_mut().enumerate() {
                        for c in 0..design.d() {
                            *o += p[(r, c)] * design.w[(g, c)];
                        }
                    }
                }
                per[b as usize] = off;
            }
            offsets.push(per);
        }

        let ln_e = pop
            .counts()
            .iter()
            .map(|&e| if e == 0 { f64::NEG_INFINITY } else { (e as f64).ln() })
            .collect();
        let x: Vec<f64> = cases.observed().iter().map(|&v| v as f64).collect();
        let m: Vec<f64> = cases.missing().iter().map(|&v| v as f64).collect();
        let mut const_term = -cases
            .observed()
            .iter()
            .map(|&v| ln_factorial(v))
            .sum::<f64>();
        if kind == ModelKind::Joint {
            const_term -= cases.missing().iter().map(|&v| ln_factorial(v)).sum::<f64>();
        }
        Ok(Self {
            layout,
            parameterization: Parameterization::CENTERED,
            strata: d.strata,
            z,
            offsets,
            ln_e,
            x,
            m,
            const_term,
            prior: prior.clone(),
            likelihood: true,
        })
    }

    /// Drop the likelihood so the target is the prior alone.
    pub fn prior_only(mut self) -> Self {
        self.likelihood = false;
        self
    }

    pub fn with_parameterization(mut self, parameterization: Parameterization) -> Self {
        self.parameterization = parameterization;
        self
    }

    pub fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    /// The centered unconstrained vector equivalent to `theta`.
    pub fn to_centered(&self, theta: &[f64]) -> Vec<f64> {
        let mut c = theta.to_vec();
        let lay = &self.layout;
        for &b in lay.kind.blocks().iter().filter(|&&b| self.parameterization.is_non_centered(b)) {
            let (oa, os) = (lay.alpha_offset(b), lay.log_sigma_offset(b));
            for e in 0..b.len(lay.j, lay.k) {
                let sigma = theta[os + e].exp();
                for g in 0..lay.geos {
                    let og = lay.geo_offset(g, b) + e;
                    c[og] = theta[oa + e] + self.offsets[g][b as usize][e] + sigma * theta[og];
                }
            }
        }
        c
    }

    /// Inverse of [`PosteriorTarget::to_centered`].
    pub fn from_centered(&self, centered: &[f64]) -> Vec<f64> {
        let mut t = centered.to_vec();
        let lay = &self.layout;
        for &b in lay.kind.blocks().iter().filter(|&&b| self.parameterization.is_non_centered(b)) {
            let (oa, os) = (lay.alpha_offset(b), lay.log_sigma_offset(b));
            for e in 0..b.len(lay.j, lay.k) {
                let sigma = centered[os + e].exp();
                for g in 0..lay.geos {
                    let og = lay.geo_offset(g, b) + e;
                    t[og] = (centered[og] - centered[oa + e] - self.offsets[g][b as usize][e]) / sigma;
                }
            }
        }
        t
    }

    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        self.eval(theta, None)
    }

    fn eval(&self, theta: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
        let lay = &self.layout;
        dim_check("parameter vector", theta.len(), lay.dim())?;
        if let Some(gr) = &grad {
            dim_check("gradient buffer", gr.len(), lay.dim())?;
        }
        if self.parameterization == Parameterization::CENTERED {
            self.eval_centered(theta, grad)
        } else {
            self.eval_mixed(theta, grad)
        }
    }

    /// General case: the likelihood is evaluated at the centered point and
    /// its gradient pulled back through `θ = α + Π w + σ z` for non-centered
    /// blocks; centered blocks keep their Normal hierarchical prior.
    fn eval_mixed(&self, theta: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        let lay = &self.layout;
        let c = self.to_centered(theta);
        let mut gc = grad.as_ref().map(|_| vec![0.0; lay.dim()]);
        let mut lp = 0.0;
        if self.likelihood {
            lp += self.const_term;
            for g in 0..lay.geos {
                lp += self.geo_lik(&c, g, gc.as_deref_mut());
                if lp == f64::NEG_INFINITY {
                    return Ok(lp);
                }
            }
        }
        if let (Some(gr), Some(gc)) = (grad.as_deref_mut(), gc.as_ref()) {
            gr.copy_from_slice(gc);
            for &b in lay.kind.blocks().iter().filter(|&&b| self.parameterization.is_non_centered(b)) {
                let (oa, os) = (lay.alpha_offset(b), lay.log_sigma_offset(b));
                for e in 0..b.len(lay.j, lay.k) {
                    let sigma = theta[os + e].exp();
                    for g in 0..lay.geos {
                        let og = lay.geo_offset(g, b) + e;
                        gr[og] = sigma * gc[og] - theta[og];
                        gr[oa + e] += gc[og];
                        gr[os + e] += gc[og] * sigma * theta[og];
                    }
                }
            }
        }
        for &b in lay.kind.blocks() {
            if self.parameterization.is_non_centered(b) {
                for e in 0..b.len(lay.j, lay.k) {
                    for g in 0..lay.geos {
                        let zv = theta[lay.geo_offset(g, b) + e];
                        lp += -0.5 * LN_2PI - 0.5 * zv * zv;
                    }
                }
            } else {
                lp += self.block_prior(b, theta, grad.as_deref_mut());
            }
        }
        lp += self.hyper_terms(theta, grad.as_deref_mut());
        self.finish(lp, grad.as_deref())
    }

    fn finish(&self, lp: f64, grad: Option<&[f64]>) -> Result<f64> {
        if lp.is_nan() {
            return Err(Error::Evaluation("log posterior evaluated to NaN".into()));
        }
        if grad.is_some_and(|gr| gr.iter().any(|v| v.is_nan())) {
            return Err(Error::Evaluation("gradient evaluated to NaN".into()));
        }
        Ok(lp)
    }

    fn eval_centered(&self, theta: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        let lay = &self.layout;
        if let Some(gr) = grad.as_deref_mut() {
            gr.fill(0.0);
        }
        let mut lp = 0.0;
        if self.likelihood {
            lp += self.const_term;
            for g in 0..lay.geos {
                lp += self.geo_lik(theta, g, grad.as_deref_mut());
                if lp == f64::NEG_INFINITY {
                    return Ok(lp);
                }
            }
        }
        lp += self.prior_terms(theta, grad.as_deref_mut());
        self.finish(lp, grad.as_deref())
    }

    fn geo_lik(&self, theta: &[f64], g: usize, grad: Option<&mut [f64]>) -> f64 {
        let lay = &self.layout;
        let (jn, k) = (lay.j, lay.k);
        let joint = lay.kind == ModelKind::Joint;
        let o_lam = lay.geo_offset(g, Block::Lambda);
        let o_beta = lay.geo_offset(g, Block::Beta);
        let (o_eta, o_gam) = if joint {
            (lay.geo_offset(g, Block::Eta), lay.geo_offset(g, Block::Gamma))
        } else {
            (0, 0)
        };
        let log_lam = &theta[o_lam..o_lam + jn];
        let beta = &theta[o_beta..o_beta + k];

        let mut lp = 0.0;
        let mut g_lam = vec![0.0; jn];
        let mut g_eta = vec![0.0; jn];
        let mut g_beta = vec![0.0; k];
        let mut g_gam = vec![0.0; k];
        let mut p = vec![0.0; jn];
        let mut t = vec![f64::NEG_INFINITY; jn];
        let mut w = vec![0.0; jn];

        for i in 0..self.strata {
            let zi = &self.z[i * k..(i + 1) * k];
            let lin: f64 = zi.iter().zip(beta).map(|(a, b)| a * b).sum();
            let mis: f64 = if joint {
                zi.iter()
                    .zip(&theta[o_gam..o_gam + k])
                    .map(|(a, b)| a * b)
                    .sum()
            } else {
                0.0
            };
            let row = g * self.strata + i;
            let base = row * jn;
            let mut dlin = 0.0;
            let mut dmis = 0.0;
            for j in 0..jn {
                let ln_e = self.ln_e[base + j];
                let x = self.x[base + j];
                if ln_e == f64::NEG_INFINITY {
                    if x > 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    t[j] = f64::NEG_INFINITY;
                    p[j] = 0.0;
                    continue;
                }
                let mut lr = log_lam[j] + lin + ln_e;
                if joint {
                    // One exp and one log1p give p, log p and log(1 - p).
                    let a = mis + theta[o_eta + j];
                    let e = (-a.abs()).exp();
                    let l = e.ln_1p();
                    let (log_p, log_q) = if a >= 0.0 { (-l, -a - l) } else { (a - l, -l) };
                    p[j] = if a >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                    lr += log_p;
                    t[j] = log_q + log_lam[j] + ln_e;
                }
                let mu = lr.exp();
                lp += x * lr - mu;
                let r = x - mu;
                g_lam[j] += r;
                dlin += r;
                if joint {
                    let da = r * (1.0 - p[j]);
                    g_eta[j] += da;
                    dmis += da;
                }
            }
            if joint {
                let m = self.m[row];
                let t_max = t[..jn].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if t_max == f64::NEG_INFINITY {
                    if m > 0.0 {
                        return f64::NEG_INFINITY;
                    }
                } else {
                    // Softmax weights of t, reused for the gradient.
                    let mut total = 0.0;
                    for (wj, &tj) in w.iter_mut().zip(&t[..jn]) {
                        *wj = (tj - t_max).exp();
                        total += *wj;
                    }
                    let log_mu = t_max + total.ln() + lin;
                    let mu_m = log_mu.exp();
                    lp += m * log_mu - mu_m;
                    for j in 0..jn {
                        if t[j] == f64::NEG_INFINITY {
                            continue;
                        }
                        let c = (m - mu_m) * w[j] / total;
                        g_lam[j] += c;
                        g_eta[j] -= p[j] * c;
                        dmis -= p[j] * c;
                    }
                    dlin += m - mu_m;
                }
            }
            for c in 0..k {
                g_beta[c] += dlin * zi[c];
                g_gam[c] += dmis * zi[c];
            }
        }
        if let Some(gr) = grad {
            for j in 0..jn {
                gr[o_lam + j] += g_lam[j];
            }
            for c in 0..k {
                gr[o_beta + c] += g_beta[c];
            }
            if joint {
                for j in 0..jn {
                    gr[o_eta + j] += g_eta[j];
                }
                for c in 0..k {
                    gr[o_gam + c] += g_gam[c];
                }
            }
        }
        lp
    }

    fn prior_terms(&self, theta: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let mut lp = 0.0;
        for &b in self.layout.kind.blocks() {
            lp += self.block_prior(b, theta, grad.as_deref_mut());
        }
        lp + self.hyper_terms(theta, grad)
    }

    /// Normal hierarchical prior of block `b` of every geography around
    /// `α + Π w_g` with scales `σ`.
    fn block_prior(&self, b: Block, theta: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let lay = &self.layout;
        let oa = lay.alpha_offset(b);
        let os = lay.log_sigma_offset(b);
        let mut lp = 0.0;
        for e in 0..b.len(lay.j, lay.k) {
            let alpha = theta[oa + e];
            let log_sigma = theta[os + e];
            let sigma = log_sigma.exp();
            let mut d_alpha = 0.0;
            let mut d_log_sigma = 0.0;
            for g in 0..lay.geos {
                let og = lay.geo_offset(g, b) + e;
                let mu = alpha + self.offsets[g][b as usize][e];
                let dz = (theta[og] - mu) / sigma;
                lp += -0.5 * LN_2PI - log_sigma - 0.5 * dz * dz;
                if let Some(gr) = grad.as_deref_mut() {
                    gr[og] -= dz / sigma;
                }
                d_alpha += dz / sigma;
                d_log_sigma += dz * dz - 1.0;
            }
            if let Some(gr) = grad.as_deref_mut() {
                gr[oa + e] += d_alpha;
                gr[os + e] += d_log_sigma;
            }
        }
        lp
    }

    /// Normal hyperprior on `α` and half-normal on `σ`, written in `log σ`
    /// with the Jacobian. Gradients are accumulated into `grad`.
    fn hyper_terms(&self, theta: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let lay = &self.layout;
        let mut lp = 0.0;
        for &b in lay.kind.blocks() {
            let oa = lay.alpha_offset(b);
            let os = lay.log_sigma_offset(b);
            let bp = self.prior.block(b);
            for e in 0..b.len(lay.j, lay.k) {
                let (alpha, log_sigma) = (theta[oa + e], theta[os + e]);
                let (am, asc, ss) = (bp.alpha_mean[e], bp.alpha_scale[e], bp.sigma_scale[e]);
                let u = log_sigma.exp() / ss;
                lp += normal_lpdf(alpha, am, asc);
                lp += std::f64::consts::LN_2 - 0.5 * LN_2PI - ss.ln() - 0.5 * u * u + log_sigma;
                if let Some(gr) = grad.as_deref_mut() {
                    gr[oa + e] -= (alpha - am) / (asc * asc);
                    gr[os + e] += 1.0 - u * u;
                }
            }
        }
        lp
    }
}

impl LogDensity for PosteriorTarget {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.eval(theta, Some(grad))
    }
}

/// Log posterior of the covariate-free model in `(log v, log u)` coordinates
/// under independent Gamma priors `v_j ~ Gamma(α_j, r_j)`, `u_j ~ Gamma(β_j, r_j)`.
///
/// Layout: `[log v_1..log v_J, log u_1..log u_J]`.
#[derive(Debug, Clone)]
pub struct SimpleTarget {
    j: usize,
    e: Vec<f64>,
    x: Vec<f64>,
    m: Vec<f64>,
    prior: crate::params::SimplePrior,
}

impl SimpleTarget {
    pub fn new(
        pop: &PopulationTable,
        cases: &CaseTable,
        prior: &crate::params::SimplePrior,
    ) -> Result<Self> {
        pop.require_single_geo()?;
        check_axes(pop, cases)?;
        let j = pop.dims().categories;
        dim_check("simple prior", prior.alpha.len(), j)?;
        Ok(Self {
            j,
            e: pop.counts().iter().map(|&v| v as f64).collect(),
            x: cases.observed().iter().map(|&v| v as f64).collect(),
            m: cases.missing().iter().map(|&v| v as f64).collect(),
            prior: prior.clone(),
        })
    }
}

impl LogDensity for SimpleTarget {
    fn dim(&self) -> usize {
        2 * self.j
    }

    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        let jn = self.j;
        dim_check("parameter vector", theta.len(), 2 * jn)?;
        let v: Vec<f64> = theta[..jn].iter().map(|t| t.exp()).collect();
        let u: Vec<f64> = theta[jn..].iter().map(|t| t.exp()).collect();
        grad.fill(0.0);
        let mut lp = 0.0;
        for (i, &m) in self.m.iter().enumerate() {
            let row = &self.e[i * jn..(i + 1) * jn];
            let mut mu_m = 0.0;
            for j in 0..jn {
                let mu = v[j] * row[j];
                let x = self.x[i * jn + j];
                if mu > 0.0 {
                    lp += x * mu.ln() - mu;
                } else if x > 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                grad[j] += x - mu;
                mu_m += u[j] * row[j];
            }
            if mu_m > 0.0 {
                lp += m * mu_m.ln() - mu_m;
                for j in 0..jn {
                    grad[jn + j] += (m / mu_m - 1.0) * u[j] * row[j];
                }
            } else if m > 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
        }
        // Gamma(shape, rate) on the positive scale plus the log Jacobian.
        for j in 0..jn {
            let r = self.prior.rate[j];
            let (av, bu) = (self.prior.alpha[j], self.prior.beta[j]);
            lp += av * theta[j] - r * v[j];
            grad[j] += av - r * v[j];
            lp += bu * theta[jn + j] - r * u[j];
            grad[jn + j] += bu - r * u[j];
        }
        nan_guard(lp)
    }
}
