//! Parameter containers, prior configuration and the unconstrained layout
//! used by the samplers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::special::inv_logit;
use crate::tables::DesignMatrices;

/// Per-geography parameters `(log λ_g, η_g, β_g, γ_g)`.
///
/// The complete-case model leaves `eta` and `gamma` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoParams {
    pub log_lambda: Vec<f64>,
    pub eta: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl GeoParams {
    pub fn new(log_lambda: Vec<f64>, eta: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>) -> Self {
        Self {
            log_lambda,
            eta,
            beta,
            gamma,
        }
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.log_lambda.iter().map(|l| l.exp()).collect()
    }

    /// Observation probability `p_ij = inv_logit(z_i·γ + η_j)`.
    pub fn p(&self, design: &DesignMatrices, i: usize, j: usize) -> f64 {
        inv_logit(design.zdot(i, &self.gamma) + self.eta[j])
    }

    /// Per-person rate `r_ij = λ_j exp(z_i·β)`.
    pub fn rate(&self, design: &DesignMatrices, i: usize, j: usize) -> f64 {
        (self.log_lambda[j] + design.zdot(i, &self.beta)).exp()
    }

    pub fn check(&self, j: usize, k: usize, kind: ModelKind) -> Result<()> {
        dim_check("log_lambda", self.log_lambda.len(), j)?;
        dim_check("beta", self.beta.len(), k)?;
        if kind == ModelKind::Joint {
            dim_check("eta", self.eta.len(), j)?;
            dim_check("gamma", self.gamma.len(), k)?;
        }
        let all = self
            .log_lambda
            .iter()
            .chain(&self.eta)
            .chain(&self.beta)
            .chain(&self.gamma);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Domain("geography parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Blocks of the hierarchical parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    Lambda,
    Eta,
    Beta,
    Gamma,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::Lambda, Block::Eta, Block::Beta, Block::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Block::Lambda => "lambda",
            Block::Eta => "eta",
            Block::Beta => "beta",
            Block::Gamma => "gamma",
        }
    }

    /// Block length given `J` categories and `K` stratum covariates.
    pub fn len(self, j: usize, k: usize) -> usize {
        match self {
            Block::Lambda | Block::Eta => j,
            Block::Beta | Block::Gamma => k,
        }
    }

    pub fn of(self, gp: &GeoParams) -> &[f64] {
        match self {
            Block::Lambda => &gp.log_lambda,
            Block::Eta => &gp.eta,
            Block::Beta => &gp.beta,
            Block::Gamma => &gp.gamma,
        }
    }

    fn of_mut(self, gp: &mut GeoParams) -> &mut Vec<f64> {
        match self {
            Block::Lambda => &mut gp.log_lambda,
            Block::Eta => &mut gp.eta,
            Block::Beta => &mut gp.beta,
            Block::Gamma => &mut gp.gamma,
        }
    }
}

/// Which observation model is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Disease and missingness jointly (observed and missing counts).
    Joint,
    /// Observed counts only; missing cases dropped.
    CompleteCase,
}

impl ModelKind {
    pub fn blocks(self) -> &'static [Block] {
        match self {
            ModelKind::Joint => &Block::ALL,
            ModelKind::CompleteCase => &[Block::Lambda, Block::Beta],
        }
    }
}

/// Population-level hyperparameters with diagonal covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha: [Vec<f64>; 4],
    pub sigma: [Vec<f64>; 4],
    /// Optional area-covariate loadings `Π_b` (`len(b) × D`), fixed, not sampled.
    pub pi: [Option<DMatrix<f64>>; 4],
}

impl HyperParams {
    pub fn new(alpha: [Vec<f64>; 4], sigma: [Vec<f64>; 4]) -> Self {
        Self {
            alpha,
            sigma,
            pi: [None, None, None, None],
        }
    }

    #[inline]
    pub fn alpha(&self, b: Block) -> &[f64] {
        &self.alpha[b as usize]
    }

    #[inline]
    pub fn sigma(&self, b: Block) -> &[f64] {
        &self.sigma[b as usize]
    }

    pub fn pi(&self, b: Block) -> Option<&DMatrix<f64>> {
        self.pi[b as usize].as_ref()
    }

    /// Hierarchical mean `α_b + Π_b w` for block `b`.
    pub fn location(&self, b: Block, w: Option<&[f64]>) -> Vec<f64> {
        let mut mu = self.alpha(b).to_vec();
        if let (Some(pi), Some(w)) = (self.pi(b), w) {
            for (r, m) in mu.iter_mut().enumerate() {
                for (c, wc) in w.iter().enumerate() {
                    *m += pi[(r, c)] * wc;
                }
            }
        }
        mu
    }

    pub fn check(&self, j: usize, k: usize, kind: ModelKind) -> Result<()> {
        for &b in kind.blocks() {
            dim_check(&format!("alpha_{}", b.name()), self.alpha(b).len(), b.len(j, k))?;
            dim_check(&format!("sigma_{}", b.name()), self.sigma(b).len(), b.len(j, k))?;
            if self.sigma(b).iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                return Err(Error::Domain(format!(
                    "sigma_{} must be positive and finite",
                    b.name()
                )));
            }
        }
        Ok(())
    }
}

/// Normal prior on `α_b` and half-normal prior on `σ_b`, elementwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPrior {
    pub alpha_mean: Vec<f64>,
    pub alpha_scale: Vec<f64>,
    pub sigma_scale: Vec<f64>,
}

impl BlockPrior {
    pub fn constant(len: usize, mean: f64, scale: f64, sigma_scale: f64) -> Self {
        Self {
            alpha_mean: vec![mean; len],
            alpha_scale: vec![scale; len],
            sigma_scale: vec![sigma_scale; len],
        }
    }
}

/// Hyperprior configuration for the hierarchical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub lambda: BlockPrior,
    pub eta: BlockPrior,
    pub beta: BlockPrior,
    pub gamma: BlockPrior,
}

impl PriorConfig {
    /// Priors used when fitting simulated data: `α_λ ~ N(-5, 1)`,
    /// `α_η ~ N(2, 1)`, `α_β, α_γ ~ N(0, 1)`, unit half-normal scales except
    /// `σ_γ ~ N⁺(0, 0.25)`.
    pub fn simulation(j: usize, k: usize) -> Self {
        Self {
            lambda: BlockPrior::constant(j, -5.0, 1.0, 1.0),
            eta: BlockPrior::constant(j, 2.0, 1.0, 1.0),
            beta: BlockPrior::constant(k, 0.0, 1.0, 1.0),
            gamma: BlockPrior::constant(k, 0.0, 1.0, 0.25),
        }
    }

    /// As [`PriorConfig::simulation`] with `σ_γ ~ N⁺(0, 1)`.
    pub fn applied(j: usize, k: usize) -> Self {
        let mut p = Self::simulation(j, k);
        p.gamma.sigma_scale = vec![1.0; k];
        p
    }

    pub fn block(&self, b: Block) -> &BlockPrior {
        match b {
            Block::Lambda => &self.lambda,
            Block::Eta => &self.eta,
            Block::Beta => &self.beta,
            Block::Gamma => &self.gamma,
        }
    }

    pub fn check(&self, j: usize, k: usize, kind: ModelKind) -> Result<()> {
        for &b in kind.blocks() {
            let bp = self.block(b);
            let n = b.len(j, k);
            dim_check(&format!("prior alpha_mean {}", b.name()), bp.alpha_mean.len(), n)?;
            dim_check(&format!("prior alpha_scale {}", b.name()), bp.alpha_scale.len(), n)?;
            dim_check(&format!("prior sigma_scale {}", b.name()), bp.sigma_scale.len(), n)?;
            if bp
                .alpha_scale
                .iter()
                .chain(&bp.sigma_scale)
                .any(|s| !(*s > 0.0))
            {
                return Err(Error::Domain(format!(
                    "prior scales for {} must be positive",
                    b.name()
                )));
            }
        }
        Ok(())
    }
}

/// Beta/Gamma priors of the covariate-free model:
/// `p_j ~ Beta(α_j, β_j)`, `λ_j ~ Gamma(α_j + β_j, r_j)`,
/// equivalently `v_j ~ Gamma(α_j, r_j)` independent of `u_j ~ Gamma(β_j, r_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplePrior {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub rate: Vec<f64>,
}

impl SimplePrior {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, rate: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() || alpha.len() != rate.len() {
            return Err(Error::Dimension("simple prior vectors differ in length".into()));
        }
        if alpha.iter().chain(&beta).chain(&rate).any(|v| !(*v > 0.0)) {
            return Err(Error::Domain("simple prior parameters must be positive".into()));
        }
        Ok(Self { alpha, beta, rate })
    }
}

/// Mapping between structured parameters and the flat unconstrained vector.
///
/// Layout: for each geography the blocks of [`ModelKind::blocks`] in order,
/// then the `α` blocks, then the `log σ` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub kind: ModelKind,
    pub j: usize,
    pub k: usize,
    pub geos: usize,
    stride: usize,
}

impl ParamLayout {
    pub fn new(kind: ModelKind, j: usize, k: usize, geos: usize) -> Self {
        let stride = kind.blocks().iter().map(|b| b.len(j, k)).sum();
        Self {
            kind,
            j,
            k,
            geos,
            stride,
        }
    }

    pub fn dim(&self) -> usize {
        self.stride * (self.geos + 2)
    }

    /// Length of one geography's parameter vector.
    pub fn stride(&self) -> usize {
        self.stride
    }

    fn block_offset(&self, b: Block) -> usize {
        let mut off = 0;
        for &bb in self.kind.blocks() {
            if bb == b {
                return off;
            }
            off += bb.len(self.j, self.k);
        }
        panic!("block {b:?} not present in {:?} layout", self.kind)
    }

    pub fn has(&self, b: Block) -> bool {
        self.kind.blocks().contains(&b)
    }

    pub fn geo_offset(&self, g: usize, b: Block) -> usize {
        g * self.stride + self.block_offset(b)
    }

    pub fn alpha_offset(&self, b: Block) -> usize {
        self.geos * self.stride + self.block_offset(b)
    }

    pub fn log_sigma_offset(&self, b: Block) -> usize {
        (self.geos + 1) * self.stride + self.block_offset(b)
    }

    pub fn unpack(&self, theta: &[f64]) -> (Vec<GeoParams>, HyperParams) {
        assert_eq!(theta.len(), self.dim());
        let mut geo = Vec::with_capacity(self.geos);
        for g in 0..self.geos {
            let mut gp = GeoParams::new(vec![], vec![], vec![], vec![]);
            for &b in self.kind.blocks() {
                let o = self.geo_offset(g, b);
                *b.of_mut(&mut gp) = theta[o..o + b.len(self.j, self.k)].to_vec();
            }
            geo.push(gp);
        }
        let mut alpha: [Vec<f64>; 4] = Default::default();
        let mut sigma: [Vec<f64>; 4] = Default::default();
        for &b in self.kind.blocks() {
            let n = b.len(self.j, self.k);
            let a = self.alpha_offset(b);
            let s = self.log_sigma_offset(b);
            alpha[b as usize] = theta[a..a + n].to_vec();
            sigma[b as usize] = theta[s..s + n].iter().map(|v| v.exp()).collect();
        }
        (geo, HyperParams::new(alpha, sigma))
    }

    pub fn pack(&self, geo: &[GeoParams], hyper: &HyperParams) -> Vec<f64> {
        let mut theta = vec![0.0; self.dim()];
        for (g, gp) in geo.iter().enumerate() {
            for &b in self.kind.blocks() {
                let o = self.geo_offset(g, b);
                let src = b.of(gp);
                theta[o..o + src.len()].copy_from_slice(src);
            }
        }
        for &b in self.kind.blocks() {
            let a = self.alpha_offset(b);
            let s = self.log_sigma_offset(b);
            let n = b.len(self.j, self.k);
            theta[a..a + n].copy_from_slice(hyper.alpha(b));
            for (t, v) in theta[s..s + n].iter_mut().zip(hyper.sigma(b)) {
                *t = v.ln();
            }
        }
        theta
    }

    /// Parameter names on the reporting scale (σ reported, not log σ).
    pub fn names(&self, geos: &[String], categories: &[String], covariates: &[String]) -> Vec<String> {
        let elem = |b: Block, e: usize| -> String {
            match b {
                Block::Lambda | Block::Eta => categories[e].clone(),
                Block::Beta | Block::Gamma => covariates
                    .get(e)
                    .cloned()
                    .unwrap_or_else(|| format!("z{}", e + 1)),
            }
        };
        let geo_name = |b: Block| match b {
            Block::Lambda => "log_lambda",
            Block::Eta => "eta",
            Block::Beta => "beta",
            Block::Gamma => "gamma",
        };
        let mut names = Vec::with_capacity(self.dim());
        for gname in geos.iter().take(self.geos) {
            for &b in self.kind.blocks() {
                for e in 0..b.len(self.j, self.k) {
                    names.push(format!("{}[{},{}]", geo_name(b), gname, elem(b, e)));
                }
            }
        }
        for prefix in ["alpha", "sigma"] {
            for &b in self.kind.blocks() {
                for e in 0..b.len(self.j, self.k) {
                    names.push(format!("{prefix}_{}[{}]", b.name(), elem(b, e)));
                }
            }
        }
        names
    }

    /// Map an unconstrained draw to the reporting scale (exponentiate `log σ`).
    pub fn constrain(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = theta.to_vec();
        let start = (self.geos + 1) * self.stride;
        for v in &mut out[start..] {
            *v = v.exp();
        }
        out
    }

    /// Inverse of [`ParamLayout::constrain`].
    pub fn unconstrain(&self, values: &[f64]) -> Vec<f64> {
        let mut out = values.to_vec();
        let start = (self.geos + 1) * self.stride;
        for v in &mut out[start..] {
            *v = v.ln();
        }
        out
    }
}
