//! Closed-form estimators, approximate posteriors for a minority category,
//! Fisher information of the covariate-free model and identifiability checks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::special::{mills_fraction_tails, phi_over_cdf};
use crate::tables::{CaseTable, DesignMatrices, PopulationTable};

/// Moment estimates in both the `(v, u)` and `(λ, p)` parameterisations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleEstimates {
    pub v_hat: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    /// `v̂ / λ̂`; NaN where `λ̂ ≤ 0`.
    pub p_hat: Vec<f64>,
}

/// Singular-value rank with tolerance `max_dim · σ_max · ε · 64`.
pub fn numerical_rank(m: &DMatrix<f64>) -> (usize, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, 0.0);
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = m.nrows().max(m.ncols()) as f64 * smax * f64::EPSILON * 64.0;
    (sv.iter().filter(|&&s| s > tol).count(), tol)
}

/// `v̂_j = Σ_i x_ij / Σ_i E_ij`.
pub fn estimate_v(pop: &PopulationTable, cases: &CaseTable) -> Result<Vec<f64>> {
    pop.require_single_geo()?;
    cases.conforms_to(pop)?;
    let d = pop.dims();
    let totals = pop.category_totals();
    let mut out = Vec::with_capacity(d.categories);
    for (j, &tot) in totals.iter().enumerate() {
        if tot == 0 {
            return Err(Error::Domain(format!("category {j} has zero population")));
        }
        let x: u64 = (0..d.strata).map(|i| cases.x(i, 0, j)).sum();
        out.push(x as f64 / tot as f64);
    }
    Ok(out)
}

/// Least-squares `û = argmin ‖m - E u‖`, solved by QR.
pub fn estimate_u(pop: &PopulationTable, m: &[u64]) -> Result<Vec<f64>> {
    pop.require_single_geo()?;
    let d = pop.dims();
    dim_check("missing counts", m.len(), d.strata)?;
    let e = pop.geo_matrix(0);
    let (rank, _) = numerical_rank(&e);
    if rank < d.categories {
        return Err(Error::Identifiability {
            what: "population matrix E must have full column rank".into(),
            rank,
            required: d.categories,
        });
    }
    let rhs = DVector::from_iterator(m.len(), m.iter().map(|&v| v as f64));
    let qr = e.qr();
    let qtb = qr.q().transpose() * rhs;
    let r = qr.r();
    let sol = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Identifiability {
            what: "singular R factor".into(),
            rank,
            required: d.categories,
        })?;
    Ok(sol.iter().copied().collect())
}

/// Two-category projection form of `û_1`: `mᵀ(I - P_2)e_1 / ‖(I - P_2)e_1‖²`,
/// where `P_2` projects onto the second population column.
pub fn projection_u1(pop: &PopulationTable, m: &[u64]) -> Result<f64> {
    pop.require_single_geo()?;
    dim_check("categories", pop.dims().categories, 2)?;
    let e = pop.geo_matrix(0);
    let e1 = e.column(0).clone_owned();
    let e2 = e.column(1).clone_owned();
    let resid = &e1 - &e2 * (e2.dot(&e1) / e2.dot(&e2));
    let mv = DVector::from_iterator(m.len(), m.iter().map(|&v| v as f64));
    let denom = resid.dot(&resid);
    if denom == 0.0 {
        return Err(Error::Identifiability {
            what: "population columns are collinear".into(),
            rank: 1,
            required: 2,
        });
    }
    Ok(mv.dot(&resid) / denom)
}

/// `λ̂ = v̂ + û`, `p̂ = v̂ / λ̂`.
pub fn estimate_lambda(pop: &PopulationTable, cases: &CaseTable) -> Result<SimpleEstimates> {
    let v_hat = estimate_v(pop, cases)?;
    let u_hat = estimate_u(pop, cases.missing())?;
    let lambda_hat: Vec<f64> = v_hat.iter().zip(&u_hat).map(|(v, u)| v + u).collect();
    let p_hat = v_hat
        .iter()
        .zip(&lambda_hat)
        .map(|(v, l)| if *l > 0.0 { v / l } else { f64::NAN })
        .collect();
    Ok(SimpleEstimates {
        v_hat,
        u_hat,
        lambda_hat,
        p_hat,
    })
}

/// Approximate conditional posterior of the minority-category rate `λ_1`
/// given the majority missing-rate `u_2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxPosterior {
    pub mean: f64,
    pub variance: f64,
    pub z: f64,
    pub s1: f64,
    pub s2: f64,
    pub e_plus1: f64,
    /// Moments of the missing-rate component `u_1` alone.
    pub u1_mean: f64,
    pub u1_variance: f64,
    /// Set when `max_i E_i1 / E_i2 > 0.2`, where the approximation is poor.
    pub minority_warning: bool,
}

/// Ratio above which category 1 is not treated as a small minority.
pub const MINORITY_RATIO_WARNING: f64 = 0.2;

/// Closed-form approximate posterior of `λ_1` for two categories under the
/// Beta/Gamma prior with `β_1 ∈ {1, 2}`.
///
/// The log of the missing-count rate is expanded to second order in
/// `u_1 E_i1 / (u_2 E_i2)`, which makes `u_1 | u_2` a modified half-normal.
pub fn approx_posterior_lambda1(
    pop: &PopulationTable,
    cases: &CaseTable,
    u2: f64,
    r1: f64,
    alpha1: f64,
    beta1: u8,
) -> Result<ApproxPosterior> {
    pop.require_single_geo()?;
    cases.conforms_to(pop)?;
    dim_check("categories", pop.dims().categories, 2)?;
    if !(u2 > 0.0 && r1 > 0.0 && alpha1 > 0.0) {
        return Err(Error::Domain("u2, r1 and alpha1 must be positive".into()));
    }
    if beta1 != 1 && beta1 != 2 {
        return Err(Error::Domain(format!("beta1 must be 1 or 2, got {beta1}")));
    }
    let (mut s1, mut s2, mut e_plus1, mut sum_x1) = (0.0, 0.0, 0.0, 0.0);
    let mut max_ratio: f64 = 0.0;
    for i in 0..pop.dims().strata {
        let e1 = pop.get(i, 0, 0) as f64;
        let e2 = pop.get(i, 0, 1) as f64;
        if e2 == 0.0 {
            return Err(Error::Domain(format!("stratum {i} has no majority population")));
        }
        let m = cases.m(i, 0) as f64;
        let ratio = e1 / e2;
        s1 += m * ratio;
        s2 += m * ratio * ratio;
        e_plus1 += e1;
        sum_x1 += cases.x(i, 0, 0) as f64;
        max_ratio = max_ratio.max(ratio);
    }
    if s2 == 0.0 {
        return Err(Error::Degenerate(
            "no missing cases in strata with minority population".into(),
        ));
    }
    let z = (s1 - u2 * (r1 + e_plus1)) / s2.sqrt();
    let scale = u2 / s2.sqrt();
    let (u1_mean, u1_variance) = modified_half_normal_moments(z, scale, beta1);
    let shape = alpha1 + sum_x1;
    let rate = r1 + e_plus1;
    Ok(ApproxPosterior {
        mean: shape / rate + u1_mean,
        variance: shape / (rate * rate) + u1_variance,
        z,
        s1,
        s2,
        e_plus1,
        u1_mean,
        u1_variance,
        minority_warning: max_ratio > MINORITY_RATIO_WARNING,
    })
}

/// Mean and variance of the density `∝ u^{β-1} φ(u/σ - z)` on `u > 0`.
///
/// For `z < -3` the textbook forms cancel (`z + φ/Φ` is `O(1/|z|)` from
/// terms of size `|z|`). There, with `c_k` the continued-fraction tails at
/// `-z`, `z + φ/Φ = c_1` and the moments are `σ c_β` and `σ² c_β (c_{β+1} - c_β)`.
fn modified_half_normal_moments(z: f64, sigma: f64, beta: u8) -> (f64, f64) {
    if z < -3.0 {
        let c = mills_fraction_tails(-z);
        let b = beta as usize - 1;
        return (sigma * c[b], sigma * sigma * c[b] * (c[b + 1] - c[b]));
    }
    let h = phi_over_cdf(z);
    if beta == 1 {
        let mean = sigma * (z + h);
        let var = sigma * sigma * (1.0 - z * h - h * h);
        (mean, var)
    } else {
        // Φ/D with D = zΦ + φ, rewritten as 1/(z + φ/Φ).
        let c = 1.0 / (z + h);
        let mean = sigma * (z + c);
        let var = sigma * sigma * (1.0 + h * c - c * c);
        (mean, var)
    }
}

/// Standardised change in posterior mean when `β_1` moves from 1 to 2, in
/// closed form: `√(1 - zφ/Φ - φ²/Φ²) / (z + φ/Φ)`, evaluated as
/// `√((c_2 - c_1) / c_1)` for `z < -3` (see [`modified_half_normal_moments`]).
pub fn beta_shift_statistic(z: f64) -> f64 {
    if z < -3.0 {
        let c = mills_fraction_tails(-z);
        return ((c[1] - c[0]) / c[0]).sqrt();
    }
    let h = phi_over_cdf(z);
    (1.0 - z * h - h * h).sqrt() / (z + h)
}

/// Large-population limit of [`approx_posterior_lambda1`] with `β_1 = 1`
/// when `E_i1² / E_i2 → K` for all `I` strata.
///
/// `s2` holds the limiting `u_2 I K`; `s1` and `e_plus1` diverge and are NaN.
pub fn approx_posterior_asymptote(
    u1_star: f64,
    u2_star: f64,
    v1_star: f64,
    strata: f64,
    k: f64,
    r1: f64,
) -> Result<ApproxPosterior> {
    if [u1_star, u2_star, v1_star, strata, k, r1]
        .iter()
        .any(|v| !(*v > 0.0) || !v.is_finite())
    {
        return Err(Error::Domain("asymptote inputs must be positive".into()));
    }
    let ik = strata * k;
    let z = (u1_star * ik - u2_star * r1) / (u2_star * ik).sqrt();
    let h = phi_over_cdf(z);
    let u1_mean = (u1_star * ik - r1 * u2_star) / ik + u2_star.sqrt() * h / ik.sqrt();
    let u1_variance = u2_star / ik * (1.0 - z * h - h * h);
    Ok(ApproxPosterior {
        mean: v1_star + u1_mean,
        variance: u1_variance,
        z,
        s1: f64::NAN,
        s2: u2_star * ik,
        e_plus1: f64::NAN,
        u1_mean,
        u1_variance,
        minority_warning: false,
    })
}

/// Expected Fisher information of the covariate-free model in `(v, u)`:
/// `diag(V, U)` with `V_jj = Σ_i E_ij / v_j` and `U = Eᵀ diag(1 / E u) E`.
pub fn fisher_info_simple(pop: &PopulationTable, u: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    pop.require_single_geo()?;
    let d = pop.dims();
    let jn = d.categories;
    dim_check("u", u.len(), jn)?;
    dim_check("v", v.len(), jn)?;
    if u.iter().chain(v).any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain("u and v must be positive and finite".into()));
    }
    let e = pop.geo_matrix(0);
    let mut info = DMatrix::zeros(2 * jn, 2 * jn);
    let totals = pop.category_totals();
    for j in 0..jn {
        info[(j, j)] = totals[j] as f64 / v[j];
    }
    for i in 0..d.strata {
        let mu: f64 = (0..jn).map(|j| e[(i, j)] * u[j]).sum();
        if mu <= 0.0 {
            return Err(Error::Domain(format!(
                "stratum {i} has zero expected missing count"
            )));
        }
        for a in 0..jn {
            for b in 0..jn {
                info[(jn + a, jn + b)] += e[(i, a)] * e[(i, b)] / mu;
            }
        }
    }
    Ok(info)
}

/// Whether a symmetric matrix is positive definite under the rank tolerance rule.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max_abs = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = m.nrows() as f64 * max_abs * f64::EPSILON * 64.0;
    eig.iter().all(|&v| v > tol)
}

/// Outcome of one identifiability condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub code: String,
    pub description: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ConditionResult {
    fn flag(code: &str, description: &str, passed: bool) -> Self {
        Self {
            code: code.into(),
            description: description.into(),
            passed,
            rank: None,
            required: None,
            tolerance: None,
        }
    }

    fn rank(code: &str, description: &str, rank: usize, required: usize, tol: f64, passed: bool) -> Self {
        Self {
            code: code.into(),
            description: description.into(),
            passed,
            rank: Some(rank),
            required: Some(required),
            tolerance: Some(tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    /// `"global"` for the covariate-free model, `"local"` for the covariate model.
    pub kind: String,
    pub conditions: Vec<ConditionResult>,
    /// Checks reported for information that do not enter the verdict.
    pub supplementary: Vec<ConditionResult>,
    pub identifiable: bool,
}

impl IdentifiabilityReport {
    fn new(kind: &str, conditions: Vec<ConditionResult>, supplementary: Vec<ConditionResult>) -> Self {
        let identifiable = conditions.iter().all(|c| c.passed);
        Self {
            kind: kind.into(),
            conditions,
            supplementary,
            identifiable,
        }
    }

    pub fn get(&self, code: &str) -> Option<&ConditionResult> {
        self.conditions
            .iter()
            .chain(&self.supplementary)
            .find(|c| c.code == code)
    }
}

fn rows_positive(pop: &PopulationTable) -> bool {
    (0..pop.dims().strata).all(|i| pop.row(i, 0).iter().sum::<u64>() > 0)
}

/// Global identifiability conditions of the covariate-free model.
pub fn check_global_id(pop: &PopulationTable, lambda: &[f64], p: &[f64]) -> Result<IdentifiabilityReport> {
    pop.require_single_geo()?;
    let jn = pop.dims().categories;
    dim_check("lambda", lambda.len(), jn)?;
    dim_check("p", p.len(), jn)?;
    let (rank, tol) = numerical_rank(&pop.geo_matrix(0));
    let conditions = vec![
        ConditionResult::rank("E.a", "rank(E) = J", rank, jn, tol, rank == jn),
        ConditionResult::flag(
            "E.b",
            "lambda_j in (0, inf)",
            lambda.iter().all(|l| *l > 0.0 && l.is_finite()),
        ),
        ConditionResult::flag("E.c", "p_j in (0, 1)", p.iter().all(|q| *q > 0.0 && *q < 1.0)),
    ];
    let supplementary = vec![ConditionResult::flag(
        "E.d",
        "every stratum has positive total population",
        rows_positive(pop),
    )];
    Ok(IdentifiabilityReport::new("global", conditions, supplementary))
}

/// Stacked matrix `[diag(E_1) Z, …, diag(E_J) Z, E_1, …, E_J]`.
pub fn stacked_rank_matrix(e: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let (i_n, jn, k) = (e.nrows(), e.ncols(), z.ncols());
    let mut out = DMatrix::zeros(i_n, jn * k + jn);
    for j in 0..jn {
        for i in 0..i_n {
            for c in 0..k {
                out[(i, j * k + c)] = e[(i, j)] * z[(i, c)];
            }
            out[(i, jn * k + j)] = e[(i, j)];
        }
    }
    out
}

/// Local identifiability conditions of the covariate model at a parameter
/// point; `p` is the `I × J` matrix of observation probabilities.
pub fn check_local_id(
    pop: &PopulationTable,
    design: &DesignMatrices,
    lambda: &[f64],
    p: &DMatrix<f64>,
    beta: &[f64],
) -> Result<IdentifiabilityReport> {
    pop.require_single_geo()?;
    let d = pop.dims();
    let (i_n, jn, k) = (d.strata, d.categories, design.k());
    design.conforms_to(d)?;
    dim_check("lambda", lambda.len(), jn)?;
    dim_check("beta", beta.len(), k)?;
    if p.nrows() != i_n || p.ncols() != jn {
        return Err(Error::Dimension(format!(
            "p is {}x{}, expected {i_n}x{jn}",
            p.nrows(),
            p.ncols()
        )));
    }
    let e = pop.geo_matrix(0);
    let (rank_e, tol_e) = numerical_rank(&e);
    let (rank_z, tol_z) = numerical_rank(&design.z);
    let big = stacked_rank_matrix(&e, &design.z);
    let (rank_big, tol_big) = numerical_rank(&big);
    let f_ok = (0..i_n).all(|i| {
        let v = design.zdot(i, beta).exp() * pop.row(i, 0).iter().sum::<u64>() as f64;
        v > 0.0 && v.is_finite()
    });
    let conditions = vec![
        ConditionResult::rank("S.a", "rank(E) = J", rank_e, jn, tol_e, rank_e == jn),
        ConditionResult::rank("S.b", "rank(Z) = K", rank_z, k, tol_z, rank_z == k),
        ConditionResult::flag("S.c", "I >= J + K", i_n >= jn + k),
        ConditionResult::flag("S.d", "p_ij in (0, 1)", p.iter().all(|q| *q > 0.0 && *q < 1.0)),
        ConditionResult::flag(
            "S.e",
            "lambda_j in (0, inf)",
            lambda.iter().all(|l| *l > 0.0 && l.is_finite()),
        ),
        ConditionResult::flag("S.f", "exp(z_i beta) sum_j E_ij in (0, inf)", f_ok),
        // Passing requires rank strictly greater than J + K.
        ConditionResult::rank(
            "S.g",
            "rank([diag(E_j) Z ..., E_j ...]) > J + K",
            rank_big,
            jn + k + 1,
            tol_big,
            rank_big > jn + k,
        ),
    ];
    Ok(IdentifiabilityReport::new("local", conditions, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::std_normal_pdf;

    #[test]
    fn v_hat_direct_ratio() {
        let pop = PopulationTable::from_matrix(&[vec![10], vec![30]]).unwrap();
        let cases = CaseTable::from_matrix(&[vec![1], vec![3]], &[0, 0]).unwrap();
        assert!((estimate_v(&pop, &cases).unwrap()[0] - 0.1).abs() < 1e-15);
        let zero = CaseTable::zeros(pop.dims());
        assert_eq!(estimate_v(&pop, &zero).unwrap(), vec![0.0]);
    }

    #[test]
    fn u_hat_recovers_consistent_system() {
        let rows = vec![vec![10, 200], vec![30, 100], vec![5, 400], vec![50, 60]];
        let pop = PopulationTable::from_matrix(&rows).unwrap();
        // Chosen so every m_i = E_i · u is an exact integer.
        let u = [0.4, 0.05];
        let m: Vec<u64> = rows
            .iter()
            .map(|r| (r[0] as f64 * u[0] + r[1] as f64 * u[1]).round() as u64)
            .collect();
        let got = estimate_u(&pop, &m).unwrap();
        assert!((got[0] - u[0]).abs() < 1e-10 && (got[1] - u[1]).abs() < 1e-10);
        let proj = projection_u1(&pop, &m).unwrap();
        assert!((proj - got[0]).abs() < 1e-10);
    }

    #[test]
    fn u_hat_rank_deficient() {
        let pop = PopulationTable::from_matrix(&[vec![1, 2], vec![2, 4], vec![3, 6]]).unwrap();
        match estimate_u(&pop, &[1, 2, 3]) {
            Err(Error::Identifiability { rank, .. }) => assert_eq!(rank, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn no_missing_means_p_hat_one() {
        let pop = PopulationTable::from_matrix(&[vec![10, 20], vec![30, 5]]).unwrap();
        let cases = CaseTable::from_matrix(&[vec![1, 2], vec![3, 1]], &[0, 0]).unwrap();
        let est = estimate_lambda(&pop, &cases).unwrap();
        for j in 0..2 {
            assert!((est.lambda_hat[j] - est.v_hat[j]).abs() < 1e-12);
            assert!((est.p_hat[j] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fisher_scalar_blocks() {
        let pop = PopulationTable::from_matrix(&[vec![10], vec![30]]).unwrap();
        let info = fisher_info_simple(&pop, &[0.5], &[0.2]).unwrap();
        assert!((info[(0, 0)] - 40.0 / 0.2).abs() < 1e-12);
        // Σ_i E_i² / (E_i u) = Σ_i E_i / u.
        assert!((info[(1, 1)] - 40.0 / 0.5).abs() < 1e-12);
        assert_eq!(info[(0, 1)], 0.0);
    }

    #[test]
    fn fisher_zero_row_is_domain_error() {
        let pop = PopulationTable::from_matrix(&[vec![0, 0], vec![3, 1], vec![1, 3]]).unwrap();
        assert!(matches!(
            fisher_info_simple(&pop, &[0.1, 0.1], &[0.1, 0.1]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn far_tail_moments_match_high_precision() {
        // 50-digit references at z = -185.66523062240697 (unit scale).
        let z = -185.66523062240697;
        let (m1, v1) = modified_half_normal_moments(z, 1.0, 1);
        assert!((m1 / 0.005_385_725_621_590_006 - 1.0).abs() < 1e-14);
        assert!((v1 / 2.900_435_801_426_785e-5 - 1.0).abs() < 1e-14);
        assert!((beta_shift_statistic(z) / 0.999_970_997_744_715_2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tail_branch_is_continuous() {
        for beta in [1u8, 2] {
            let (a_m, a_v) = modified_half_normal_moments(-3.0 - 1e-12, 0.8, beta);
            let (b_m, b_v) = modified_half_normal_moments(-3.0, 0.8, beta);
            assert!((a_m / b_m - 1.0).abs() < 1e-11, "beta {beta}: {a_m} vs {b_m}");
            assert!((a_v / b_v - 1.0).abs() < 1e-11, "beta {beta}: {a_v} vs {b_v}");
        }
        let (a, b) = (beta_shift_statistic(-3.0 - 1e-12), beta_shift_statistic(-3.0));
        assert!((a / b - 1.0).abs() < 1e-11);
    }

    #[test]
    fn beta_two_moments_match_quadrature() {
        // Density u·φ(u/σ - z) on u > 0 integrated by the trapezoid rule.
        for &z in &[-3.0f64, -0.5, 0.0, 1.2] {
            let sigma = 0.7;
            let n = 200_000;
            let hi = sigma * (z.max(0.0) + 12.0);
            let dx = hi / n as f64;
            let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for k in 0..=n {
                let u = k as f64 * dx;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                let dens = u * std_normal_pdf(u / sigma - z) * w;
                m0 += dens;
                m1 += dens * u;
                m2 += dens * u * u;
            }
            let mean = m1 / m0;
            let var = m2 / m0 - mean * mean;
            let (cm, cv) = modified_half_normal_moments(z, sigma, 2);
            assert!((cm - mean).abs() < 1e-6 * mean.max(1e-3), "z={z}: {cm} vs {mean}");
            assert!((cv - var).abs() < 1e-5 * var.max(1e-3), "z={z}: {cv} vs {var}");
        }
    }

    #[test]
    fn global_id_flags() {
        let dup = PopulationTable::from_matrix(&[vec![1, 1], vec![2, 2], vec![5, 5]]).unwrap();
        let r = check_global_id(&dup, &[0.1, 0.1], &[0.5, 0.5]).unwrap();
        assert!(!r.identifiable);
        assert!(!r.get("E.a").unwrap().passed);
        let ok = PopulationTable::from_matrix(&[vec![1, 3], vec![2, 2], vec![5, 1]]).unwrap();
        let r = check_global_id(&ok, &[0.1, 0.1], &[1.0, 0.5]).unwrap();
        assert!(!r.get("E.c").unwrap().passed && r.get("E.a").unwrap().passed);
        assert!(!r.identifiable);
    }

    #[test]
    fn local_id_only_stacked_rank_fails() {
        let pop = PopulationTable::from_matrix(&[vec![3], vec![5], vec![11]]).unwrap();
        let design = DesignMatrices::with_z(DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]), 1).unwrap();
        let p = DMatrix::from_element(3, 1, 0.7);
        let r = check_local_id(&pop, &design, &[0.1], &p, &[0.2]).unwrap();
        for c in &r.conditions {
            assert_eq!(c.passed, c.code != "S.g", "{}", c.code);
        }
        assert_eq!(r.get("S.g").unwrap().rank, Some(2));
        assert!(!r.identifiable);
    }

    #[test]
    fn local_id_dimension_condition() {
        let pop = PopulationTable::from_matrix(&[vec![3, 1], vec![5, 9]]).unwrap();
        let design = DesignMatrices::with_z(DMatrix::from_column_slice(2, 1, &[1.0, -1.0]), 1).unwrap();
        let p = DMatrix::from_element(2, 2, 0.7);
        let r = check_local_id(&pop, &design, &[0.1, 0.2], &p, &[0.0]).unwrap();
        assert!(!r.get("S.c").unwrap().passed);
    }
}
