//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! with its measured runtime, and exits nonzero if any criterion fails.
//!
//! The desk-scale coverage study (criteria 8 and 9) is run once and shared.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use missrate_core::estimators::{
    approx_posterior_lambda1, beta_shift_statistic, check_global_id, check_local_id, estimate_lambda,
    fisher_info_simple,
};
use missrate_core::inference::summarize;
use missrate_core::marginal::{binomial_miss_lpmf, binomial_oracle_lpmf, marginal_oracle_lpmf, CellInstance};
use missrate_core::model::log_lik_simple;
use missrate_core::rng::{poisson, stream_rng};
use missrate_core::study::{
    downscale, evaluate_replicates, fit_complete_case, fit_joint, replicate_dataset, sex_age_design,
    wayne_census, Method, MetricsTable, MiSettings, ScenarioSpec, StudyConfig,
};
use missrate_core::{
    sample_posterior, CaseTable, DesignMatrices, Diagnostics, Dims, Labels, LogDensity, ModelKind, Parameterization,
    PopulationTable, PosteriorTarget, PriorConfig, Result as CoreResult, SamplerConfig,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    stream_rng(20_240_601, stream)
}

// ---------------------------------------------------------------------------
// 1. Exact marginalisation of the missing allocation.

fn marginalization_matches_enumeration() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let ni = r.random_range(1..=3usize);
        let nj = r.random_range(1..=3usize);
        let rows: Vec<Vec<u64>> = (0..ni)
            .map(|_| (0..nj).map(|_| r.random_range(1..=30u64)).collect())
            .collect();
        let x: Vec<Vec<u64>> = (0..ni)
            .map(|_| (0..nj).map(|_| r.random_range(0..=5u64)).collect())
            .collect();
        let m: Vec<u64> = (0..ni).map(|_| r.random_range(0..=6u64)).collect();
        let lambda: Vec<f64> = (0..nj).map(|_| r.random_range(0.01..1.0)).collect();
        let p: Vec<f64> = (0..nj).map(|_| r.random_range(0.05..0.95)).collect();
        let pop = PopulationTable::from_matrix(&rows).unwrap();
        let cases = CaseTable::from_matrix(&x, &m).unwrap();
        let model = log_lik_simple(&pop, &cases, &lambda, &p).unwrap();
        let oracle: f64 = (0..ni)
            .map(|i| {
                let cell = CellInstance::new(rows[i].clone(), x[i].clone(), m[i]).unwrap();
                marginal_oracle_lpmf(&cell, &lambda, &p).unwrap()
            })
            .sum();
        worst = worst.max((model - oracle).abs());
    }
    check(worst < 1e-10, format!("max |closed form - enumeration| = {worst:.2e} (< 1e-10)"))
}

// ---------------------------------------------------------------------------
// 2. Binomial-thinning forward recursion.

fn recursion_matches_enumeration_and_normalises() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let nj = r.random_range(1..=4usize);
        let e: Vec<u64> = (0..nj).map(|_| r.random_range(0..=20u64)).collect();
        let y: Vec<u64> = e.iter().map(|&ej| r.random_range(0..=ej)).collect();
        let m = r.random_range(0..=6u64);
        let p: Vec<f64> = (0..nj).map(|_| r.random_range(0.05..0.95)).collect();
        let theta: Vec<f64> = (0..nj).map(|_| r.random_range(0.05..0.95)).collect();
        let dp = binomial_miss_lpmf(&y, m, &p, &theta, &e).unwrap();
        let or = binomial_oracle_lpmf(&y, m, &p, &theta, &e).unwrap();
        let diff = if dp == f64::NEG_INFINITY && or == f64::NEG_INFINITY {
            0.0
        } else {
            (dp - or).abs()
        };
        worst = worst.max(diff);
    }
    // Exhaustive sums over (x_1, x_2, m) for every E with entries ≤ 4.
    let mut worst_norm: f64 = 0.0;
    for e1 in 0..=4u64 {
        for e2 in 0..=4u64 {
            let e = [e1, e2];
            let p = [r.random_range(0.05..0.95), r.random_range(0.05..0.95)];
            let theta = [r.random_range(0.05..0.95), r.random_range(0.05..0.95)];
            let mut total = 0.0;
            for x1 in 0..=e1 {
                for x2 in 0..=e2 {
                    for m in 0..=(e1 + e2) {
                        total += binomial_miss_lpmf(&[x1, x2], m, &p, &theta, &e).unwrap().exp();
                    }
                }
            }
            worst_norm = worst_norm.max((total - 1.0).abs());
        }
    }
    check(
        worst < 1e-9 && worst_norm < 1e-9,
        format!("max |recursion - enumeration| = {worst:.2e}, max |total mass - 1| = {worst_norm:.2e} (< 1e-9)"),
    )
}

// ---------------------------------------------------------------------------
// 3. Unbiasedness of the moment estimators.

fn estimators_are_unbiased() -> Outcome {
    let rows = vec![
        vec![120, 900],
        vec![300, 650],
        vec![80, 1200],
        vec![450, 400],
        vec![200, 1000],
        vec![600, 300],
    ];
    let lambda = [0.04, 0.02];
    let p = [0.6, 0.85];
    let pop = PopulationTable::from_matrix(&rows).unwrap();
    let n = 20_000;
    let mut r = rng(3);
    // Running sums of (v̂, û, λ̂) per category and of their squares.
    let mut s = [[0.0f64; 2]; 3];
    let mut s2 = [[0.0f64; 2]; 3];
    for _ in 0..n {
        let x: Vec<Vec<u64>> = rows
            .iter()
            .map(|e| (0..2).map(|j| poisson(&mut r, p[j] * lambda[j] * e[j] as f64)).collect())
            .collect();
        let m: Vec<u64> = rows
            .iter()
            .map(|e| poisson(&mut r, (0..2).map(|j| (1.0 - p[j]) * lambda[j] * e[j] as f64).sum()))
            .collect();
        let est = estimate_lambda(&pop, &CaseTable::from_matrix(&x, &m).unwrap()).unwrap();
        for (q, v) in [&est.v_hat, &est.u_hat, &est.lambda_hat].into_iter().enumerate() {
            for j in 0..2 {
                s[q][j] += v[j];
                s2[q][j] += v[j] * v[j];
            }
        }
    }
    let truth = [
        [p[0] * lambda[0], p[1] * lambda[1]],
        [(1.0 - p[0]) * lambda[0], (1.0 - p[1]) * lambda[1]],
        lambda,
    ];
    let mut worst_z: f64 = 0.0;
    for q in 0..3 {
        for j in 0..2 {
            let mean = s[q][j] / n as f64;
            let var = (s2[q][j] - n as f64 * mean * mean) / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            worst_z = worst_z.max((mean - truth[q][j]).abs() / se);
        }
    }
    check(worst_z < 3.0, format!("max |mean - truth| / SE over v, u, lambda = {worst_z:.2} (< 3)"))
}

// ---------------------------------------------------------------------------
// 4. Sensitivity identities of the approximate minority posterior.

fn sensitivity_identities_hold() -> Outcome {
    let mut r = rng(4);
    let mut worst_deriv: f64 = 0.0;
    let mut worst_shift: f64 = 0.0;
    for _ in 0..20 {
        let ni = r.random_range(3..=8usize);
        let rows: Vec<Vec<u64>> = (0..ni)
            .map(|_| vec![r.random_range(20..=150u64), r.random_range(1_000..=5_000u64)])
            .collect();
        let x: Vec<Vec<u64>> = (0..ni)
            .map(|_| vec![r.random_range(0..=10u64), r.random_range(10..=100u64)])
            .collect();
        let m: Vec<u64> = (0..ni).map(|_| r.random_range(1..=60u64)).collect();
        let pop = PopulationTable::from_matrix(&rows).unwrap();
        let cases = CaseTable::from_matrix(&x, &m).unwrap();
        let u2 = r.random_range(0.002..0.02);
        let r1 = r.random_range(10.0..2_000.0);
        let alpha1 = r.random_range(0.5..5.0);

        let post = |rate: f64, beta1: u8| approx_posterior_lambda1(&pop, &cases, u2, rate, alpha1, beta1).unwrap();
        let h = 1e-4 * r1;
        let fd = (post(r1 + h, 1).mean - post(r1 - h, 1).mean) / (2.0 * h);
        let at = post(r1, 1);
        worst_deriv = worst_deriv.max((fd + at.variance).abs() / at.variance);

        // Standardised shift of the posterior mean from β₁=1 to β₁=2, over the
        // u₁ SD. The Gamma part of the mean does not depend on β₁, so the shift
        // is taken on the u₁ component to avoid cancelling against it.
        let shift = (post(r1, 2).u1_mean - at.u1_mean) / at.u1_variance.sqrt();
        worst_shift = worst_shift.max((shift - beta_shift_statistic(at.z)).abs());
    }
    check(
        worst_deriv < 1e-6 && worst_shift < 1e-8,
        format!(
            "max rel |dE/dr1 + Var| = {worst_deriv:.2e} (< 1e-6), max |shift - closed form| = {worst_shift:.2e} (< 1e-8)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. Identifiability checks.

fn min_eigenvalue_ratio(m: &DMatrix<f64>) -> f64 {
    let ev = m.clone().symmetric_eigen().eigenvalues;
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ev.iter().copied().fold(f64::INFINITY, f64::min) / max
}

fn identifiability_checks_agree_with_information() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // Rank-deficient population: second column is twice the first.
    let deficient = PopulationTable::from_matrix(&[vec![10, 20, 7], vec![15, 30, 2], vec![4, 8, 9], vec![6, 12, 1]])
        .unwrap();
    let global = check_global_id(&deficient, &[0.1, 0.1, 0.1], &[0.5, 0.5, 0.5]).unwrap();
    let z = DMatrix::from_fn(4, 1, |i, _| i as f64);
    let design = DesignMatrices::with_z(z, 1).unwrap();
    let p = DMatrix::from_element(4, 3, 0.5);
    let local = check_local_id(&deficient, &design, &[0.1, 0.1, 0.1], &p, &[0.2]).unwrap();
    let rank_caught = !global.get("E.a").unwrap().passed && !local.get("S.a").unwrap().passed;
    ok &= rank_caught && !global.identifiable && !local.identifiable;
    notes.push(format!("rank-deficient E flagged: {rank_caught}"));

    // An intercept-only Z makes diag(E_j) Z duplicate E_j, so only the
    // stacked-rank condition fails.
    let pop = PopulationTable::from_matrix(&[vec![10, 3], vec![4, 9], vec![7, 7], vec![2, 12], vec![11, 5]]).unwrap();
    let design = DesignMatrices::with_z(DMatrix::from_element(5, 1, 1.0), 1).unwrap();
    let p = DMatrix::from_element(5, 2, 0.6);
    let rep = check_local_id(&pop, &design, &[0.1, 0.2], &p, &[0.3]).unwrap();
    let failing: Vec<&str> = rep.conditions.iter().filter(|c| !c.passed).map(|c| c.code.as_str()).collect();
    ok &= failing == ["S.g"] && !rep.identifiable;
    notes.push(format!("intercept-only Z fails {failing:?}"));

    // Randomised agreement between the conditions and the Fisher information.
    let mut r = rng(5);
    let mut agree = 0;
    let mut n_id = 0;
    for _ in 0..200 {
        let nj = r.random_range(2..=3usize);
        let ni = r.random_range(nj..=nj + 3);
        let mut rows: Vec<Vec<u64>> = (0..ni)
            .map(|_| (0..nj).map(|_| r.random_range(1..=50u64)).collect())
            .collect();
        if r.random_bool(0.5) {
            // Make the last column an integer combination of the others.
            let coef: Vec<u64> = (0..nj - 1).map(|_| r.random_range(0..=2u64)).collect();
            let coef = if coef.iter().all(|&c| c == 0) { vec![1; nj - 1] } else { coef };
            for row in &mut rows {
                row[nj - 1] = (0..nj - 1).map(|k| coef[k] * row[k]).sum();
            }
        }
        let pop = PopulationTable::from_matrix(&rows).unwrap();
        let lambda: Vec<f64> = (0..nj).map(|_| r.random_range(0.01..0.5)).collect();
        let pj: Vec<f64> = (0..nj).map(|_| r.random_range(0.1..0.9)).collect();
        let v: Vec<f64> = lambda.iter().zip(&pj).map(|(l, q)| l * q).collect();
        let u: Vec<f64> = lambda.iter().zip(&pj).map(|(l, q)| l * (1.0 - q)).collect();
        let info = fisher_info_simple(&pop, &u, &v).unwrap();
        let pd = min_eigenvalue_ratio(&info) > 1e-10;
        let id = check_global_id(&pop, &lambda, &pj).unwrap().identifiable;
        n_id += id as usize;
        agree += (pd == id) as usize;
    }
    ok &= agree == 200;
    notes.push(format!("Fisher PD agrees with conditions on {agree}/200 ({n_id} identifiable)"));
    check(ok, notes.join("; "))
}

// ---------------------------------------------------------------------------
// 6. Gradient of the log posterior.

fn gradient_matches_finite_differences() -> Outcome {
    let full = wayne_census();
    let pop = downscale(&full, 2, &["Black", "Other", "White"], 6).unwrap();
    let sex_age = sex_age_design(&pop).unwrap();
    let z = sex_age.z.columns(0, 3).into_owned();
    let design = DesignMatrices::with_z(z, 2).unwrap();
    let spec = ScenarioSpec {
        name: "gradient".into(),
        replicates: 1,
        seed: 6,
        alpha_lambda: vec![-4.0; 3],
        alpha_beta: vec![0.1, -1.0, -0.5],
        alpha_gamma: vec![0.0, -0.3, -0.3],
        observation: missrate_core::study::ObservationLevels::Fixed(vec![1.0, 0.5, 2.0]),
        sigma: [0.5, 0.3, 0.5, 0.3],
    };
    let data = replicate_dataset(&pop, &design, &spec, 0).unwrap();
    let prior = PriorConfig::simulation(3, 3);
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for param in [Parameterization::CENTERED, Parameterization::OBSERVATION_NON_CENTERED] {
        let target = PosteriorTarget::new(&pop, &data.cases, &design, &prior, ModelKind::Joint)
            .unwrap()
            .with_parameterization(param);
        let layout = target.layout().clone();
        for _ in 0..5 {
            // Centered point near the generating values, then mapped to the
            // target's coordinates.
            let mut truth = layout.pack(&data.params, &data.hyper);
            for t in &mut truth {
                *t += r.random_range(-0.3..0.3);
            }
            let theta = target.from_centered(&truth);
            let mut grad = vec![0.0; layout.dim()];
            target.log_density_grad(&theta, &mut grad).unwrap();
            for k in 0..layout.dim() {
                let h = 1e-5 * theta[k].abs().max(1.0);
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[k] += h;
                tm[k] -= h;
                let fd = (target.log_density(&tp).unwrap() - target.log_density(&tm).unwrap()) / (2.0 * h);
                worst = worst.max((fd - grad[k]).abs() / grad[k].abs().max(1.0));
            }
        }
    }
    check(
        worst < 1e-5,
        format!("max |fd - analytic| / max(|analytic|, 1) = {worst:.2e} over 2 parameterizations x 5 points (< 1e-5)"),
    )
}

// ---------------------------------------------------------------------------
// 7. Sampler calibration on a conjugate Poisson-Gamma target.

/// Posterior of `log λ` for `y_i ~ Poisson(λ)`, `λ ~ Gamma(a, b)`:
/// `Gamma(a + Σy, b + n)` on `λ`, written with the log Jacobian.
struct PoissonGamma {
    shape: f64,
    rate: f64,
}

impl LogDensity for PoissonGamma {
    fn dim(&self) -> usize {
        1
    }

    fn log_density_grad(&self, position: &[f64], grad: &mut [f64]) -> CoreResult<f64> {
        let t = position[0];
        let l = t.exp();
        grad[0] = self.shape - self.rate * l;
        Ok(self.shape * t - self.rate * l)
    }
}

fn sampler_is_calibrated() -> Outcome {
    let y = [3u64, 7, 2, 5, 4, 6, 1, 4];
    let target = PoissonGamma {
        shape: 2.0 + y.iter().sum::<u64>() as f64,
        rate: 0.5 + y.len() as f64,
    };
    let exact_mean = target.shape / target.rate;
    let config = SamplerConfig {
        chains: 4,
        warmup: 1_000,
        draws: 1_000,
        seed: 7,
        ..Default::default()
    };
    let draws = sample_posterior(&target, &config, vec!["log_lambda".into()]).unwrap();
    let lambda = draws.map_draws(vec!["lambda".into()], |t| Ok(vec![t[0].exp()])).unwrap();
    let row = &summarize(&lambda, &[0.5])[0];
    let z = (row.mean - exact_mean).abs() / row.mcse_mean;

    let long = SamplerConfig {
        draws: 12_500,
        seed: 8,
        ..config
    };
    let draws = sample_posterior(&target, &long, vec!["log_lambda".into()]).unwrap();
    let mut v: Vec<f64> = draws.param_pooled(0).iter().map(|t| t.exp()).collect();
    v.sort_by(f64::total_cmp);
    let dist = Gamma::new(target.shape, target.rate).unwrap();
    let n = v.len() as f64;
    let ks = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    check(
        z < 3.0 && row.rhat < 1.01 && ks < 0.02,
        format!(
            "|mean - exact| / MCSE = {z:.2} (< 3), R-hat = {:.4} (< 1.01), KS at {} draws = {ks:.4} (< 0.02)",
            row.rhat,
            v.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 8 and 9. Desk-scale coverage study.

const STUDY_CATEGORIES: [&str; 3] = ["Black", "Other", "White"];

fn desk_study() -> &'static (MetricsTable, f64) {
    static STUDY: OnceLock<(MetricsTable, f64)> = OnceLock::new();
    STUDY.get_or_init(|| {
        let start = Instant::now();
        let full = wayne_census();
        let pop = downscale(&full, 4, &STUDY_CATEGORIES, 2024).unwrap();
        let design = sex_age_design(&pop).unwrap();
        let spec = ScenarioSpec::reference(0.9, &pop, &design, 50, 90).unwrap();
        let config = StudyConfig {
            sampler: SamplerConfig::default(),
            prior: PriorConfig::simulation(3, design.k()),
            methods: vec![Method::Joint, Method::CompleteCase, Method::MiGibbs],
            mi: MiSettings::default(),
        };
        let (table, reps) = evaluate_replicates(&spec, &config, &pop, &design).unwrap();
        eprintln!("{}", table.to_text());
        for rep in &reps {
            for mr in &rep.methods {
                if let Some(err) = &mr.error {
                    eprintln!("replicate {} {}: fit failed: {err}", rep.replicate, mr.method.name());
                }
            }
        }
        (table, start.elapsed().as_secs_f64())
    })
}

fn coverage_separates_joint_from_complete_case() -> Outcome {
    let (table, secs) = desk_study();
    let mut ok = true;
    let mut notes = Vec::new();
    for cat in ["Black", "White"] {
        let est = format!("I[{cat}]");
        let joint = table.get(&est, Method::Joint).ok_or("missing joint row")?;
        let cc = table.get(&est, Method::CompleteCase).ok_or("missing complete-case row")?;
        ok &= (0.32..=0.68).contains(&joint.coverage50) && cc.coverage50 <= 0.10;
        notes.push(format!(
            "{est}: joint {:.2} (in [0.32, 0.68]), complete case {:.2} (<= 0.10)",
            joint.coverage50, cc.coverage50
        ));
    }
    notes.push(format!("study wall time {:.0} s", secs));
    check(ok, notes.join("; "))
}

fn gibbs_imputation_is_biased() -> Outcome {
    let (table, _) = desk_study();
    let row = table.get("RR[Other]", Method::MiGibbs).ok_or("missing Gibbs MI row")?;
    let t = row.bias_t();
    check(
        t.abs() > 3.0,
        format!(
            "Gibbs MI bias of RR[Other] = {:.4} (SE {:.4}, t = {t:.2}, need |t| > 3)",
            row.bias, row.bias_se
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. With nothing missing the joint and complete-case disease blocks agree.

fn no_missingness_fits_agree() -> Outcome {
    let rows = [
        [4_000u64, 9_000],
        [6_000, 5_000],
        [2_500, 12_000],
        [7_000, 3_000],
        [3_000, 8_000],
        [5_000, 6_000],
    ];
    // Two geographies sharing the same population table.
    let dims = Dims::new(6, 2, 2);
    let mut counts = vec![0; dims.n_cells()];
    for g in 0..2 {
        for (i, row) in rows.iter().enumerate() {
            for j in 0..2 {
                counts[dims.cell(i, g, j)] = row[j];
            }
        }
    }
    let pop = PopulationTable::new(Labels::numbered(dims), counts).unwrap();
    let z = DMatrix::from_fn(6, 1, |i, _| i as f64 / 5.0 - 0.5);
    let design = DesignMatrices::with_z(z, 2).unwrap();
    let mut r = rng(10);
    let d = pop.dims();
    let mut cases = CaseTable::zeros(d);
    for g in 0..2 {
        for i in 0..6 {
            for j in 0..2 {
                let rate = [0.02, 0.012][j] * (0.4 * (i as f64 / 5.0 - 0.5) + 0.1 * g as f64).exp();
                cases.set_x(i, g, j, poisson(&mut r, rate * pop.get(i, g, j) as f64));
            }
        }
    }
    let prior = PriorConfig::simulation(2, 1);
    let config = SamplerConfig {
        seed: 10,
        ..Default::default()
    };
    let joint = fit_joint(&pop, &cases, &design, &prior, &config).unwrap();
    let cc = fit_complete_case(&pop, &cases, &design, &prior, &config).unwrap();
    let sj = summarize(&joint, &[0.5]);
    let sc = summarize(&cc, &[0.5]);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for row in &sc {
        let other = sj.iter().find(|s| s.name == row.name).ok_or(format!("{} missing", row.name))?;
        let se = (row.mcse_mean.powi(2) + other.mcse_mean.powi(2)).sqrt();
        worst = worst.max((row.mean - other.mean).abs() / se);
        compared += 1;
    }
    let divergences = Diagnostics::compute(&joint).divergences + Diagnostics::compute(&cc).divergences;
    check(
        worst < 3.0,
        format!(
            "max |joint - complete case| / combined MCSE over {compared} disease-block parameters = {worst:.2} (< 3); {divergences} divergences"
        ),
    )
}

// ---------------------------------------------------------------------------

struct Criterion {
    number: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            number: 1,
            name: "marginalized likelihood equals enumeration",
            limit: Some(Duration::from_secs(10)),
            run: marginalization_matches_enumeration,
        },
        Criterion {
            number: 2,
            name: "binomial recursion equals enumeration and normalises",
            limit: Some(Duration::from_secs(30)),
            run: recursion_matches_enumeration_and_normalises,
        },
        Criterion {
            number: 3,
            name: "moment estimators unbiased",
            limit: Some(Duration::from_secs(60)),
            run: estimators_are_unbiased,
        },
        Criterion {
            number: 4,
            name: "sensitivity identities",
            limit: Some(Duration::from_secs(1)),
            run: sensitivity_identities_hold,
        },
        Criterion {
            number: 5,
            name: "identifiability checks",
            limit: Some(Duration::from_secs(30)),
            run: identifiability_checks_agree_with_information,
        },
        Criterion {
            number: 6,
            name: "log posterior gradient",
            limit: Some(Duration::from_secs(10)),
            run: gradient_matches_finite_differences,
        },
        Criterion {
            number: 7,
            name: "sampler calibration",
            limit: Some(Duration::from_secs(60)),
            run: sampler_is_calibrated,
        },
        Criterion {
            number: 8,
            name: "desk-scale interval coverage",
            // The stated budget is 2 hours on 8 cores; reported, not gated.
            limit: None,
            run: coverage_separates_joint_from_complete_case,
        },
        Criterion {
            number: 9,
            name: "Gibbs MI relative-risk bias",
            limit: None,
            run: gibbs_imputation_is_biased,
        },
        Criterion {
            number: 10,
            name: "no-missingness equivalence",
            limit: Some(Duration::from_secs(300)),
            run: no_missingness_fits_agree,
        },
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failures = 0;
    let mut lines = Vec::new();
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f.parse() == Ok(c.number)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let over = c.limit.is_some_and(|l| elapsed > l);
        let (pass, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; runtime over limit")),
            Err(d) => (false, d),
        };
        failures += !pass as usize;
        let limit = c.limit.map_or(String::new(), |l| format!(" / {} s", l.as_secs()));
        let line = format!(
            "criterion {:>2} {} [{}] ({:.2} s{limit}): {detail}",
            c.number,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64()
        );
        println!("{line}");
        lines.push(line);
    }
    println!("\nacceptance summary");
    for l in &lines {
        println!("{l}");
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
