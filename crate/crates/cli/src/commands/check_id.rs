use anyhow::{Context, Result};
use missrate_core::estimators::{check_global_id, check_local_id, estimate_lambda};
use missrate_core::io::load_cases_csv;
use missrate_core::{DesignMatrices, IdentifiabilityReport};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::args::CheckIdArgs;
use crate::inputs;
use crate::output::OutputDir;

// Interior parameter point used when no cases are supplied; the parameter
// domain conditions then pass and the verdict reflects the table alone.
const NOMINAL_RATE: f64 = 0.01;
const NOMINAL_OBSERVED: f64 = 0.5;

#[derive(Debug, Serialize)]
struct ScopedReport {
    scope: String,
    report: IdentifiabilityReport,
}

#[derive(Debug, Serialize)]
struct IdFile {
    identifiable: bool,
    parameter_point: String,
    reports: Vec<ScopedReport>,
}

fn print_report(r: &ScopedReport) {
    println!("{} ({}): identifiable = {}", r.scope, r.report.kind, r.report.identifiable);
    for c in r.report.conditions.iter().chain(&r.report.supplementary) {
        let rank = match (c.rank, c.required) {
            (Some(a), Some(b)) => format!(" [rank {a}, required {b}]"),
            _ => String::new(),
        };
        println!("  {:<5} {:<6} {}{rank}", c.code, if c.passed { "pass" } else { "FAIL" }, c.description);
    }
}

pub fn run(args: &CheckIdArgs) -> Result<()> {
    let pop = inputs::population(&args.pop)?;
    let d = pop.dims();
    let config = serde_json::json!({ "args": args, "labels": pop.labels() });
    let mut out = OutputDir::create(&args.out, "check-id", config, 0)?;

    let mut reports = Vec::new();
    let point;
    match &args.design {
        None => {
            // The covariate-free model treats every stratum-geography pair
            // as a stratum.
            let flat = pop.flatten_geos();
            let (lambda, p) = match &args.cases {
                Some(path) => {
                    let cases = load_cases_csv(path, &pop)
                        .with_context(|| format!("reading cases {}", path.display()))?
                        .flatten_geos();
                    let est = estimate_lambda(&flat, &cases)?;
                    point = "closed-form estimates".to_string();
                    (est.lambda_hat, est.p_hat)
                }
                None => {
                    point = "nominal".to_string();
                    (vec![NOMINAL_RATE; d.categories], vec![NOMINAL_OBSERVED; d.categories])
                }
            };
            reports.push(ScopedReport {
                scope: "all geographies".into(),
                report: check_global_id(&flat, &lambda, &p)?,
            });
        }
        Some(path) => {
            let design = inputs::design(&pop, Some(path))?;
            point = "nominal".to_string();
            let all: Vec<usize> = (0..d.categories).collect();
            for (g, name) in pop.labels().geos.iter().enumerate() {
                let sub = pop.select(&[g], &all)?;
                let local = DesignMatrices::with_z(design.z.clone(), 1)?;
                let p = DMatrix::from_element(d.strata, d.categories, NOMINAL_OBSERVED);
                let report = check_local_id(&sub, &local, &vec![NOMINAL_RATE; d.categories], &p, &vec![0.0; design.k()])?;
                reports.push(ScopedReport {
                    scope: format!("geo {name}"),
                    report,
                });
            }
        }
    }
    reports.iter().for_each(print_report);
    let file = IdFile {
        identifiable: reports.iter().all(|r| r.report.identifiable),
        parameter_point: point,
        reports,
    };
    println!("verdict: {}", if file.identifiable { "identifiable" } else { "not identifiable" });
    out.write_json("identifiability.json", &file)?;
    out.finish()
}
