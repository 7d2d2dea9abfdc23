use std::path::Path;

use anyhow::{Context, Result};
use missrate_core::study::{MethodResult, MetricsTable, ReplicateResult, ScenarioSpec};

use super::simulate::TruthFile;
use crate::args::ReportArgs;
use crate::output::OutputDir;
use crate::ValidationFailed;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn sorted_dirs(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    v.sort();
    Ok(v)
}

/// Every replicate directory with a truth file, and the `estimands.json`
/// of every fit below it.
fn collect(study: &Path) -> Result<Vec<ReplicateResult>> {
    let mut reps = Vec::new();
    for dir in sorted_dirs(study)? {
        let truth_path = dir.join("truth.json");
        if !truth_path.is_file() {
            continue;
        }
        let truth: TruthFile = read_json(&truth_path)?;
        let mut methods = Vec::new();
        for fit in sorted_dirs(&dir)? {
            let est = fit.join("estimands.json");
            if est.is_file() {
                methods.push(read_json::<MethodResult>(&est)?);
            }
        }
        reps.push(ReplicateResult {
            replicate: truth.replicate,
            truth: truth.truth,
            observed_share: truth.observed_share,
            methods,
        });
    }
    Ok(reps)
}

pub fn run(args: &ReportArgs) -> Result<()> {
    let reps = collect(&args.study)?;
    let fitted = reps.iter().filter(|r| !r.methods.is_empty()).count();
    if fitted == 0 {
        return Err(ValidationFailed(format!("no fitted replicates under {}", args.study.display())).into());
    }
    let scenario_path = args.study.join("scenario.json");
    let name = if scenario_path.is_file() {
        read_json::<ScenarioSpec>(&scenario_path)?.name
    } else {
        args.study.display().to_string()
    };
    let table = MetricsTable::from_replicates(&name, &reps);
    let out_dir = args.out.clone().unwrap_or_else(|| args.study.join("report"));
    let config = serde_json::json!({ "args": args, "replicates": reps.len(), "fitted": fitted });
    let mut out = OutputDir::create(&out_dir, "report", config, 0)?;
    out.write_text("metrics.csv", &table.to_csv())?;
    out.write_json("metrics.json", &table)?;
    let text = table.to_text();
    out.write_text("metrics.txt", &text)?;
    print!("{text}");
    out.finish()
}
