use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn missrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_missrate"))
        .args(args)
        .env("MISSRATE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate",
        "--scenario",
        "0.9",
        "--geos",
        "2",
        "--categories",
        "Black,Other,White",
        "--replicates",
        "2",
        "--seed",
        "7",
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    missrate(&args)
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&simulate(&a, &[])), 0);
    assert_eq!(code(&simulate(&b, &[])), 0);
    let files = files_under(&a);
    assert_eq!(files, files_under(&b));
    assert!(files.len() >= 8, "{files:?}");
    for f in &files {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        if f == Path::new("manifest.json") {
            // Only the elapsed time may differ.
            let strip = |v: &[u8]| {
                let mut m: serde_json::Value = serde_json::from_slice(v).unwrap();
                m.as_object_mut().unwrap().remove("elapsed_seconds");
                m
            };
            assert_eq!(strip(&x), strip(&y));
        } else {
            assert_eq!(x, y, "{} differs", f.display());
        }
    }
}

#[test]
fn different_seeds_give_different_cases() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    simulate(&a, &[]);
    missrate(&[
        "simulate", "--scenario", "0.9", "--geos", "2", "--categories", "Black,Other,White", "--seed", "8",
        "--out", s(&b),
    ]);
    let read = |d: &Path| std::fs::read(d.join("rep-001/cases.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn rank_deficient_table_is_reported_not_identifiable() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.csv");
    // The second category is twice the first in every stratum.
    std::fs::write(&pop, "stratum,geo,category,count\na,g,x,10\na,g,y,20\nb,g,x,5\nb,g,y,10\n").unwrap();
    let out = dir.path().join("id");
    let o = missrate(&["check-id", "--pop", s(&pop), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("identifiability.json")).unwrap()).unwrap();
    assert_eq!(report["identifiable"], false);
    let conditions = report["reports"][0]["report"]["conditions"].as_array().unwrap();
    let ea = conditions.iter().find(|c| c["code"] == "E.a").unwrap();
    assert_eq!((ea["passed"].as_bool(), ea["rank"].as_u64()), (Some(false), Some(1)));
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn full_rank_table_is_identifiable() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.csv");
    std::fs::write(&pop, "stratum,geo,category,count\na,g,x,10\na,g,y,20\nb,g,x,15\nb,g,y,10\n").unwrap();
    let out = dir.path().join("id");
    assert_eq!(code(&missrate(&["check-id", "--pop", s(&pop), "--out", s(&out)])), 0);
    let text = std::fs::read_to_string(out.join("identifiability.json")).unwrap();
    assert!(text.contains("\"identifiable\": true"));
}

#[test]
fn simulate_fit_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study");
    assert_eq!(code(&simulate(&study, &[])), 0);
    let pop = study.join("population.csv");
    for rep in ["rep-001", "rep-002"] {
        let o = missrate(&[
            "fit",
            "--pop",
            s(&pop),
            "--cases",
            s(&study.join(rep).join("cases.csv")),
            "--method",
            "joint",
            "--chains",
            "2",
            "--warmup",
            "100",
            "--draws",
            "100",
            "--out",
            s(&study.join(rep).join("fit-joint")),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        for f in ["draws.csv", "diagnostics.json", "estimands.json", "estimands.txt", "manifest.json"] {
            assert!(study.join(rep).join("fit-joint").join(f).is_file(), "{rep}: {f}");
        }
    }
    let o = missrate(&["report", s(&study)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(study.join("report/metrics.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"coverage50") && header.contains(&"coverage80"));
    let rows: Vec<&str> = csv.lines().filter(|l| l.contains(",I[Black],joint,2,")).collect();
    assert_eq!(rows.len(), 1, "{csv}");
    // The simulate manifest is left in place.
    let manifest = std::fs::read_to_string(study.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"simulate\""));
}

#[test]
fn report_without_fits_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study");
    simulate(&study, &[]);
    assert_eq!(code(&missrate(&["report", s(&study)])), 1);
}

#[test]
fn estimate_writes_closed_form_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.csv");
    let cases = dir.path().join("cases.csv");
    std::fs::write(
        &pop,
        "stratum,geo,category,count\na,g,x,1000\na,g,y,9000\nb,g,x,3000\nb,g,y,7000\nc,g,x,500\nc,g,y,9500\n",
    )
    .unwrap();
    std::fs::write(
        &cases,
        "stratum,geo,category,count\na,g,x,8\na,g,y,60\na,g,__MISSING__,12\nb,g,x,20\nb,g,y,50\nb,g,__MISSING__,15\nc,g,x,3\nc,g,y,70\nc,g,__MISSING__,10\n",
    )
    .unwrap();
    let out = dir.path().join("est");
    let o = missrate(&["estimate", "--pop", s(&pop), "--cases", s(&cases), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("estimates.json")).unwrap()).unwrap();
    assert_eq!(v["estimates"]["lambda_hat"].as_array().unwrap().len(), 2);
    assert_eq!(v["sweep"].as_array().unwrap().len(), 12);
}

#[test]
fn check_suites_pass() {
    let o = missrate(&["check", "--replicates", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(String::from_utf8_lossy(&o.stdout).matches("PASS").count(), 3);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&missrate(&["simulate", "--bogus"])), 64);
    assert_eq!(code(&missrate(&["nonsense"])), 64);
    assert_eq!(code(&missrate(&[])), 64);
    assert_eq!(code(&missrate(&["--help"])), 0);
}

#[test]
fn malformed_input_exits_1_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.csv");
    std::fs::write(&pop, "stratum,geo,category,count\na,g,x,10\na,g,x,20\n").unwrap();
    let o = missrate(&["check-id", "--pop", s(&pop), "--out", s(&dir.path().join("id"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_file_is_a_runtime_failure() {
    let o = missrate(&["check-id", "--pop", "/nonexistent/pop.csv", "--out", "/tmp/unused-missrate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_thread_setting_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_missrate"))
        .args(["check", "--replicates", "1"])
        .env("MISSRATE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}
