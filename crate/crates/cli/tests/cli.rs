use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn idla(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idla"))
        .args(args)
        .env("IDLA_OUTPUT_DIR", dir)
        .env("IDLA_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn snapshot_hash(dir: &Path) -> String {
    manifest(dir)["details"]["snapshots"][0]["sha256"].as_str().unwrap().to_string()
}

#[test]
fn grow_appends_one_record_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["grow", "--process", "idla", "--d", "3", "--n", "20", "--seeds", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.starts_with("process,d,n,N,seed,delta_in,delta_out\n"));
    let jsonl = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 10);
    let m = manifest(dir.path());
    assert_eq!(m["config"]["d"], 3);
    assert_eq!(m["details"]["snapshots"].as_array().unwrap().len(), 10);
}

#[test]
fn waves_and_direct_snapshots_hash_equal() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, process) in [(&a, "flashing-waves"), (&b, "flashing-direct")] {
        let out = idla(dir.path(), &["grow", "--process", process, "--d", "3", "--n", "40", "--seed", "7"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(snapshot_hash(a.path()), snapshot_hash(b.path()));
}

#[test]
fn invalid_dimension_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["grow", "--d", "2", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d >= 3"));
    let out = idla(dir.path(), &["grow", "--h0", "3", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = idla(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"d": 4, "seed": 11, "h0": 12.0}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = idla(dir.path(), &["grow", "--config", cfg, "--seed", "5", "--explorers", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["config"]["d"], 4);
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["config"]["h0"], 12.0);
    std::fs::write(dir.path().join("bad.json"), r#"{"dimension": 3}"#).unwrap();
    let out = idla(dir.path(), &["grow", "--config", dir.path().join("bad.json").to_str().unwrap(), "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_coupling_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["verify", "--suite", "coupling", "--seeds", "50", "--n", "30"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("verify-coupling.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 50);
}

#[test]
fn verify_potential_has_identity_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["verify", "--suite", "potential", "--n", "12"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("verify-potential.json")).unwrap()).unwrap();
    let row = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "mean-value-full-boundary").unwrap();
    assert_eq!(row["pass"], true);
    assert!(row["value"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn verify_coupon_and_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["verify", "--suite", "coupon"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for l in ["L100", "L400", "L900"] {
        assert!(stdout.contains(&format!("PASS coupon-tail-{l}")), "{stdout}");
    }
    let out = idla(dir.path(), &["verify", "--suite", "geometry", "--n", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn fluct_resume_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["fluct", "--process", "idla", "--n", "4,5,6,8,10,13", "--seeds", "100", "--statistic", "max"];
    let first = idla(dir.path(), &args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    let (records, fit, summary) = (read("records.csv"), read("fit.json"), read("summary.csv"));
    let fit_json: Value = serde_json::from_slice(&fit).unwrap();
    assert!(fit_json["fit"]["ci_low"].is_number());

    let again = idla(dir.path(), &args);
    assert!(again.status.success());
    assert_eq!(read("records.csv"), records);
    assert_eq!(read("fit.json"), fit);
    assert_eq!(read("summary.csv"), summary);
    assert_eq!(manifest(dir.path())["details"]["resumed_records"], 600);
}

#[test]
fn fluct_resume_after_interruption() {
    let full = tempfile::tempdir().unwrap();
    let cut = tempfile::tempdir().unwrap();
    let args = ["fluct", "--process", "idla", "--n", "4,5,6,8,13", "--seeds", "100"];
    assert!(idla(full.path(), &args).status.success());
    // keep the header and 140 rows, then tear the next row in half
    let csv = std::fs::read_to_string(full.path().join("records.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    let mut partial = lines[..141].join("\n");
    partial.push('\n');
    partial.push_str(&lines[141][..10]);
    std::fs::write(cut.path().join("records.csv"), partial).unwrap();
    assert!(idla(cut.path(), &args).status.success());
    let sorted = |dir: &Path| {
        let text = std::fs::read_to_string(dir.join("records.csv")).unwrap();
        let mut rows: Vec<String> = text.lines().skip(1).filter(|l| l.split(',').count() == 7).map(String::from).collect();
        rows.sort();
        rows
    };
    assert_eq!(sorted(full.path()), sorted(cut.path()));
    assert_eq!(std::fs::read(full.path().join("fit.json")).unwrap(), std::fs::read(cut.path().join("fit.json")).unwrap());
}

#[test]
fn fluct_rejects_single_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["fluct", "--n", "30", "--seeds", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coupon_and_potential_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["coupon", "--l", "50,100", "--trials", "2000", "--hitting-h", "3", "--hitting-samples", "100000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Value = serde_json::from_slice(&std::fs::read(dir.path().join("coupon.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);

    let out = idla(dir.path(), &["potential-report", "--n", "8,10", "--green-max", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let constants: Value = serde_json::from_slice(&std::fs::read(dir.path().join("constants.json")).unwrap()).unwrap();
    assert_eq!(constants[0]["name"], "K_a");
    assert_eq!(constants[0]["scales"].as_array().unwrap().len(), 2);
    let green = std::fs::read_to_string(dir.path().join("green.csv")).unwrap();
    assert!(green.lines().count() > 5);
    let m = manifest(dir.path());
    let arts = m["artifacts"].as_array().unwrap();
    assert!(arts.iter().all(|a| a["sha256"].as_str().unwrap().len() == 64));
}
