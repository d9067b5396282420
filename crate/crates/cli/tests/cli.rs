use std::path::Path;
use std::process::{Command, Output};

fn metaedge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metaedge")).args(args).output().unwrap()
}

fn desk_instance(dir: &Path) -> String {
    let path = dir.join("desk.json");
    let out = metaedge(&["generate", "--desk", "2", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn exact_and_enumeration_agree_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let inst = desk_instance(dir.path());
    let exact = json(&metaedge(&["solve", "--method", "exact", "--mu", "1.0", "--instance", &inst]));
    let enumerated = json(&metaedge(&["solve", "--method", "enumerate", "--mu", "1.0", "--instance", &inst]));
    assert_eq!(exact["status"], "optimal");
    let (a, b) = (exact["objective"].as_f64().unwrap(), enumerated["objective"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-9);
    assert!(exact["metrics"]["latency_ms"].as_f64().unwrap() > 0.0);
    let brief = json(&metaedge(&["solve", "--instance", &inst, "--brief"]));
    assert_eq!(brief["method"], "heuristic");
    assert!(brief["assignment"].is_null());
}

#[test]
fn baseline_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let inst = desk_instance(dir.path());
    let v = json(&metaedge(&["baseline", "--scheme", "rands", "--instance", &inst]));
    assert_eq!(v["scheme"], "rands");
    assert!(v["metrics"]["objective"].is_number());
    let bad_rate = metaedge(&["baseline", "--scheme", "cfs", "--instance", &inst, "--fixed-rate-mbps", "3"]);
    assert_eq!(bad_rate.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(metaedge(&["solve", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(metaedge(&["solve", "--instance", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(metaedge(&["baseline", "--scheme", "best", "--instance", "x"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let inst = desk_instance(dir.path());
    assert_eq!(metaedge(&["solve", "--instance", &inst, "--mu", "2"]).status.code(), Some(2));
    let spec = dir.path().join("empty.json");
    std::fs::write(&spec, r#"{"experiment":"mu_sweep","values":[0.5],"seeds":[0],"schemes":[]}"#).unwrap();
    let out = dir.path().join("out");
    let run = metaedge(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn sweep_writes_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("fig3.json");
    std::fs::write(
        &spec,
        r#"{"experiment":"mu_sweep","values":[0.0,1.0],"seeds":[0,1],"schemes":["optim","cfs"],
            "params":{"n_ecs":3,"n_requests":5},"heuristic":{"restarts":1}}"#,
    )
    .unwrap();
    let out = dir.path().join("results");
    let run = metaedge(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for f in ["mu_sweep_rows.csv", "mu_sweep_agg.csv", "fig3_delay_vs_mu.dat", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn verify_passes() {
    let out = metaedge(&["verify", "--seeds", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn lp_export_writes_model_and_map() {
    let dir = tempfile::tempdir().unwrap();
    let inst = desk_instance(dir.path());
    let lp = dir.path().join("m.lp");
    let map = dir.path().join("m.json");
    let out = metaedge(&[
        "export-lp",
        "--instance",
        &inst,
        "--out",
        lp.to_str().unwrap(),
        "--var-map",
        map.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&lp).unwrap();
    assert!(text.contains("Minimize") && text.contains("Binary") && text.trim_end().ends_with("End"));
    let entries: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&map).unwrap()).unwrap();
    assert!(!entries.as_array().unwrap().is_empty());
}
