use std::path::Path;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    format!("{}/corpus/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy-spectral"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("HS_THREADS", "1")
        .output()
        .expect("binary runs")
}

#[test]
fn delta_on_interval_writes_three_interior_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["delta", "--config", &corpus("interval"), "--h", "0.25"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("delta.csv")).unwrap();
    let inside: Vec<&str> = csv.lines().filter(|l| l.ends_with(",inside")).collect();
    assert_eq!(inside, ["0.25,0.25,inside", "0.5,0.5,inside", "0.75,0.25,inside"]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("delta.json")).unwrap()).unwrap();
    assert_eq!(doc["seed"], 0);
    assert_eq!(doc["result"]["interior"], 3);
}

#[test]
fn missing_dim_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"tree": {"box": [[0, 1]]}}"#).unwrap();
    let out = run(&["delta", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`dim`"));
}

#[test]
fn unparseable_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"dim\": 2,\n \"tree\": }").unwrap();
    let out = run(&["delta", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn empty_domain_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(
        &cfg,
        r#"{"dim": 2, "bbox": [[0, 3], [0, 1]],
            "tree": {"op": "intersection", "a": {"box": [[0, 1], [0, 1]]}, "b": {"box": [[2, 3], [0, 1]]}},
            "params": {"lambda": 50, "theta": 0.5}}"#,
    )
    .unwrap();
    let out = run(&["report", "--config", cfg.to_str().unwrap(), "--h", "0.125"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_task_parameter_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["rozenblum", "--config", &corpus("square"), "--theta", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.lambda"));
}

#[test]
fn unknown_param_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.json");
    std::fs::write(&cfg, r#"{"dim": 1, "tree": {"box": [[0, 1]]}, "params": {"lamda": 3}}"#).unwrap();
    let out = run(&["count", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda"));
}

#[test]
fn lieb_sweep_on_square_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["lieb", "--config", &corpus("square"), "--samples", "20000", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("lieb.json")).unwrap()).unwrap();
    let reps = doc["result"]["reports"].as_array().unwrap();
    assert_eq!(reps.len(), 20);
    assert!(reps.iter().all(|r| r["pass"] == true && r["seed"] == 3));
    assert_eq!(doc["status"], "pass");
}

#[test]
fn spectrum_and_count_on_square() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["spectrum", "--config", &corpus("square"), "--k", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("index,eigenvalue\n1,19.7"));

    let lambda = (5.0 * std::f64::consts::PI.powi(2)).to_string();
    let out = run(&["count", "--config", &corpus("square"), "--lambda", &lambda], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("count.json")).unwrap()).unwrap();
    assert_eq!(doc["result"]["derived"]["count"], 3.0);
}

#[test]
fn rozenblum_writes_packing_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["rozenblum", "--config", &corpus("square"), "--h", "0.0078125", "--lambda", "200", "--theta", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("packing.csv")).unwrap();
    assert!(csv.starts_with("m,x1,x2,overlap,stderr\n"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rozenblum.json")).unwrap()).unwrap();
    assert_eq!(doc["result"]["packing"]["M"].as_u64().unwrap() as usize, csv.lines().count() - 1);
}
