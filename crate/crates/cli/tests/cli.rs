use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fkbridge::run::RunDocument;
use tempfile::TempDir;

const H3: &str = r#"{"geometry": {"kind": "hyperbolic", "n": 3, "R": 1.0}, "endpoints": {"r0": 1.0}, "T": 1.0,
    "n_paths": 300, "grid": {"steps": 64}}"#;

fn fkbridge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkbridge")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn kernel_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "h3.json", H3);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = fkbridge(&["estimate-kernel", "--config", &config, "--seed", "42", "--output", path_str(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let doc: RunDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(doc.config.seed, 42);
    let reference = doc.result.reference.as_ref().unwrap();
    assert!((doc.result.estimate[0] / reference.value[0] - 1.0).abs() < 1e-10);
}

#[test]
fn worker_count_does_not_change_estimates() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "h3.json",
        &H3.replace(
            "\"T\": 1.0",
            "\"T\": 1.0, \"potential\": {\"kind\": \"gaussian_bump\", \"amplitude\": 0.3, \"width\": 1.0}",
        ),
    );
    let run = |workers: &str| {
        let o = fkbridge(&["estimate-log-gradient", "--config", &config, "--workers", workers]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    assert_eq!(run("1"), run("8"));
}

#[test]
fn gradient_at_the_pole_exits_with_precondition_code() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "pole.json", &H3.replace("\"r0\": 1.0", "\"r0\": 0.0"));
    let o = fkbridge(&["estimate-gradient", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("r0 > 0"));
}

#[test]
fn invalid_config_lists_violations() {
    let dir = TempDir::new().unwrap();
    let config =
        write(&dir, "bad.json", &H3.replace("\"steps\": 64", "\"steps\": 1").replace("\"R\": 1.0", "\"R\": -1.0"));
    let o = fkbridge(&["estimate-kernel", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid.steps ≥ 2") && err.contains("geometry.R"), "{err}");
    let syntax = write(&dir, "syntax.json", "{\n  \"geometry\": ,\n}");
    let o = fkbridge(&["estimate-kernel", "--config", &syntax]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn reference_and_path_tables() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "h3.json", H3);
    let o = fkbridge(&["reference", "--config", &config, "--points", "5"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,t,kernel,d_r,d_log_r");
    assert_eq!(lines.len(), 6);
    let o = fkbridge(&["sample-paths", "--config", &config, "--paths", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 65);
    let last = text.lines().last().unwrap();
    assert!(last.ends_with(",0"), "{last}");
}

#[test]
fn audit_emits_bound_reports() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "h3.json", H3);
    let o = fkbridge(&["audit-bounds", "--config", &config]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reports: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["satisfied"] == true));
}

#[test]
fn reference_requires_a_known_geometry() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "h4.json", &H3.replace("\"n\": 3", "\"n\": 4"));
    let o = fkbridge(&["reference", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
}
