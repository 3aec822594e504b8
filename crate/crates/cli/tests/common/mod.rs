#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub const DEAD: &str = "http://127.0.0.1:1";

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

/// The binary with every network endpoint pointed at a closed local port.
pub fn hsbr() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hsbr"));
    for var in ["HTTP_PROXY", "HTTPS_PROXY", "ALL_PROXY", "http_proxy", "https_proxy", "all_proxy"] {
        c.env(var, DEAD);
    }
    c.env("HSBR_FORGE_API", DEAD)
        .env("HSBR_LLM_BASE_URL", DEAD)
        .env_remove("HSBR_LLM_API_KEY")
        .env_remove("HSBR_FORGE_TOKEN")
        .env_remove("GITHUB_TOKEN")
        .env_remove("HSBR_LOG");
    c
}

pub fn run(args: &[&str]) -> Output {
    hsbr().args(args).output().expect("spawn hsbr")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Last stderr line parsed as the structured error record.
pub fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no error line in {stderr}"));
    serde_json::from_str(line).expect("error line is JSON")
}

pub fn schema_errors(instance: &Value) -> Vec<String> {
    let schema: Value = serde_json::from_str(hsbr_core::report::REPORT_SCHEMA).expect("schema JSON");
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}

/// Runs calibrate + score over `corpus` into `out`; returns (calibrate, score) outputs.
pub fn calibrate_and_score(corpus: &Path, out: &Path, extra: &[&str]) -> (Output, Output) {
    let cal = out.join("calibration.json");
    let mut a = vec!["calibrate", "--corpus", path_str(corpus), "--out", path_str(&cal), "--semantic", "mock"];
    a.extend_from_slice(extra);
    let c = run(&a);
    let reports = out.join("reports");
    let mut b = vec![
        "score", "--corpus", path_str(corpus), "--calibration", path_str(&cal),
        "--out", path_str(&reports), "--semantic", "mock", "--markdown",
    ];
    b.extend_from_slice(extra);
    let s = run(&b);
    (c, s)
}

pub fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).expect("json")
}
