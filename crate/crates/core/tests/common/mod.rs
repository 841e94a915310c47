#![allow(dead_code)]

pub mod random;

use std::path::{Path, PathBuf};

use tallynet::secauth::SignedReport;
use tallynet::simnet::{build_scenario, run, EventTrace, ScenarioConfig};

/// Scenarios whose traces are pinned under `tests/goldens`.
pub const GOLDEN_SCENARIOS: [&str; 4] = ["swiss_no_attack", "rtvg_tamper", "polarized_delay", "signed_swiss"];

pub fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

pub fn scenario_path(name: &str) -> PathBuf {
    crate_dir().join("scenarios").join(format!("{name}.toml"))
}

pub fn golden_path(file: &str) -> PathBuf {
    crate_dir().join("tests").join("goldens").join(file)
}

pub fn data_path(file: &str) -> PathBuf {
    crate_dir().join("data").join(file)
}

pub fn load_scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_file(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn run_scenario(name: &str) -> (ScenarioConfig, EventTrace) {
    let cfg = load_scenario(name);
    let trace = run(build_scenario(cfg.clone()).unwrap_or_else(|e| panic!("{name}: {e}")));
    (cfg, trace)
}

/// Signed reports separated by `---` lines.
pub fn reports_to_text(reports: &[SignedReport]) -> String {
    reports.iter().map(|r| format!("{}---\n", r.to_text().expect("encodable"))).collect()
}

pub fn split_reports(text: &str) -> Vec<&str> {
    text.split("---\n").filter(|b| !b.is_empty()).collect()
}

pub fn reports_from_text(text: &str) -> Vec<SignedReport> {
    split_reports(text).into_iter().map(|b| SignedReport::from_text(b).expect("golden report parses")).collect()
}

/// Compares against a golden file, rewriting it when `UPDATE_GOLDENS` is set.
pub fn check_golden(file: &str, actual: &str) {
    let path = golden_path(file);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDENS=1 to create)", path.display()));
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).map_or(0, |i| i + 1);
        panic!("{} differs from the golden near line {line}", path.display());
    }
}
