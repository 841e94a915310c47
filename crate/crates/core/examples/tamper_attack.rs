//! Runs the RTVG tamper scenario and prints the preliminary/final divergence.

use std::path::Path;

use tallynet::adversary::detection_report;
use tallynet::simnet::{build_scenario, run, ScenarioConfig};
use tallynet::tally::popular_outcome;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/rtvg_tamper.toml");
    let cfg = ScenarioConfig::from_file(&path)?;
    let truth = cfg.ground_truth();
    let trace = run(build_scenario(cfg)?);
    let summary = detection_report(&trace, &truth);

    for d in &summary.divergences {
        println!("t={:>5} published {} -> {:?}", d.time, d.published, popular_outcome(&d.published));
    }
    println!("first divergence at {:?}, final at {:?}", summary.first_divergence(), summary.final_at);
    println!("integrity gap: {:?} ticks", summary.integrity_gap);
    println!("final matches ground truth: {}", summary.matches_ground_truth);
    Ok(())
}
