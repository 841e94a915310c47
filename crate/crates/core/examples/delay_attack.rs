//! Holding back one region's preliminary reports skews early publications
//! without changing any figure.

use std::path::Path;

use tallynet::adversary::detection_report;
use tallynet::simnet::{build_scenario, publish_timeline, run, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/polarized_delay.toml");
    let cfg = ScenarioConfig::from_file(&path)?;
    let truth = cfg.ground_truth();
    let trace = run(build_scenario(cfg)?);
    for p in publish_timeline(&trace) {
        let share = 100.0 * p.totals.yes as f64 / (p.totals.yes + p.totals.no).max(1) as f64;
        println!(
            "t={:>5} {:?} {:.1}% yes, {} of {} regions{}",
            p.time,
            p.kind,
            share,
            p.per_child.len(),
            p.children,
            if p.partial.is_empty() { "" } else { " (partial)" }
        );
    }
    let s = detection_report(&trace, &truth);
    println!("divergences: {}, coverage gaps: {}", s.divergences.len(), s.coverage_gaps.len());
    Ok(())
}
