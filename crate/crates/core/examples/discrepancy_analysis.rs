//! Historical preliminary/final discrepancies and whether they could hide a
//! flip of recent close referendums.

use std::path::Path;

use tallynet::analysis::{discrepancy_stats, load_results, vulnerability_report};
use tallynet::simnet::swiss_preset;
use tallynet::tally::{MajorityRule, ReferendumSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let history = discrepancy_stats(&load_results(&data.join("canton_maxima.csv"))?);
    print!("{}", history.to_text());

    let geneva = discrepancy_stats(&load_results(&data.join("geneva_2013.csv"))?);
    let g = geneva.canton("Genève").expect("row present");
    println!("Geneva 2013: {} of {} votes ({:.0}%)", g.max_abs_discrepancy, g.total_at_max, g.max_relative * 100.0);

    let tree = swiss_preset().tree;
    let records = load_results(&data.join("referendums.csv"))?;
    let specs = [
        ReferendumSpec::new("rtvg-2015", MajorityRule::PopularOnly),
        ReferendumSpec::new("family-2013", MajorityRule::DoubleMajority),
    ];
    for a in vulnerability_report(&records, &tree, &specs, &history)? {
        println!();
        print!("{}", a.to_text(&tree));
    }
    Ok(())
}
