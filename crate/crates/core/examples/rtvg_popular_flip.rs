//! Fewest ballots that reverse the RTVG popular majority, placed in Basel-Landschaft.

use std::path::Path;

use tallynet::analysis::{final_counts_by_canton, load_results};
use tallynet::simnet::swiss_preset;
use tallynet::tally::{accumulate, jid, min_flips_popular, popular_outcome, Decision};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = swiss_preset().tree;
    let records = load_results(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/referendums.csv"))?;
    let per_canton = final_counts_by_canton(&records, &tree, "rtvg-2015")?;
    let national = accumulate(per_canton.values())?;
    println!("national: {} yes, {} no -> {:?}", national.yes, national.no, popular_outcome(&national));

    let bl = jid("CH/BL");
    let plan = min_flips_popular(&bl, &national, Decision::Rejected)?;
    let after = plan.apply(&per_canton)?;
    let share = |c: &tallynet::tally::VoteCount| 100.0 * c.no as f64 / (c.yes + c.no) as f64;
    println!("flips needed: {}", plan.total_flips);
    println!("Basel-Landschaft no share: {:.1}% -> {:.1}%", share(&per_canton[&bl]), share(&after[&bl]));
    println!("national outcome after flips: {:?}", popular_outcome(&accumulate(after.values())?));
    Ok(())
}
