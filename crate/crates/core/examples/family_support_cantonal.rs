//! Family-support article: accepted by the people, rejected by the cantons.
//! Finds the cheapest cantons to flip so both majorities accept.

use std::path::Path;

use tallynet::analysis::{final_counts_by_canton, load_results};
use tallynet::simnet::swiss_preset;
use tallynet::tally::{min_flips_cantonal, min_flips_double, referendum_outcome, Decision, MajorityRule, ReferendumSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = swiss_preset().tree;
    let records = load_results(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/referendums.csv"))?;
    let per_canton = final_counts_by_canton(&records, &tree, "family-2013")?;
    let spec = ReferendumSpec::new("family-2013", MajorityRule::DoubleMajority);

    let o = referendum_outcome(&spec, &per_canton, &tree)?;
    let c = o.cantonal.as_ref().expect("double majority");
    println!(
        "popular {:?} ({:.1}% yes), cantons {:?} ({} of {}), overall {:?}",
        o.popular,
        100.0 * o.national.yes as f64 / (o.national.yes + o.national.no) as f64,
        c.decision,
        c.yes_weight,
        c.total_weight,
        o.overall
    );

    let cantonal = min_flips_cantonal(&per_canton, &tree, Decision::Accepted)?;
    for (id, k) in &cantonal.flips {
        let v = per_canton[id];
        println!("  {}: {} yes / {} no, flip {k}", tree.label(id), v.yes, v.no);
    }
    let plan = min_flips_double(&per_canton, &tree, &spec, Decision::Accepted)?;
    println!("total flips for double-majority acceptance: {}", plan.total_flips);
    println!("outcome after flips: {:?}", referendum_outcome(&spec, &plan.apply(&per_canton)?, &tree)?.overall);
    Ok(())
}
