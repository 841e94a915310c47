//! A forged preliminary report injected ahead of the genuine one, first on a
//! fax link and then on a signed link where the attack is refused.

use std::path::Path;

use tallynet::adversary::{detection_report, AttackKind, AttackSpec, SeqStrategy};
use tallynet::secauth::SchemeKind;
use tallynet::simnet::{build_scenario, run, ScenarioConfig, SecurityConfig, TraceEvent};
use tallynet::tally::{jid, VoteCount};

const TREE: &str = r#"
election = "demo"
seed = 1
[[node]]
path = "CH"
[[node]]
path = "CH/AA"
weight = 1.0
eligible = 2000
channel = "fax"
[[node]]
path = "CH/AA/One"
yes = 500
no = 700
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ScenarioConfig::parse(TREE, Path::new("."))?;
    let forged = VoteCount::new(900, 100);
    cfg.attacks.push(AttackSpec::new(
        AttackKind::FrontRun { forged, seq: SeqStrategy::Offset(1000) },
        jid("CH/AA"),
        jid("CH"),
    ));
    let truth = cfg.ground_truth();
    let trace = run(build_scenario(cfg.clone())?);
    for r in &trace.records {
        if matches!(r.event, TraceEvent::Deliver { .. } | TraceEvent::Detect { .. } | TraceEvent::Publish { .. }) {
            println!("{}", r.to_line());
        }
    }
    let s = detection_report(&trace, &truth);
    println!("wrong-outcome publications: {:?}", s.wrong_outcome);

    cfg.security = Some(SecurityConfig::wrap_all(SchemeKind::Ed25519, 7));
    match build_scenario(cfg) {
        Err(e) => println!("signed link: {e}"),
        Ok(_) => println!("signed link: attack unexpectedly allowed"),
    }
    Ok(())
}
