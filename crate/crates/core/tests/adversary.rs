mod common;

use std::path::Path;

use common::run_scenario;
use tallynet::adversary::{
    apply_tamper, detection_report, AttackKind, AttackSpec, CapabilityError, Mutation, SeqStrategy, Trigger,
};
use tallynet::simnet::{
    build_scenario, publish_timeline, run, BuildError, ChannelPreset, ChannelSpec, EventTrace, Report, ReportKind,
    ScenarioConfig, TraceEvent,
};
use tallynet::tally::{jid, VoteCount};

const TWO_CANTONS: &str = r#"
election = "e2"
seed = 8

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
no = 400
[[node]]
path = "CH/BB"
weight = 1.0
eligible = 2000
channel = "telephone"
[[node]]
path = "CH/BB/Two"
yes = 300
no = 700
"#;

fn scenario(extra: &str) -> ScenarioConfig {
    ScenarioConfig::parse(&format!("{TWO_CANTONS}{extra}"), Path::new(".")).unwrap()
}

fn records<'a>(trace: &'a EventTrace, name: &'a str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
    trace.records.iter().map(|r| &r.event).filter(move |e| e.name() == name)
}

#[test]
fn front_run_preempts_the_genuine_report() {
    let cfg = scenario(
        "[[attack]]\nkind = \"front_run\"\nfrom = \"CH/BB\"\nforged = { yes = 900, no = 100 }\nforged_seq = 1\n",
    );
    let trace = run(build_scenario(cfg.clone()).unwrap());
    let forged: Vec<_> = records(&trace, "deliver")
        .filter(|e| matches!(e, TraceEvent::Deliver { forged: true, .. }))
        .collect();
    assert_eq!(forged.len(), 1);
    let stale: Vec<_> = records(&trace, "detect")
        .filter(|e| matches!(e, TraceEvent::Detect { from, reason, .. } if from == &jid("CH/BB") && reason == "StaleSequence"))
        .collect();
    assert_eq!(stale.len(), 1, "genuine report arrives second and is stale");
    let s = detection_report(&trace, &cfg.ground_truth());
    assert_eq!(s.wrong_outcome.len(), 1);
    assert!(s.matches_ground_truth);
}

#[test]
fn front_run_over_eligible_is_caught_by_feasibility() {
    let cfg = scenario("[[attack]]\nkind = \"front_run\"\nfrom = \"CH/BB\"\nforged = { yes = 1900, no = 900 }\n");
    let trace = run(build_scenario(cfg).unwrap());
    assert!(records(&trace, "detect").any(|e| matches!(e, TraceEvent::Detect { reason, .. } if reason == "OverEligible")));
}

#[test]
fn first_trigger_limits_the_attack() {
    let cfg = scenario("[[attack]]\nkind = \"tamper\"\nfrom = \"CH/AA/One\"\nmutation = \"swap\"\nfirst = 1\n");
    let trace = run(build_scenario(cfg).unwrap());
    assert_eq!(records(&trace, "intercept").count(), 1);
}

#[test]
fn omniscient_flip_targets_the_outcome() {
    let cfg = scenario(
        "[[attack]]\nkind = \"tamper\"\nfrom = \"CH/BB\"\nomniscient = true\nmutation = { flip_popular_to = \"accepted\" }\n",
    );
    let truth = cfg.ground_truth();
    let trace = run(build_scenario(cfg).unwrap());
    assert!(trace.header.iter().any(|h| h.contains("mode=omniscient")));
    let s = detection_report(&trace, &truth);
    assert!(!s.wrong_outcome.is_empty());
    let last = publish_timeline(&trace).into_iter().rfind(|p| p.kind == ReportKind::Preliminary).unwrap();
    assert!(last.totals.yes > last.totals.no);
}

#[test]
fn final_reports_cannot_be_tampered() {
    let mut cfg = scenario("");
    let spec = AttackSpec::new(AttackKind::Tamper(Mutation::SwapYesNo), jid("CH/AA"), jid("CH"))
        .with_trigger(Trigger { kind: ReportKind::Final, ..Trigger::default() });
    cfg.attacks.push(spec);
    match build_scenario(cfg) {
        Err(BuildError::Capability { source: CapabilityError::Integrity(name), .. }) => assert_eq!(name, "postal_final"),
        other => panic!("{:?}", other.err()),
    }
}

#[test]
fn finals_can_still_be_delayed() {
    let mut cfg = scenario("");
    let truth = cfg.ground_truth();
    let spec = AttackSpec::new(AttackKind::Delay { hold: 5000 }, jid("CH/AA"), jid("CH"))
        .with_trigger(Trigger { kind: ReportKind::Final, ..Trigger::default() });
    cfg.attacks.push(spec);
    let trace = run(build_scenario(cfg).unwrap());
    let s = detection_report(&trace, &truth);
    assert!(s.final_at.unwrap() > 5000);
    assert!(s.matches_ground_truth);
}

#[test]
fn edge_must_exist() {
    let mut cfg = scenario("");
    cfg.attacks.push(AttackSpec::new(AttackKind::Delay { hold: 1 }, jid("CH/AA/One"), jid("CH")));
    assert!(matches!(
        build_scenario(cfg),
        Err(BuildError::Capability { source: CapabilityError::NoSuchEdge { .. }, .. })
    ));
}

#[test]
fn tamper_needs_a_channel_without_integrity() {
    let r = Report::preliminary("e", jid("CH/AA"), 1, VoteCount::new(10, 3));
    let fax = ChannelSpec::preset(ChannelPreset::Fax);
    assert_eq!(apply_tamper(&r, &Mutation::Shift(-5), &fax).unwrap().counts, VoteCount::new(5, 8));
    assert!(apply_tamper(&r, &Mutation::SwapYesNo, &ChannelSpec::postal()).is_err());
}

#[test]
fn sequence_strategies() {
    assert_eq!(SeqStrategy::Offset(1000).sequence(3), 1003);
    assert_eq!(SeqStrategy::Fixed(1).sequence(3), 1);
}

#[test]
fn tamper_golden_records_the_intercept() {
    let (_, trace) = run_scenario("rtvg_tamper");
    assert!(trace.header.iter().any(|h| h.starts_with("attack index=0 kind=tamper from=CH/BL to=CH")));
    let intercepts: Vec<_> = records(&trace, "intercept").collect();
    assert!(!intercepts.is_empty());
    for e in intercepts {
        let TraceEvent::Intercept { from, action, .. } = e else { unreachable!() };
        assert_eq!((from, action.as_str()), (&jid("CH/BL"), "tamper"));
    }
}
