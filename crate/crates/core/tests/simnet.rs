mod common;

use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random::swiss_scenario;
use common::run_scenario;
use tallynet::adversary::detection_report;
use tallynet::secauth::{Pki, SchemeKind};
use tallynet::simnet::{
    build_scenario, publish_timeline, run, BuildError, EventTrace, NoiseModel, ReportKind, ScenarioConfig, TraceEvent,
};
use tallynet::tally::{accumulate, jid, VoteCount};

const SMALL: &str = r#"
election = "e1"
seed = 4

[[node]]
path = "CH"
[[node]]
path = "CH/AA"
weight = 1.0
eligible = 1000
[[node]]
path = "CH/AA/One"
yes = 300
no = 200
[[node]]
path = "CH/AA/Two"
yes = 100
no = 250
[[node]]
path = "CH/BB"
weight = 1.0
eligible = 1000
[[node]]
path = "CH/BB/Three"
yes = 400
no = 100
"#;

fn small(extra: &str) -> ScenarioConfig {
    ScenarioConfig::parse(&format!("{SMALL}{extra}"), Path::new(".")).unwrap()
}

fn detect_reasons(trace: &EventTrace) -> Vec<String> {
    trace
        .records
        .iter()
        .filter_map(|r| match &r.event {
            TraceEvent::Detect { reason, .. } => Some(reason.clone()),
            _ => None,
        })
        .collect()
}

fn final_totals(trace: &EventTrace) -> VoteCount {
    publish_timeline(trace).into_iter().find(|p| p.kind == ReportKind::Final).expect("final published").totals
}

#[test]
fn no_attack_preset_has_no_divergence() {
    let (cfg, trace) = run_scenario("swiss_no_attack");
    let s = detection_report(&trace, &cfg.ground_truth());
    assert!(s.matches_ground_truth);
    assert!(s.divergences.is_empty() && s.detections.is_empty() && s.wrong_outcome.is_empty());
    let last_prelim = publish_timeline(&trace).into_iter().rfind(|p| p.kind == ReportKind::Preliminary).unwrap();
    assert!(last_prelim.is_complete());
    assert_eq!(last_prelim.totals, cfg.ground_truth());
}

#[test]
fn rtvg_tamper_flips_the_preliminary_outcome() {
    let (cfg, trace) = run_scenario("rtvg_tamper");
    let s = detection_report(&trace, &cfg.ground_truth());
    assert!(s.matches_ground_truth);
    assert_eq!(s.wrong_outcome.len(), 1);
    let d = s.divergences.last().unwrap();
    assert_eq!(d.children.len(), 1);
    let (id, published, fin) = &d.children[0];
    assert_eq!(id, &jid("CH/BL"));
    assert_eq!((fin.yes - published.yes, published.no - fin.no), (1825, 1825));
    assert_eq!(s.integrity_gap, Some(s.final_at.unwrap() - s.first_divergence().unwrap()));
}

#[test]
fn delay_leaves_no_divergence_only_gaps() {
    let (cfg, trace) = run_scenario("polarized_delay");
    let s = detection_report(&trace, &cfg.ground_truth());
    assert!(s.divergences.is_empty());
    assert!(!s.coverage_gaps.is_empty());
    let early = &publish_timeline(&trace)[0];
    assert!(early.totals.yes > early.totals.no, "early publications lean yes");
    assert!(final_totals(&trace).no > final_totals(&trace).yes);
}

#[test]
fn reports_are_forwarded_on_acceptance() {
    let (_, trace) = run_scenario("swiss_no_attack");
    for (i, r) in trace.records.iter().enumerate() {
        if let TraceEvent::Accept { node, kind: ReportKind::Preliminary, .. } = &r.event {
            let next = &trace.records[i + 1];
            assert_eq!(next.time, r.time);
            match &next.event {
                TraceEvent::Send { from, .. } => assert_eq!(from, node),
                TraceEvent::Publish { .. } => assert_eq!(node, &jid("CH")),
                other => panic!("accept followed by {other:?}"),
            }
        }
    }
}

#[test]
fn seed_changes_timing_not_totals() {
    let mut a = run_scenario("swiss_no_attack").0;
    a.seed = 99;
    let trace = run(build_scenario(a.clone()).unwrap());
    assert_ne!(trace.to_text(), run_scenario("swiss_no_attack").1.to_text());
    assert_eq!(final_totals(&trace), a.ground_truth());
}

#[test]
fn honest_noise_diverges_but_finals_are_exact() {
    let mut cfg = run_scenario("swiss_no_attack").0;
    cfg.noise = Some(NoiseModel { probability: 0.5, magnitude: 30 });
    let trace = run(build_scenario(cfg.clone()).unwrap());
    let s = detection_report(&trace, &cfg.ground_truth());
    assert!(!s.divergences.is_empty());
    assert!(s.matches_ground_truth);
}

#[test]
fn signed_run_verifies_everything() {
    let (cfg, trace) = run_scenario("signed_swiss");
    assert!(trace.header.iter().any(|h| h.contains("signed_edges=79")));
    assert!(detect_reasons(&trace).is_empty());
    assert_eq!(final_totals(&trace), cfg.ground_truth());
}

#[test]
fn stolen_key_tamper_caught_by_countersigning() {
    let attack = r#"
[security]
wrap = "all"
scheme = "toy-schnorr"
key_seed = 3
compromised = ["CH/AA"]
[[attack]]
kind = "tamper"
from = "CH/AA"
mutation = "swap"
"#;
    let trace = run(build_scenario(small(attack)).unwrap());
    let reasons = detect_reasons(&trace);
    assert!(!reasons.is_empty() && reasons.iter().all(|r| r == "RelayMismatch"), "{reasons:?}");

    let trace = run(build_scenario(small(&attack.replace("key_seed = 3", "key_seed = 3\nrelay = \"resign\""))).unwrap());
    assert!(detect_reasons(&trace).is_empty());
    let s = detection_report(&trace, &VoteCount::new(800, 550));
    assert!(!s.divergences.is_empty(), "re-signed tamper goes through");
}

#[test]
fn tamper_on_signed_edge_without_stolen_key_is_refused() {
    let cfg = small("[security]\nwrap = \"all\"\nscheme = \"toy-schnorr\"\n[[attack]]\nkind = \"tamper\"\nfrom = \"CH/AA\"\nmutation = \"swap\"\n");
    assert!(matches!(build_scenario(cfg), Err(BuildError::Capability { index: 0, .. })));
}

#[test]
fn revoked_office_is_rejected() {
    let cfg = small("[security]\nwrap = \"all\"\nscheme = \"toy-schnorr\"\nrevoked = [\"CH/BB\"]\ncrl_version = 1\n");
    let trace = run(build_scenario(cfg).unwrap());
    let reasons = detect_reasons(&trace);
    assert!(!reasons.is_empty() && reasons.iter().all(|r| r == "Revoked"), "{reasons:?}");
    assert_eq!(final_totals(&trace), VoteCount::new(800, 550));
}

#[test]
fn foreign_trust_store_rejects_all_signatures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("");
    Pki::bootstrap(&cfg.tree, SchemeKind::ToySchnorr, 999).trust_store().write(dir.path()).unwrap();
    let extra = format!(
        "[security]\nwrap = \"all\"\nscheme = \"toy-schnorr\"\nkey_seed = 1\ntrust_store = \"{}\"\n",
        dir.path().display()
    );
    let trace = run(build_scenario(small(&extra)).unwrap());
    let reasons = detect_reasons(&trace);
    assert!(!reasons.is_empty() && reasons.iter().all(|r| r == "UntrustedRoot"), "{reasons:?}");
}

#[test]
fn missing_counts_fail_to_build() {
    let mut cfg = small("");
    cfg.leaves.remove(&jid("CH/BB/Three"));
    let e = build_scenario(cfg).err().unwrap();
    assert!(e.to_string().contains("CH/BB/Three"), "{e}");
}

#[test]
fn config_errors_carry_lines() {
    let e = ScenarioConfig::parse("election = \"x\"\n[[node]]\npath = \"CH\"\n[[node]]\npath = \"CH/A/B\"\n", Path::new("."))
        .unwrap_err();
    assert_eq!(e.line, Some(5), "{e}");
    assert!(ScenarioConfig::from_file(Path::new("/nonexistent/scenario.toml")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conservation_and_publication_sums(seed in any::<u64>(), wrapped in any::<bool>(), noisy in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cfg = swiss_scenario(&mut rng, wrapped);
        if noisy {
            cfg.noise = Some(NoiseModel { probability: 0.3, magnitude: 50 });
        }
        let trace = run(build_scenario(cfg.clone()).unwrap());
        prop_assert_eq!(final_totals(&trace), cfg.ground_truth());
        for p in publish_timeline(&trace) {
            prop_assert_eq!(accumulate(p.per_child.values()).unwrap(), p.totals);
        }
        let again = run(build_scenario(cfg).unwrap());
        prop_assert_eq!(again.to_text(), trace.to_text());
    }
}
