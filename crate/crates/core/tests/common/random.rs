//! Seeded generators shared by the randomized suites.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tallynet::adversary::{AttackKind, AttackSpec, Mutation, SeqStrategy};
use tallynet::secauth::SchemeKind;
use tallynet::simnet::{swiss_preset, ChannelPreset, ChannelSpec, RelayMode, ScenarioConfig, SecurityConfig};
use tallynet::tally::{HalfVotes, JurisdictionId, JurisdictionTree, VoteCount};

pub const WEAK_PRESETS: [ChannelPreset; 3] = [ChannelPreset::Email, ChannelPreset::Telephone, ChannelPreset::Fax];

/// A Swiss-preset scenario with random counts, channels and seed, no attacks.
pub fn swiss_scenario(rng: &mut ChaCha8Rng, wrapped: bool) -> ScenarioConfig {
    let tf = swiss_preset();
    let tree = tf.tree;
    let mut truth = BTreeMap::new();
    for leaf in tree.leaves() {
        let eligible = tree.eligible(leaf).unwrap_or(10_000);
        let turnout = eligible * rng.gen_range(25..=65) / 100;
        let blank = rng.gen_range(0..=turnout / 50);
        let yes = rng.gen_range(0..=turnout - blank);
        truth.insert(leaf.clone(), VoteCount::with_blank_invalid(yes, turnout - blank - yes, blank, 0));
    }
    let channels = tree
        .edges()
        .into_iter()
        .map(|(child, _)| (child.clone(), ChannelSpec::preset(*WEAK_PRESETS.choose(rng).unwrap())))
        .collect();
    let mut cfg = ScenarioConfig::new("random", rng.gen(), tree, channels, truth);
    if wrapped {
        let mut sec = SecurityConfig::wrap_all(SchemeKind::ToySchnorr, rng.gen());
        if rng.gen_bool(0.5) {
            sec.relay = RelayMode::Resign;
        }
        cfg.security = Some(sec);
    }
    cfg
}

/// A random attack on a random edge of `tree`.
pub fn attack(rng: &mut ChaCha8Rng, tree: &JurisdictionTree, kind: usize) -> AttackSpec {
    let edges = tree.edges();
    let (from, to) = edges[rng.gen_range(0..edges.len())];
    let kind = match kind {
        0 => AttackKind::Tamper(if rng.gen_bool(0.5) {
            Mutation::SwapYesNo
        } else {
            Mutation::Shift(rng.gen_range(-5000..=5000))
        }),
        1 => AttackKind::Delay { hold: rng.gen_range(1..=600) },
        _ => {
            let cap = tree.eligible(from).unwrap_or(1000);
            let yes = rng.gen_range(0..=cap / 2);
            let no = rng.gen_range(0..=cap / 2);
            AttackKind::FrontRun { forged: VoteCount::new(yes, no), seq: SeqStrategy::Offset(1000) }
        }
    };
    AttackSpec::new(kind, from.clone(), to.clone())
}

/// Per-canton counts for a small weighted tree.
pub struct Instance {
    pub tree: JurisdictionTree,
    pub counts: BTreeMap<JurisdictionId, VoteCount>,
}

pub fn instance(rng: &mut ChaCha8Rng, max_cantons: usize, max_ballots: u64) -> Instance {
    let n = rng.gen_range(1..=max_cantons);
    let root = tallynet::tally::jid("X");
    let mut b = JurisdictionTree::builder(root.clone());
    let mut counts = BTreeMap::new();
    for i in 0..n {
        let id = root.child(&format!("C{i}")).unwrap();
        b = b.node(id.clone()).weight(&id, HalfVotes(rng.gen_range(1..=2)));
        let ballots = rng.gen_range(0..=max_ballots);
        let yes = rng.gen_range(0..=ballots);
        counts.insert(id, VoteCount::with_blank_invalid(yes, ballots - yes, rng.gen_range(0..=3), 0));
    }
    Instance { tree: b.build().unwrap(), counts }
}
