//! Scenario and tree files (TOML).
//!
//! A tree file is a list of `[[node]]` tables:
//!
//! ```toml
//! [[node]]
//! path = "CH"
//!
//! [[node]]
//! path = "CH/ZG"
//! name = "Zug"
//! weight = 1.0          # cantonal vote: 1.0 or 0.5; cantons only
//! eligible = 73000
//! channel = "email+fax" # preliminary channel to the parent
//! ```
//!
//! Parents must be declared, in any order. A scenario file either names a
//! tree file (`tree = "path"`, relative to the scenario, or
//! `tree = "builtin:swiss"`) or declares its nodes inline, and adds:
//!
//! ```toml
//! election = "rtvg-2015"
//! seed = 7
//!
//! [timing]              # all optional
//! prelim_start = 0
//! prelim_spread = 120   # leaf preliminary reports at start + U[0, spread]
//! final_start = 1000
//! final_spread = 300
//! jitter = 4            # extra latency U[0, jitter] per message
//!
//! [noise]               # optional honest miscounting in preliminary reports
//! probability = 0.2
//! magnitude = 40
//!
//! [[count]]             # ground truth per leaf; `yes`, `no`, ... may also
//! node = "CH/ZG/Zug"    # sit directly on leaf [[node]] tables
//! yes = 5000
//! no = 4000
//! blank = 10
//! report_at = 30        # optional fixed emission ticks
//! final_at = 900
//!
//! [counts_from]         # alternatively: distribute per-canton final results
//! results = "referendums.csv"
//! referendum = "rtvg-2015"
//!
//! [[edge]]              # per-edge overrides, keyed by the sender
//! from = "CH/ZG"
//! channel = "telephone"
//! latency = 9
//!
//! [security]
//! wrap = "all"          # or "none", or a list of senders
//! scheme = "toy-schnorr"
//! key_seed = 1
//! relay = "countersign" # or "resign"
//! compromised = ["CH/ZG"]
//! revoked = []
//! crl_version = 0
//! trust_store = "store" # optional: pin the root from a trust-store directory
//!
//! [[attack]]
//! kind = "tamper"       # tamper | delay | front_run
//! from = "CH/BL"        # edge sender; `to` defaults to its parent
//! mutation = { shift = -1825 }   # "swap" | { set = {..} } | { shift = n } | { flip_popular_to = "rejected" }
//! reports = "preliminary"
//! first = 1             # only the first N matching reports
//! omniscient = false
//! # delay: hold = 100
//! # front_run: forged = { yes = 900, no = 100 }, forged_seq = 1 or seq_offset = 1000
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::adversary::{AttackKind, AttackSpec, Mutation, SeqStrategy, Trigger};
use crate::analysis::{final_counts_by_canton, parse_results};
use crate::secauth::SchemeKind;
use crate::tally::{
    accumulate, popular_flip_cost, Decision, HalfVotes, JurisdictionId, JurisdictionTree, TreeError,
    VoteCount,
};

use super::{ChannelSpec, ReportKind, Tick};

const SWISS_PRESET: &str = include_str!("../../data/swiss_preset.toml");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { line: None, field: field.into(), message: message.into() }
    }

    fn at(mut self, line: Option<usize>) -> Self {
        self.line = self.line.or(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if self.field.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    pub prelim_start: Tick,
    pub prelim_spread: Tick,
    pub final_start: Tick,
    pub final_spread: Tick,
    pub jitter: Tick,
}

impl Default for Timing {
    fn default() -> Self {
        Timing { prelim_start: 0, prelim_spread: 120, final_start: 1000, final_spread: 300, jitter: 4 }
    }
}

/// Honest counting error applied to preliminary (never final) leaf counts:
/// with `probability`, between 1 and `magnitude` ballots move between yes
/// and no in a random direction.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub probability: f64,
    pub magnitude: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelayMode {
    /// An intermediate office signs its accumulation and attaches the signed
    /// reports of its subordinates, which the receiver re-checks.
    #[default]
    Countersign,
    /// An intermediate office signs only its own accumulation.
    Resign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WrapScope {
    All,
    /// Edges identified by their sender.
    Senders(BTreeSet<JurisdictionId>),
}

impl WrapScope {
    pub fn covers(&self, sender: &JurisdictionId) -> bool {
        match self {
            WrapScope::All => true,
            WrapScope::Senders(s) => s.contains(sender),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityConfig {
    pub wrap: WrapScope,
    pub scheme: SchemeKind,
    pub key_seed: u64,
    pub relay: RelayMode,
    /// Offices whose signing key the adversary holds.
    pub compromised: BTreeSet<JurisdictionId>,
    pub revoked: BTreeSet<JurisdictionId>,
    pub crl_version: u64,
    pub trust_store: Option<PathBuf>,
}

impl SecurityConfig {
    pub fn wrap_all(scheme: SchemeKind, key_seed: u64) -> Self {
        SecurityConfig {
            wrap: WrapScope::All,
            scheme,
            key_seed,
            relay: RelayMode::default(),
            compromised: BTreeSet::new(),
            revoked: BTreeSet::new(),
            crl_version: 0,
            trust_store: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LeafConfig {
    pub truth: VoteCount,
    pub report_at: Option<Tick>,
    pub final_at: Option<Tick>,
}

/// A tree with the preliminary channel of every edge, keyed by sender.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeFile {
    pub tree: JurisdictionTree,
    pub channels: BTreeMap<JurisdictionId, ChannelSpec>,
    pub leaves: BTreeMap<JurisdictionId, LeafConfig>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub election_id: String,
    pub seed: u64,
    pub tree: JurisdictionTree,
    pub channels: BTreeMap<JurisdictionId, ChannelSpec>,
    pub leaves: BTreeMap<JurisdictionId, LeafConfig>,
    pub timing: Timing,
    pub noise: Option<NoiseModel>,
    pub attacks: Vec<AttackSpec>,
    pub security: Option<SecurityConfig>,
}

impl ScenarioConfig {
    /// A scenario without attacks or noise. Edges missing from `channels`
    /// use the email preset.
    pub fn new(
        election_id: impl Into<String>,
        seed: u64,
        tree: JurisdictionTree,
        channels: BTreeMap<JurisdictionId, ChannelSpec>,
        truth: BTreeMap<JurisdictionId, VoteCount>,
    ) -> Self {
        let mut channels = channels;
        for (child, _) in tree.edges() {
            channels.entry(child.clone()).or_insert_with(default_channel);
        }
        ScenarioConfig {
            election_id: election_id.into(),
            seed,
            leaves: truth.into_iter().map(|(k, truth)| (k, LeafConfig { truth, ..Default::default() })).collect(),
            tree,
            channels,
            timing: Timing::default(),
            noise: None,
            attacks: Vec::new(),
            security: None,
        }
    }

    pub fn ground_truth(&self) -> VoteCount {
        accumulate(self.leaves.values().map(|l| &l.truth)).unwrap_or(VoteCount {
            yes: u64::MAX,
            no: u64::MAX,
            blank: u64::MAX,
            invalid: u64::MAX,
        })
    }

    pub fn from_file(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("scenario", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ScenarioConfig::parse(&text, base)
    }

    /// Parses a scenario; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<ScenarioConfig, ConfigError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        let line = |off: usize| Some(line_of(text, off));

        if raw.election.get_ref().is_empty() || raw.election.get_ref().contains(['\n', '=']) {
            return Err(ConfigError::new("election", "must be nonempty without '=' or line breaks")
                .at(line(raw.election.span().start)));
        }
        let mut file = match (&raw.tree, raw.node.is_empty()) {
            (Some(_), false) => {
                return Err(ConfigError::new("tree", "give either `tree` or inline [[node]] tables, not both"))
            }
            (None, true) => return Err(ConfigError::new("tree", "no tree: set `tree` or declare [[node]] tables")),
            (Some(t), true) => load_tree_ref(t.get_ref(), base_dir).map_err(|e| e.at(line(t.span().start)))?,
            (None, false) => tree_from_nodes(&raw.node, text)?,
        };
        if file.tree.edges().is_empty() {
            return Err(ConfigError::new("node", "the tree needs at least one edge"));
        }

        for c in &raw.count {
            let at = line(c.node.span().start);
            let id = parse_id(c.node.get_ref(), "count.node").map_err(|e| e.at(at))?;
            if !file.tree.is_leaf(&id) || !file.tree.contains(&id) {
                return Err(ConfigError::new("count.node", format!("{id} is not a leaf of the tree")).at(at));
            }
            if file.leaves.contains_key(&id) {
                return Err(ConfigError::new("count.node", format!("counts for {id} given twice")).at(at));
            }
            file.leaves.insert(
                id,
                LeafConfig {
                    truth: VoteCount::with_blank_invalid(c.yes, c.no, c.blank, c.invalid),
                    report_at: c.report_at,
                    final_at: c.final_at,
                },
            );
        }
        if let Some(cf) = &raw.counts_from {
            distribute_results(&mut file, cf, base_dir)?;
        }
        for leaf in file.tree.leaves() {
            if !file.leaves.contains_key(leaf) {
                return Err(ConfigError::new("count", format!("no ground-truth counts for leaf {leaf}")));
            }
        }

        for e in &raw.edge {
            let at = line(e.from.span().start);
            let id = parse_id(e.from.get_ref(), "edge.from").map_err(|x| x.at(at))?;
            if id == *file.tree.root() || !file.tree.contains(&id) {
                return Err(ConfigError::new("edge.from", format!("{id} is not the sender of an edge")).at(at));
            }
            let mut ch = match &e.channel {
                Some(c) => ChannelSpec::parse_notation(c.get_ref())
                    .map_err(|m| ConfigError::new("edge.channel", m).at(line(c.span().start)))?,
                None => file.channels[&id].clone(),
            };
            if let Some(l) = e.latency {
                ch.base_latency = l;
            }
            file.channels.insert(id, ch);
        }

        if let Some(n) = &raw.noise {
            if !(0.0..=1.0).contains(&n.probability) {
                return Err(ConfigError::new("noise.probability", "must lie in [0, 1]"));
            }
        }

        let security = raw.security.as_ref().map(|s| s.validate(&file.tree, base_dir)).transpose()?;

        let truth = accumulate(file.leaves.values().map(|l| &l.truth))
            .map_err(|e| ConfigError::new("count", e.to_string()))?;
        let attacks = raw
            .attack
            .iter()
            .enumerate()
            .map(|(i, a)| a.validate(i, &file.tree, &truth, text))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(ScenarioConfig {
            election_id: raw.election.into_inner(),
            seed: raw.seed,
            tree: file.tree,
            channels: file.channels,
            leaves: file.leaves,
            timing: raw.timing,
            noise: raw.noise,
            attacks,
            security,
        })
    }
}

fn default_channel() -> ChannelSpec {
    ChannelSpec::preset(super::ChannelPreset::Email)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn toml_error(text: &str, e: toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| line_of(text, s.start));
    ConfigError { line, field: String::new(), message: e.message().trim().to_string() }
}

fn parse_id(s: &str, field: &str) -> Result<JurisdictionId, ConfigError> {
    s.parse().map_err(|e| ConfigError::new(field, format!("{s:?}: {e}")))
}

/// The bundled Swiss hierarchy: 26 cantons with 2019 electorates and their
/// preliminary transmission channels, each with municipality-level units.
pub fn swiss_preset() -> TreeFile {
    TreeFile::parse(SWISS_PRESET).expect("bundled preset is valid")
}

impl TreeFile {
    pub fn parse(text: &str) -> Result<TreeFile, ConfigError> {
        let raw: RawTreeFile = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        tree_from_nodes(&raw.node, text)
    }

    pub fn from_file(path: &Path) -> Result<TreeFile, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("tree", format!("{}: {e}", path.display())))?;
        TreeFile::parse(&text).map_err(|e| ConfigError {
            message: format!("{} ({})", e.message, path.display()),
            ..e
        })
    }
}

fn load_tree_ref(reference: &str, base_dir: &Path) -> Result<TreeFile, ConfigError> {
    match reference {
        "builtin:swiss" => Ok(swiss_preset()),
        path => TreeFile::from_file(&base_dir.join(path)),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTreeFile {
    #[serde(default)]
    node: Vec<RawNode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    path: Spanned<String>,
    name: Option<String>,
    weight: Option<f64>,
    eligible: Option<u64>,
    channel: Option<Spanned<String>>,
    yes: Option<u64>,
    no: Option<u64>,
    blank: Option<u64>,
    invalid: Option<u64>,
    report_at: Option<Tick>,
    final_at: Option<Tick>,
}

fn tree_from_nodes(nodes: &[RawNode], text: &str) -> Result<TreeFile, ConfigError> {
    let line = |off: usize| Some(line_of(text, off));
    let mut parsed = Vec::with_capacity(nodes.len());
    for n in nodes {
        let id = parse_id(n.path.get_ref(), "node.path").map_err(|e| e.at(line(n.path.span().start)))?;
        parsed.push((id, n));
    }
    // parents first; stable so duplicates keep their file order
    parsed.sort_by_key(|(id, _)| id.depth());
    let Some((root, _)) = parsed.first() else {
        return Err(ConfigError::new("node", "the tree has no nodes"));
    };
    let mut lines: BTreeMap<JurisdictionId, usize> = BTreeMap::new();
    let mut b = JurisdictionTree::builder(root.clone());
    let mut channels = BTreeMap::new();
    let mut leaves = BTreeMap::new();
    for (i, (id, n)) in parsed.iter().enumerate() {
        let at = line(n.path.span().start);
        lines.entry(id.clone()).or_insert(at.unwrap_or(0));
        if i > 0 {
            b = b.node(id.clone());
        }
        if let Some(w) = n.weight {
            let hv = HalfVotes::from_weight(w)
                .ok_or_else(|| ConfigError::new("node.weight", format!("{w} is neither 1.0 nor 0.5")).at(at))?;
            if id.depth() != root.depth() + 1 {
                return Err(ConfigError::new("node.weight", format!("{id} is not a canton")).at(at));
            }
            b = b.weight(id, hv);
        }
        if let Some(e) = n.eligible {
            b = b.eligible(id, e);
        }
        if let Some(name) = &n.name {
            b = b.name(id, name.clone());
        }
        if i > 0 {
            let ch = match &n.channel {
                Some(c) => ChannelSpec::parse_notation(c.get_ref())
                    .map_err(|m| ConfigError::new("node.channel", m).at(line(c.span().start)))?,
                None => default_channel(),
            };
            channels.insert(id.clone(), ch);
        } else if n.channel.is_some() {
            return Err(ConfigError::new("node.channel", "the root has no parent to report to").at(at));
        }
        let counts = [n.yes, n.no, n.blank, n.invalid];
        if counts.iter().any(Option::is_some) || n.report_at.is_some() || n.final_at.is_some() {
            let [yes, no, blank, invalid] = counts.map(|c| c.unwrap_or(0));
            leaves.insert(
                id.clone(),
                LeafConfig {
                    truth: VoteCount::with_blank_invalid(yes, no, blank, invalid),
                    report_at: n.report_at,
                    final_at: n.final_at,
                },
            );
        }
    }
    let tree = b.build().map_err(|e| {
        let id = match &e {
            TreeError::NotUnderRoot(id, _)
            | TreeError::Orphan(id)
            | TreeError::Duplicate(id)
            | TreeError::UnknownNode(id) => id,
            TreeError::EligibleExceeded { parent, .. } => parent,
        };
        ConfigError::new("node", e.to_string()).at(lines.get(id).copied())
    })?;
    for id in leaves.keys() {
        if !tree.is_leaf(id) {
            return Err(ConfigError::new("node", format!("{id} has counts but is not a leaf"))
                .at(lines.get(id).copied()));
        }
    }
    Ok(TreeFile { tree, channels, leaves })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCountsFrom {
    results: String,
    referendum: String,
}

/// Splits each canton's final result over its leaves in proportion to the
/// leaves' electorates (largest remainder, ties to the earlier leaf).
fn distribute_results(file: &mut TreeFile, cf: &RawCountsFrom, base_dir: &Path) -> Result<(), ConfigError> {
    let path = base_dir.join(&cf.results);
    let f = std::fs::File::open(&path)
        .map_err(|e| ConfigError::new("counts_from.results", format!("{}: {e}", path.display())))?;
    let records = parse_results(f).map_err(|e| ConfigError::new("counts_from.results", e.to_string()))?;
    let per_canton = final_counts_by_canton(&records, &file.tree, &cf.referendum)
        .map_err(|e| ConfigError::new("counts_from.referendum", e.to_string()))?;
    for (canton, counts) in per_canton {
        let leaves: Vec<JurisdictionId> =
            file.tree.leaves().into_iter().filter(|l| canton == **l || canton.is_ancestor_of(l)).cloned().collect();
        let weights: Vec<u64> = leaves.iter().map(|l| file.tree.eligible(l).unwrap_or(1)).collect();
        let parts = [counts.yes, counts.no, counts.blank, counts.invalid].map(|n| split(n, &weights));
        for (i, leaf) in leaves.into_iter().enumerate() {
            if file.leaves.contains_key(&leaf) {
                return Err(ConfigError::new("counts_from", format!("counts for {leaf} given twice")));
            }
            let truth = VoteCount::with_blank_invalid(parts[0][i], parts[1][i], parts[2][i], parts[3][i]);
            file.leaves.insert(leaf, LeafConfig { truth, ..Default::default() });
        }
    }
    Ok(())
}

fn split(n: u64, weights: &[u64]) -> Vec<u64> {
    let total: u128 = weights.iter().map(|w| u128::from(*w)).sum::<u128>().max(1);
    let mut out: Vec<u64> = weights.iter().map(|w| (u128::from(n) * u128::from(*w) / total) as u64).collect();
    let mut rest = n - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|i| std::cmp::Reverse(u128::from(n) * u128::from(weights[*i]) % total));
    for i in order {
        if rest == 0 {
            break;
        }
        out[i] += 1;
        rest -= 1;
    }
    out
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCount {
    node: Spanned<String>,
    yes: u64,
    no: u64,
    #[serde(default)]
    blank: u64,
    #[serde(default)]
    invalid: u64,
    report_at: Option<Tick>,
    final_at: Option<Tick>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    from: Spanned<String>,
    channel: Option<Spanned<String>>,
    latency: Option<Tick>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawWrap {
    Word(String),
    Senders(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSecurity {
    #[serde(default = "wrap_all")]
    wrap: RawWrap,
    #[serde(default = "default_scheme")]
    scheme: String,
    #[serde(default)]
    key_seed: u64,
    #[serde(default)]
    relay: Option<String>,
    #[serde(default)]
    compromised: Vec<String>,
    #[serde(default)]
    revoked: Vec<String>,
    #[serde(default)]
    crl_version: u64,
    trust_store: Option<String>,
}

fn wrap_all() -> RawWrap {
    RawWrap::Word("all".into())
}

fn default_scheme() -> String {
    "ed25519".into()
}

impl RawSecurity {
    fn validate(&self, tree: &JurisdictionTree, base_dir: &Path) -> Result<SecurityConfig, ConfigError> {
        let ids = |list: &[String], field: &str| -> Result<BTreeSet<JurisdictionId>, ConfigError> {
            list.iter()
                .map(|s| {
                    let id = parse_id(s, field)?;
                    if tree.contains(&id) {
                        Ok(id)
                    } else {
                        Err(ConfigError::new(field, format!("{id} is not in the tree")))
                    }
                })
                .collect()
        };
        let wrap = match &self.wrap {
            RawWrap::Word(w) if w == "all" => WrapScope::All,
            RawWrap::Word(w) if w == "none" => WrapScope::Senders(BTreeSet::new()),
            RawWrap::Word(w) => {
                return Err(ConfigError::new("security.wrap", format!("{w:?}: expected \"all\", \"none\" or a list")))
            }
            RawWrap::Senders(list) => WrapScope::Senders(ids(list, "security.wrap")?),
        };
        let relay = match self.relay.as_deref() {
            None | Some("countersign") => RelayMode::Countersign,
            Some("resign") => RelayMode::Resign,
            Some(other) => {
                return Err(ConfigError::new("security.relay", format!("{other:?}: expected countersign or resign")))
            }
        };
        Ok(SecurityConfig {
            wrap,
            scheme: self.scheme.parse().map_err(|m: String| ConfigError::new("security.scheme", m))?,
            key_seed: self.key_seed,
            relay,
            compromised: ids(&self.compromised, "security.compromised")?,
            revoked: ids(&self.revoked, "security.revoked")?,
            crl_version: self.crl_version,
            trust_store: self.trust_store.as_ref().map(|p| base_dir.join(p)),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCounts {
    yes: u64,
    no: u64,
    #[serde(default)]
    blank: u64,
    #[serde(default)]
    invalid: u64,
}

impl RawCounts {
    fn get(&self) -> VoteCount {
        VoteCount::with_blank_invalid(self.yes, self.no, self.blank, self.invalid)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawMutation {
    Word(String),
    Table(RawMutationTable),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMutationTable {
    shift: Option<i64>,
    set: Option<RawCounts>,
    flip_popular_to: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    kind: Spanned<String>,
    from: String,
    to: Option<String>,
    mutation: Option<RawMutation>,
    hold: Option<Tick>,
    forged: Option<RawCounts>,
    forged_seq: Option<u64>,
    seq_offset: Option<u64>,
    reports: Option<String>,
    first: Option<u64>,
    election: Option<String>,
    #[serde(default)]
    omniscient: bool,
}

impl RawAttack {
    fn validate(
        &self,
        index: usize,
        tree: &JurisdictionTree,
        truth: &VoteCount,
        text: &str,
    ) -> Result<AttackSpec, ConfigError> {
        let at = Some(line_of(text, self.kind.span().start));
        let field = |f: &str| format!("attack[{index}].{f}");
        let err = |f: &str, m: String| ConfigError::new(field(f), m).at(at);
        let from = parse_id(&self.from, &field("from")).map_err(|e| e.at(at))?;
        let to = match &self.to {
            Some(t) => parse_id(t, &field("to")).map_err(|e| e.at(at))?,
            None => from.parent().ok_or_else(|| err("from", format!("{from} has no parent")))?,
        };
        if !tree.contains(&from) || !to.is_parent_of(&from) {
            return Err(err("from", format!("{from} -> {to} is not an edge of the tree")));
        }
        let unexpected = |name: &str, present: bool| {
            if present {
                Err(err(name, format!("not used by {} attacks", self.kind.get_ref())))
            } else {
                Ok(())
            }
        };
        let kind = match self.kind.get_ref().as_str() {
            "tamper" => {
                unexpected("hold", self.hold.is_some())?;
                unexpected("forged", self.forged.is_some() || self.forged_seq.is_some() || self.seq_offset.is_some())?;
                let m = self.mutation.as_ref().ok_or_else(|| err("mutation", "required for tamper".into()))?;
                AttackKind::Tamper(self.mutation(m, truth, &err)?)
            }
            "delay" => {
                unexpected("mutation", self.mutation.is_some())?;
                unexpected("forged", self.forged.is_some() || self.forged_seq.is_some() || self.seq_offset.is_some())?;
                AttackKind::Delay { hold: self.hold.ok_or_else(|| err("hold", "required for delay".into()))? }
            }
            "front_run" => {
                unexpected("mutation", self.mutation.is_some())?;
                unexpected("hold", self.hold.is_some())?;
                let forged = self.forged.as_ref().ok_or_else(|| err("forged", "required for front_run".into()))?;
                let seq = match (self.forged_seq, self.seq_offset) {
                    (Some(_), Some(_)) => return Err(err("forged_seq", "give forged_seq or seq_offset, not both".into())),
                    (Some(s), None) => SeqStrategy::Fixed(s),
                    (None, Some(k)) => SeqStrategy::Offset(k),
                    (None, None) => SeqStrategy::default(),
                };
                AttackKind::FrontRun { forged: forged.get(), seq }
            }
            other => return Err(err("kind", format!("{other:?}: expected tamper, delay or front_run"))),
        };
        let kind_filter = match self.reports.as_deref() {
            None | Some("preliminary") => ReportKind::Preliminary,
            Some("final") => ReportKind::Final,
            Some(other) => return Err(err("reports", format!("{other:?}: expected preliminary or final"))),
        };
        Ok(AttackSpec {
            kind,
            target_edge: (from, to),
            trigger: Trigger { kind: kind_filter, election: self.election.clone(), first: self.first },
            omniscient: self.omniscient,
        })
    }

    fn mutation(
        &self,
        m: &RawMutation,
        truth: &VoteCount,
        err: &dyn Fn(&str, String) -> ConfigError,
    ) -> Result<Mutation, ConfigError> {
        match m {
            RawMutation::Word(w) if w == "swap" => Ok(Mutation::SwapYesNo),
            RawMutation::Word(w) => Err(err("mutation", format!("{w:?}: expected \"swap\" or a table"))),
            RawMutation::Table(t) => match (t.shift, &t.set, &t.flip_popular_to) {
                (Some(d), None, None) => Ok(Mutation::Shift(d)),
                (None, Some(c), None) => Ok(Mutation::SetCounts(c.get())),
                (None, None, Some(target)) => {
                    if !self.omniscient {
                        return Err(err("mutation", "flip_popular_to reads the ground truth; set omniscient = true".into()));
                    }
                    let target = match target.as_str() {
                        "accepted" => Decision::Accepted,
                        "rejected" => Decision::Rejected,
                        other => return Err(err("mutation", format!("{other:?}: expected accepted or rejected"))),
                    };
                    let k = popular_flip_cost(truth, target).map_err(|e| err("mutation", e.to_string()))?;
                    let k = i64::try_from(k).map_err(|_| err("mutation", "shift too large".into()))?;
                    Ok(Mutation::Shift(if target == Decision::Accepted { k } else { -k }))
                }
                _ => Err(err("mutation", "give exactly one of shift, set, flip_popular_to".into())),
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    election: Spanned<String>,
    #[serde(default)]
    seed: u64,
    tree: Option<Spanned<String>>,
    #[serde(default)]
    node: Vec<RawNode>,
    #[serde(default)]
    count: Vec<RawCount>,
    counts_from: Option<RawCountsFrom>,
    #[serde(default)]
    edge: Vec<RawEdge>,
    #[serde(default)]
    timing: Timing,
    noise: Option<NoiseModel>,
    security: Option<RawSecurity>,
    #[serde(default)]
    attack: Vec<RawAttack>,
}
