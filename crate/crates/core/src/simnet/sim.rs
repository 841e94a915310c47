use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adversary::{
    apply_delay, apply_front_run, apply_tamper, AttackKind, AttackSpec, CapabilityError, Mutation,
};
use crate::secauth::{
    sign_report, verify_authentic, verify_report, wrap_channel, Certificate, Pki, ReplayGuard,
    RevocationList, SecAuthError, SignedReport, TrustStore,
};
use crate::tally::{accumulate, JurisdictionId, VoteCount};

use super::config::{ConfigError, RelayMode, ScenarioConfig};
use super::node::NodeState;
use super::trace::{EventTrace, TraceEvent, TraceRecord};
use super::{ChannelSpec, Report, ReportKind, Tick};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("attack[{index}]: {source}")]
    Capability { index: usize, source: CapabilityError },
    #[error("security: {0}")]
    Security(#[from] SecAuthError),
}

/// What a signed channel carries: the sender's signed report and, in
/// countersign mode, the signed reports of the sender's subordinates that
/// the accumulation is built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub signed: SignedReport,
    pub relayed: Vec<SignedReport>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub from: JurisdictionId,
    pub to: JurisdictionId,
    pub report: Report,
    pub envelope: Option<Envelope>,
    /// Injected by the adversary; receivers never see this flag.
    pub forged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventPayload {
    NodeEmit(JurisdictionId, ReportKind),
    Deliver(Box<Delivery>),
}

/// A scheduled event. Events run in `(time, seq)` order; `seq` is assigned
/// when the event is scheduled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent {
    pub time: Tick,
    pub seq: u64,
    pub payload: EventPayload,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Security {
    pki: Pki,
    trusted_root: Certificate,
    crl: RevocationList,
    relay: RelayMode,
    guards: BTreeMap<JurisdictionId, ReplayGuard>,
    /// Latest accepted signed report per (receiver, sender).
    accepted: BTreeMap<JurisdictionId, BTreeMap<JurisdictionId, SignedReport>>,
}

struct ArmedAttack {
    spec: AttackSpec,
    /// Channel as the adversary sees it (weakened when it holds the key).
    channel: ChannelSpec,
    fired: u64,
}

/// A scenario ready to run. Fully determined by its config and seed.
pub struct Simulation {
    cfg: ScenarioConfig,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<SimEvent>>,
    next_seq: u64,
    nodes: BTreeMap<JurisdictionId, NodeState>,
    channels: BTreeMap<JurisdictionId, ChannelSpec>,
    postal: ChannelSpec,
    attacks: Vec<ArmedAttack>,
    security: Option<Security>,
    trace: EventTrace,
}

pub fn build_scenario(cfg: ScenarioConfig) -> Result<Simulation, BuildError> {
    let tree = &cfg.tree;
    if cfg.election_id.is_empty() || cfg.election_id.contains(['\n', '=']) {
        return Err(ConfigError::new("election", "must be nonempty without '=' or line breaks").into());
    }
    for leaf in tree.leaves() {
        if !cfg.leaves.contains_key(leaf) {
            return Err(ConfigError::new("count", format!("no ground-truth counts for leaf {leaf}")).into());
        }
    }
    if let Some(id) = cfg.leaves.keys().find(|id| !tree.contains(id) || !tree.is_leaf(id)) {
        return Err(ConfigError::new("count", format!("{id} is not a leaf of the tree")).into());
    }
    accumulate(cfg.leaves.values().map(|l| &l.truth)).map_err(|e| ConfigError::new("count", e.to_string()))?;

    let mut channels = BTreeMap::new();
    for (child, _) in tree.edges() {
        let ch = cfg
            .channels
            .get(child)
            .ok_or_else(|| ConfigError::new("channel", format!("no channel for the edge from {child}")))?;
        channels.insert(child.clone(), ch.clone());
    }

    let security = match &cfg.security {
        None => None,
        Some(sec) => {
            let pki = Pki::bootstrap(tree, sec.scheme, sec.key_seed);
            for (child, parent) in tree.edges() {
                if sec.wrap.covers(child) {
                    let wrapped = wrap_channel(&channels[child], &pki, child, parent)?;
                    channels.insert(child.clone(), wrapped);
                }
            }
            let trusted_root = match &sec.trust_store {
                Some(dir) => TrustStore::load(dir)?.root,
                None => pki.root().clone(),
            };
            let serials = sec
                .revoked
                .iter()
                .map(|id| pki.certificate(id).map(|c| c.serial).ok_or_else(|| SecAuthError::Provisioning(id.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            Some(Security {
                trusted_root,
                crl: RevocationList::with_revoked(sec.crl_version, serials),
                relay: sec.relay,
                guards: BTreeMap::new(),
                accepted: BTreeMap::new(),
                pki,
            })
        }
    };

    let postal = ChannelSpec::postal();
    let mut attacks = Vec::new();
    for (index, spec) in cfg.attacks.iter().enumerate() {
        let (from, to) = &spec.target_edge;
        if !tree.contains(from) || !to.is_parent_of(from) {
            let source = CapabilityError::NoSuchEdge { from: from.clone(), to: to.clone() };
            return Err(BuildError::Capability { index, source });
        }
        let mut channel = match spec.trigger.kind {
            ReportKind::Preliminary => channels[from].clone(),
            ReportKind::Final => postal.clone(),
        };
        let stolen = cfg.security.as_ref().is_some_and(|s| s.compromised.contains(from));
        if channel.signed && stolen {
            channel.integrity = false;
            channel.authenticity = false;
        }
        spec.check_capability(&channel).map_err(|source| BuildError::Capability { index, source })?;
        attacks.push(ArmedAttack { spec: spec.clone(), channel, fired: 0 });
    }

    let mut nodes = BTreeMap::new();
    for id in tree.nodes() {
        let state = match cfg.leaves.get(id) {
            Some(l) => NodeState::leaf(id.clone(), cfg.election_id.clone(), l.truth),
            None => NodeState::new(id.clone(), cfg.election_id.clone()),
        };
        nodes.insert(id.clone(), state);
    }

    let mut sim = Simulation {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        queue: BinaryHeap::new(),
        next_seq: 0,
        nodes,
        channels,
        postal,
        attacks,
        security,
        trace: EventTrace::default(),
        cfg,
    };
    sim.trace.header = sim.header();
    let t = sim.cfg.timing;
    let leaves: Vec<JurisdictionId> = sim.cfg.tree.leaves().into_iter().filter(|l| *l != sim.cfg.tree.root()).cloned().collect();
    for leaf in leaves {
        let plan = sim.cfg.leaves[&leaf];
        let prelim = plan.report_at.unwrap_or_else(|| t.prelim_start + sim.rng.gen_range(0..=t.prelim_spread));
        let fin = plan.final_at.unwrap_or_else(|| t.final_start + sim.rng.gen_range(0..=t.final_spread));
        sim.schedule(prelim, EventPayload::NodeEmit(leaf.clone(), ReportKind::Preliminary));
        sim.schedule(fin, EventPayload::NodeEmit(leaf, ReportKind::Final));
    }
    Ok(sim)
}

/// Runs every event to quiescence.
pub fn run(mut sim: Simulation) -> EventTrace {
    while let Some(Reverse(ev)) = sim.queue.pop() {
        match ev.payload {
            EventPayload::NodeEmit(node, kind) => sim.emit(ev.time, node, kind),
            EventPayload::Deliver(d) => sim.deliver(ev.time, *d),
        }
    }
    sim.trace
}

impl Simulation {
    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// Effective preliminary channel of the edge from `sender`.
    pub fn channel(&self, sender: &JurisdictionId) -> Option<&ChannelSpec> {
        self.channels.get(sender)
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    fn header(&self) -> Vec<String> {
        use super::trace::escape;
        let omniscient = self.attacks.iter().any(|a| a.spec.omniscient);
        let signed = self.channels.values().filter(|c| c.signed).count();
        let mut h = vec![
            "# tallynet event trace v1".to_string(),
            format!(
                "scenario election={} seed={} nodes={} edges={} signed_edges={} mode={}",
                escape(&self.cfg.election_id),
                self.cfg.seed,
                self.cfg.tree.nodes().len(),
                self.channels.len(),
                signed,
                if omniscient { "omniscient" } else { "blind" }
            ),
        ];
        for (i, a) in self.attacks.iter().enumerate() {
            h.push(format!(
                "attack index={i} kind={} from={} to={} trigger={} params={} mode={}",
                a.spec.kind.name(),
                a.spec.target_edge.0,
                a.spec.target_edge.1,
                escape(&a.spec.trigger.to_string()),
                escape(&a.spec.parameters()),
                if a.spec.omniscient { "omniscient" } else { "blind" }
            ));
        }
        h
    }

    fn schedule(&mut self, time: Tick, payload: EventPayload) {
        self.next_seq += 1;
        self.queue.push(Reverse(SimEvent { time, seq: self.next_seq, payload }));
    }

    fn record(&mut self, time: Tick, event: TraceEvent) {
        self.trace.records.push(TraceRecord { time, event });
    }

    fn emit(&mut self, now: Tick, node: JurisdictionId, kind: ReportKind) {
        let truth = self.nodes[&node].ground_truth.expect("leaves carry ground truth");
        let counts = match (kind, self.cfg.noise) {
            (ReportKind::Preliminary, Some(noise)) if noise.magnitude > 0 && self.rng.gen_bool(noise.probability) => {
                let d = self.rng.gen_range(1..=noise.magnitude) as i64;
                let d = if self.rng.gen_bool(0.5) { d } else { -d };
                Mutation::Shift(d).apply(&truth)
            }
            _ => truth,
        };
        let state = self.nodes.get_mut(&node).expect("known node");
        let seq = state.next_sequence();
        let report = match kind {
            ReportKind::Preliminary => Report::preliminary(self.cfg.election_id.clone(), node.clone(), seq, counts),
            ReportKind::Final => Report::final_report(self.cfg.election_id.clone(), node.clone(), seq, counts),
        }
        .at(now);
        self.record(now, TraceEvent::Emit { node, kind, seq, counts });
        self.send(now, report);
    }

    fn sign(&self, report: &Report) -> Option<SignedReport> {
        let sec = self.security.as_ref()?;
        let key = sec.pki.key(&report.sender)?;
        let chain = sec.pki.chain(&report.sender)?;
        sign_report(key, chain, report.clone()).ok()
    }

    fn envelope(&mut self, report: &Report, channel: &ChannelSpec) -> Option<Envelope> {
        if !channel.signed || report.kind != ReportKind::Preliminary {
            return None;
        }
        let signed = self.sign(report)?;
        let sec = self.security.as_ref()?;
        let relayed = match sec.relay {
            RelayMode::Countersign => {
                sec.accepted.get(&report.sender).map(|m| m.values().cloned().collect()).unwrap_or_default()
            }
            RelayMode::Resign => Vec::new(),
        };
        self.trace.captured.push(signed.clone());
        Some(Envelope { signed, relayed })
    }

    fn send(&mut self, now: Tick, report: Report) {
        let from = report.sender.clone();
        let to = from.parent().expect("only the root has no parent");
        let channel = match report.kind {
            ReportKind::Preliminary => self.channels[&from].clone(),
            ReportKind::Final => self.postal.clone(),
        };
        let jitter = match self.cfg.timing.jitter {
            0 => 0,
            j => self.rng.gen_range(0..=j),
        };
        let mut arrive = now + channel.base_latency + jitter;
        let mut envelope = self.envelope(&report, &channel);
        let mut report = report;
        self.record(
            now,
            TraceEvent::Send {
                from: from.clone(),
                to: to.clone(),
                channel: channel.name.clone(),
                kind: report.kind,
                seq: report.sequence_no,
                counts: report.counts,
                arrive,
            },
        );

        for i in 0..self.attacks.len() {
            let a = &self.attacks[i];
            if a.spec.target_edge != (from.clone(), to.clone()) || !a.spec.trigger.matches(&report, a.fired) {
                continue;
            }
            self.attacks[i].fired += 1;
            let a = &self.attacks[i];
            let (kind, wire) = (a.spec.kind.clone(), a.channel.clone());
            match kind {
                AttackKind::Tamper(m) => {
                    report = apply_tamper(&report, &m, &wire).expect("gated at build time");
                    if let Some(env) = envelope.as_mut() {
                        // the adversary re-signs with the stolen key
                        if let Some(s) = self.sign(&report) {
                            env.signed = s;
                            self.trace.captured.push(env.signed.clone());
                        }
                    }
                    self.intercept(now, i, "tamper", &report, arrive);
                }
                AttackKind::Delay { hold } => {
                    arrive = apply_delay(&report, arrive, hold, &wire).expect("gated at build time").at;
                    self.intercept(now, i, "delay", &report, arrive);
                }
                AttackKind::FrontRun { forged, seq } => {
                    let fake = Report { counts: forged, sequence_no: seq.sequence(report.sequence_no), ..report.clone() };
                    let inj = apply_front_run((&from, &to), fake, &wire).expect("gated at build time");
                    let env = match channel.signed {
                        true => self.sign(&inj.report).map(|signed| {
                            self.trace.captured.push(signed.clone());
                            Envelope { signed, relayed: Vec::new() }
                        }),
                        false => None,
                    };
                    self.intercept(now, i, "inject", &inj.report, now);
                    let d = Delivery { from: inj.edge.0, to: inj.edge.1, report: inj.report, envelope: env, forged: true };
                    self.schedule(now, EventPayload::Deliver(Box::new(d)));
                }
            }
        }

        let forged = false;
        let d = Delivery { from, to, report, envelope, forged };
        self.schedule(arrive, EventPayload::Deliver(Box::new(d)));
    }

    fn intercept(&mut self, now: Tick, attack: usize, action: &str, report: &Report, arrive: Tick) {
        let (from, to) = self.attacks[attack].spec.target_edge.clone();
        self.record(
            now,
            TraceEvent::Intercept {
                attack,
                action: action.to_string(),
                from,
                to,
                seq: report.sequence_no,
                counts: report.counts,
                arrive,
            },
        );
    }

    fn detect(&mut self, now: Tick, d: &Delivery, reason: String) {
        self.record(
            now,
            TraceEvent::Detect {
                node: d.to.clone(),
                from: d.from.clone(),
                kind: d.report.kind,
                seq: d.report.sequence_no,
                reason,
            },
        );
    }

    /// Signature, chain, freshness and (countersign mode) relay checks on a
    /// signed channel.
    fn check_signed(&mut self, d: &Delivery) -> Result<(), String> {
        let Some(env) = &d.envelope else {
            return Err("Unsigned".into());
        };
        let election = self.cfg.election_id.clone();
        let sec = self.security.as_mut().expect("signed channels imply security");
        let guard = sec.guards.entry(d.to.clone()).or_default();
        verify_report(&env.signed, &sec.trusted_root, &sec.crl, &election, guard).map_err(|r| r.to_string())?;
        let children = self.cfg.tree.children(&d.from);
        let expect_relay = sec.relay == RelayMode::Countersign
            && !children.is_empty()
            && children.iter().all(|c| self.channels[c].signed);
        if expect_relay {
            let mut senders = Vec::new();
            for r in &env.relayed {
                let ok = children.contains(&r.report.sender)
                    && !senders.contains(&&r.report.sender)
                    && verify_authentic(r, &sec.trusted_root, &sec.crl, &election).is_ok();
                if !ok {
                    return Err("RelayMismatch".into());
                }
                senders.push(&r.report.sender);
            }
            let sum = accumulate(env.relayed.iter().map(|r| &r.report.counts));
            if sum.ok() != Some(env.signed.report.counts) {
                return Err("RelayMismatch".into());
            }
        }
        Ok(())
    }

    fn deliver(&mut self, now: Tick, d: Delivery) {
        self.record(
            now,
            TraceEvent::Deliver {
                from: d.from.clone(),
                to: d.to.clone(),
                kind: d.report.kind,
                seq: d.report.sequence_no,
                counts: d.report.counts,
                forged: d.forged,
            },
        );
        let root = self.cfg.tree.root().clone();
        match d.report.kind {
            ReportKind::Preliminary => {
                if self.channels[&d.from].signed {
                    if let Err(reason) = self.check_signed(&d) {
                        self.detect(now, &d, reason);
                        return;
                    }
                }
                let node = self.nodes.get_mut(&d.to).expect("receiver exists");
                match node.receive_preliminary(&d.report, &self.cfg.tree, now) {
                    Err(f) => self.detect(now, &d, f.to_string()),
                    Ok(up) => {
                        self.accept(now, &d);
                        if let (Some(sec), Some(env)) = (self.security.as_mut(), &d.envelope) {
                            sec.accepted.entry(d.to.clone()).or_default().insert(d.from.clone(), env.signed.clone());
                        }
                        if d.to == root {
                            let per_child = self.nodes[&root].preliminary_snapshot();
                            self.publish(now, ReportKind::Preliminary, up.counts, per_child);
                        } else {
                            self.send(now, up);
                        }
                    }
                }
            }
            ReportKind::Final => {
                let node = self.nodes.get_mut(&d.to).expect("receiver exists");
                match node.receive_final(&d.report, &self.cfg.tree, now) {
                    Err(e) => {
                        let reason = match e {
                            super::node::FinalError::DuplicateFinal(_) => "DuplicateFinal",
                            super::node::FinalError::UnknownSender(_) => "UnknownSender",
                            super::node::FinalError::WrongElection => "WrongElection",
                            super::node::FinalError::Overflow => "Overflow",
                        };
                        self.detect(now, &d, reason.into());
                    }
                    Ok(up) => {
                        self.accept(now, &d);
                        match up {
                            Some(up) if d.to == root => {
                                let per_child = self.nodes[&root].final_snapshot();
                                self.publish(now, ReportKind::Final, up.counts, per_child);
                            }
                            Some(up) => self.send(now, up),
                            None => {}
                        }
                    }
                }
            }
        }
    }

    fn accept(&mut self, now: Tick, d: &Delivery) {
        self.record(
            now,
            TraceEvent::Accept { node: d.to.clone(), from: d.from.clone(), kind: d.report.kind, seq: d.report.sequence_no },
        );
    }

    fn publish(&mut self, now: Tick, kind: ReportKind, counts: VoteCount, per_child: BTreeMap<JurisdictionId, VoteCount>) {
        let children = self.cfg.tree.children(self.cfg.tree.root()).len();
        self.record(now, TraceEvent::Publish { kind, counts, children, per_child });
    }
}
