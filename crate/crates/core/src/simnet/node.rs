use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::tally::{accumulate, JurisdictionId, JurisdictionTree, VoteCount};

use super::{Report, ReportKind, Tick};

/// Why an incoming preliminary report was discarded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FeasibilityFailure {
    OverEligible { total: u64, eligible: u64 },
    StaleSequence { seq: u64, last_seen: u64 },
    UnknownSender,
    WrongElection,
    Overflow,
}

impl fmt::Display for FeasibilityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityFailure::OverEligible { .. } => f.write_str("OverEligible"),
            FeasibilityFailure::StaleSequence { .. } => f.write_str("StaleSequence"),
            FeasibilityFailure::UnknownSender => f.write_str("UnknownSender"),
            FeasibilityFailure::WrongElection => f.write_str("WrongElection"),
            FeasibilityFailure::Overflow => f.write_str("Overflow"),
        }
    }
}

/// The plausibility test an office runs before forwarding a preliminary
/// report: the sender must be a direct subordinate, its total must not
/// exceed its electorate, and its sequence number must be fresh.
pub fn feasibility_check(
    report: &Report,
    tree: &JurisdictionTree,
    receiver: &JurisdictionId,
    election_id: &str,
    last_seen_seq: u64,
) -> Result<(), FeasibilityFailure> {
    if !tree.children(receiver).contains(&report.sender) {
        return Err(FeasibilityFailure::UnknownSender);
    }
    if report.election_id != election_id {
        return Err(FeasibilityFailure::WrongElection);
    }
    if let Some(eligible) = tree.eligible(&report.sender) {
        let total = report.counts.total();
        if total > eligible {
            return Err(FeasibilityFailure::OverEligible { total, eligible });
        }
    }
    if report.sequence_no <= last_seen_seq {
        return Err(FeasibilityFailure::StaleSequence { seq: report.sequence_no, last_seen: last_seen_seq });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FinalError {
    #[error("second final report from {0} differs from the first")]
    DuplicateFinal(JurisdictionId),
    #[error("final report from {0}, which is not a subordinate")]
    UnknownSender(JurisdictionId),
    #[error("final report for another election")]
    WrongElection,
    #[error("final accumulation overflowed")]
    Overflow,
}

/// One office in the hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub id: JurisdictionId,
    pub election_id: String,
    received_prelim: BTreeMap<JurisdictionId, Report>,
    received_final: BTreeMap<JurisdictionId, Report>,
    last_seen_seq: BTreeMap<(JurisdictionId, String), u64>,
    /// Counted ballots; leaf offices only.
    pub ground_truth: Option<VoteCount>,
    emitted: u64,
    final_emitted: bool,
}

impl NodeState {
    pub fn new(id: JurisdictionId, election_id: impl Into<String>) -> Self {
        NodeState {
            id,
            election_id: election_id.into(),
            received_prelim: BTreeMap::new(),
            received_final: BTreeMap::new(),
            last_seen_seq: BTreeMap::new(),
            ground_truth: None,
            emitted: 0,
            final_emitted: false,
        }
    }

    pub fn leaf(id: JurisdictionId, election_id: impl Into<String>, truth: VoteCount) -> Self {
        NodeState { ground_truth: Some(truth), ..NodeState::new(id, election_id) }
    }

    /// Next outgoing sequence number (1-based).
    pub fn next_sequence(&mut self) -> u64 {
        self.emitted += 1;
        self.emitted
    }

    pub fn last_seen(&self, child: &JurisdictionId, election: &str) -> u64 {
        self.last_seen_seq.get(&(child.clone(), election.to_string())).copied().unwrap_or(0)
    }

    /// Latest accepted preliminary counts per subordinate.
    pub fn preliminary_snapshot(&self) -> BTreeMap<JurisdictionId, VoteCount> {
        self.received_prelim.iter().map(|(k, r)| (k.clone(), r.counts)).collect()
    }

    pub fn final_snapshot(&self) -> BTreeMap<JurisdictionId, VoteCount> {
        self.received_final.iter().map(|(k, r)| (k.clone(), r.counts)).collect()
    }

    /// Runs the feasibility check and, on success, stores the report and
    /// returns the updated accumulation to forward upward right away. Full
    /// replacement totals are sent, not deltas.
    pub fn receive_preliminary(
        &mut self,
        report: &Report,
        tree: &JurisdictionTree,
        now: Tick,
    ) -> Result<Report, FeasibilityFailure> {
        debug_assert_eq!(report.kind, ReportKind::Preliminary);
        let last = self.last_seen(&report.sender, &report.election_id);
        feasibility_check(report, tree, &self.id, &self.election_id, last)?;
        let mut snapshot = self.preliminary_snapshot();
        snapshot.insert(report.sender.clone(), report.counts);
        let counts = accumulate(snapshot.values()).map_err(|_| FeasibilityFailure::Overflow)?;
        self.last_seen_seq
            .insert((report.sender.clone(), report.election_id.clone()), report.sequence_no);
        self.received_prelim.insert(report.sender.clone(), report.clone());
        let seq = self.next_sequence();
        Ok(Report::preliminary(self.election_id.clone(), self.id.clone(), seq, counts).at(now))
    }

    /// Stores a final report. Once every subordinate has reported, returns
    /// the accumulated final report, exactly once.
    pub fn receive_final(
        &mut self,
        report: &Report,
        tree: &JurisdictionTree,
        now: Tick,
    ) -> Result<Option<Report>, FinalError> {
        debug_assert_eq!(report.kind, ReportKind::Final);
        let children = tree.children(&self.id);
        if !children.contains(&report.sender) {
            return Err(FinalError::UnknownSender(report.sender.clone()));
        }
        if report.election_id != self.election_id {
            return Err(FinalError::WrongElection);
        }
        if let Some(prev) = self.received_final.get(&report.sender) {
            return if prev.counts == report.counts {
                Ok(None)
            } else {
                Err(FinalError::DuplicateFinal(report.sender.clone()))
            };
        }
        self.received_final.insert(report.sender.clone(), report.clone());
        if self.final_emitted || children.iter().any(|c| !self.received_final.contains_key(c)) {
            return Ok(None);
        }
        let counts =
            accumulate(self.received_final.values().map(|r| &r.counts)).map_err(|_| FinalError::Overflow)?;
        self.final_emitted = true;
        let seq = self.next_sequence();
        Ok(Some(Report::final_report(self.election_id.clone(), self.id.clone(), seq, counts).at(now)))
    }
}
