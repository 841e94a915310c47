//! Attacks on preliminary reports in transit, gated by what a channel
//! allows, and the detection accounting that compares what was published
//! against the final results.
//!
//! | attack   | needs                 |
//! |----------|-----------------------|
//! | tamper   | no channel integrity  |
//! | front-run| no channel authenticity |
//! | delay    | a delayable channel   |

mod detect;

use std::fmt;

use thiserror::Error;

use crate::simnet::{ChannelSpec, Report, ReportKind, Tick};
use crate::tally::{JurisdictionId, VoteCount};

pub use detect::{detection_report, CoverageGap, DetectionSummary, Divergence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CapabilityError {
    #[error("channel {0} protects integrity; reports cannot be modified in flight")]
    Integrity(String),
    #[error("channel {0} authenticates senders; forged reports cannot be injected")]
    Authenticity(String),
    #[error("channel {0} cannot be delayed")]
    NotDelayable(String),
    #[error("forged report names {claimed} but the edge sender is {sender}")]
    ForeignSender { claimed: JurisdictionId, sender: JurisdictionId },
    #[error("{from} does not report to {to}")]
    NoSuchEdge { from: JurisdictionId, to: JurisdictionId },
}

/// How a tampered report's counts are rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    SwapYesNo,
    SetCounts(VoteCount),
    /// Moves ballots from no to yes (positive) or yes to no (negative),
    /// capped by the ballots available so counts never go negative.
    Shift(i64),
}

impl Mutation {
    pub fn apply(&self, c: &VoteCount) -> VoteCount {
        match *self {
            Mutation::SwapYesNo => VoteCount { yes: c.no, no: c.yes, ..*c },
            Mutation::SetCounts(v) => v,
            Mutation::Shift(d) if d >= 0 => {
                let k = d.unsigned_abs().min(c.no);
                VoteCount { yes: c.yes + k, no: c.no - k, ..*c }
            }
            Mutation::Shift(d) => {
                let k = d.unsigned_abs().min(c.yes);
                VoteCount { yes: c.yes - k, no: c.no + k, ..*c }
            }
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mutation::SwapYesNo => f.write_str("swap"),
            Mutation::SetCounts(c) => write!(f, "set:{}:{}:{}:{}", c.yes, c.no, c.blank, c.invalid),
            Mutation::Shift(d) => write!(f, "shift:{d}"),
        }
    }
}

/// Which reports on the target edge an attack acts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger {
    pub kind: ReportKind,
    pub election: Option<String>,
    /// Only the first N matching reports; all of them when `None`.
    pub first: Option<u64>,
}

impl Default for Trigger {
    fn default() -> Self {
        Trigger { kind: ReportKind::Preliminary, election: None, first: None }
    }
}

impl Trigger {
    /// `already` counts earlier reports this trigger fired on.
    pub fn matches(&self, report: &Report, already: u64) -> bool {
        report.kind == self.kind
            && self.election.as_deref().is_none_or(|e| e == report.election_id)
            && self.first.is_none_or(|n| already < n)
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(e) = &self.election {
            write!(f, "@{e}")?;
        }
        match self.first {
            Some(n) => write!(f, ",first:{n}"),
            None => f.write_str(",all"),
        }
    }
}

/// Sequence number placed on a forged report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqStrategy {
    /// Genuine sequence number plus an offset, so the genuine report that
    /// follows looks stale.
    Offset(u64),
    Fixed(u64),
}

impl Default for SeqStrategy {
    fn default() -> Self {
        SeqStrategy::Offset(1000)
    }
}

impl SeqStrategy {
    pub fn sequence(self, genuine: u64) -> u64 {
        match self {
            SeqStrategy::Offset(k) => genuine.saturating_add(k),
            SeqStrategy::Fixed(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackKind {
    Tamper(Mutation),
    Delay { hold: Tick },
    FrontRun { forged: VoteCount, seq: SeqStrategy },
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::Tamper(_) => "tamper",
            AttackKind::Delay { .. } => "delay",
            AttackKind::FrontRun { .. } => "front_run",
        }
    }
}

/// An attack fixed before the run. Blind attacks cannot see any counts in
/// advance; `omniscient` marks attacks whose parameters were derived from
/// the ground truth and is shown in the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub target_edge: (JurisdictionId, JurisdictionId),
    pub trigger: Trigger,
    pub omniscient: bool,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, from: JurisdictionId, to: JurisdictionId) -> Self {
        AttackSpec { kind, target_edge: (from, to), trigger: Trigger::default(), omniscient: false }
    }

    pub fn with_trigger(mut self, trigger: Trigger) -> Self {
        self.trigger = trigger;
        self
    }

    /// Checks the attack against the channel its triggering reports travel on.
    pub fn check_capability(&self, channel: &ChannelSpec) -> Result<(), CapabilityError> {
        match &self.kind {
            AttackKind::Tamper(_) if channel.integrity => Err(CapabilityError::Integrity(channel.name.clone())),
            AttackKind::FrontRun { .. } if channel.authenticity => {
                Err(CapabilityError::Authenticity(channel.name.clone()))
            }
            AttackKind::Delay { .. } if !channel.delayable => Err(CapabilityError::NotDelayable(channel.name.clone())),
            _ => Ok(()),
        }
    }

    pub fn parameters(&self) -> String {
        match &self.kind {
            AttackKind::Tamper(m) => m.to_string(),
            AttackKind::Delay { hold } => format!("hold:{hold}"),
            AttackKind::FrontRun { forged, seq } => {
                let seq = match seq {
                    SeqStrategy::Offset(k) => format!("seq+{k}"),
                    SeqStrategy::Fixed(s) => format!("seq={s}"),
                };
                format!("forged:{}:{}:{}:{},{seq}", forged.yes, forged.no, forged.blank, forged.invalid)
            }
        }
    }
}

/// Replaces the report's counts in flight.
pub fn apply_tamper(report: &Report, mutation: &Mutation, channel: &ChannelSpec) -> Result<Report, CapabilityError> {
    if channel.integrity {
        return Err(CapabilityError::Integrity(channel.name.clone()));
    }
    Ok(Report { counts: mutation.apply(&report.counts), ..report.clone() })
}

/// A delivery moved later in time; the content is untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledDelivery {
    pub report: Report,
    pub at: Tick,
}

pub fn apply_delay(
    report: &Report,
    scheduled_at: Tick,
    hold: Tick,
    channel: &ChannelSpec,
) -> Result<ScheduledDelivery, CapabilityError> {
    if !channel.delayable {
        return Err(CapabilityError::NotDelayable(channel.name.clone()));
    }
    Ok(ScheduledDelivery { report: report.clone(), at: scheduled_at.saturating_add(hold) })
}

/// A forged report to be delivered on `edge` ahead of the genuine one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub edge: (JurisdictionId, JurisdictionId),
    pub report: Report,
}

pub fn apply_front_run(
    edge: (&JurisdictionId, &JurisdictionId),
    forged: Report,
    channel: &ChannelSpec,
) -> Result<Injection, CapabilityError> {
    if channel.authenticity {
        return Err(CapabilityError::Authenticity(channel.name.clone()));
    }
    if &forged.sender != edge.0 {
        return Err(CapabilityError::ForeignSender { claimed: forged.sender, sender: edge.0.clone() });
    }
    Ok(Injection { edge: (edge.0.clone(), edge.1.clone()), report: forged })
}
