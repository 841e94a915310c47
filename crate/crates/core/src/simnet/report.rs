use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tally::{JurisdictionId, VoteCount};

/// Simulated time in integer ticks.
pub type Tick = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReportKind {
    Preliminary,
    Final,
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportKind::Preliminary => "Preliminary",
            ReportKind::Final => "Final",
        })
    }
}

impl FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Preliminary" => Ok(ReportKind::Preliminary),
            "Final" => Ok(ReportKind::Final),
            other => Err(format!("unknown report kind {other:?}")),
        }
    }
}

/// One jurisdiction's result as it travels up the hierarchy.
///
/// `sequence_no` starts at 1 and strictly increases across the reports a
/// sender emits for one election.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Report {
    pub election_id: String,
    pub sender: JurisdictionId,
    pub sequence_no: u64,
    pub counts: VoteCount,
    pub kind: ReportKind,
    /// Not part of the signed or serialized form.
    pub emitted_at: Tick,
}

impl Report {
    pub fn preliminary(
        election_id: impl Into<String>,
        sender: JurisdictionId,
        sequence_no: u64,
        counts: VoteCount,
    ) -> Self {
        Report {
            election_id: election_id.into(),
            sender,
            sequence_no,
            counts,
            kind: ReportKind::Preliminary,
            emitted_at: 0,
        }
    }

    pub fn final_report(
        election_id: impl Into<String>,
        sender: JurisdictionId,
        sequence_no: u64,
        counts: VoteCount,
    ) -> Self {
        Report { kind: ReportKind::Final, ..Report::preliminary(election_id, sender, sequence_no, counts) }
    }

    pub fn at(mut self, tick: Tick) -> Self {
        self.emitted_at = tick;
        self
    }
}
