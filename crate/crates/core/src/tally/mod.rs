//! Vote counts, the jurisdiction hierarchy, referendum outcome rules and the
//! minimum-flip solvers.

mod flips;
mod outcome;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use flips::{
    min_flips_cantonal, min_flips_double, min_flips_popular, min_flips_popular_allocated,
    popular_flip_cost, FlipPlan,
};
pub use outcome::{
    cantonal_outcome, popular_outcome, referendum_outcome, CantonalTally, Decision, MajorityRule,
    Outcome, ReferendumSpec,
};
pub use tree::{HalfVotes, JurisdictionTree, TreeBuilder, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TallyError {
    #[error("no count for canton {0}")]
    MissingCanton(JurisdictionId),
    #[error("count given for {0}, which is not a weighted canton of the tree")]
    UnknownCanton(JurisdictionId),
    #[error("vote count overflow while accumulating")]
    ArithmeticOverflow,
    #[error("target {target} cannot be reached: {reason}")]
    Infeasible { target: Decision, reason: String },
    #[error("rule {0:?} does not apply to this solver")]
    RuleMismatch(MajorityRule),
}

/// Ballot counts for one jurisdiction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoteCount {
    pub yes: u64,
    pub no: u64,
    #[serde(default)]
    pub blank: u64,
    #[serde(default)]
    pub invalid: u64,
}

impl VoteCount {
    pub const ZERO: VoteCount = VoteCount { yes: 0, no: 0, blank: 0, invalid: 0 };

    pub const fn new(yes: u64, no: u64) -> Self {
        VoteCount { yes, no, blank: 0, invalid: 0 }
    }

    pub const fn with_blank_invalid(yes: u64, no: u64, blank: u64, invalid: u64) -> Self {
        VoteCount { yes, no, blank, invalid }
    }

    /// All ballots, saturating at `u64::MAX`.
    pub fn total(&self) -> u64 {
        self.yes
            .saturating_add(self.no)
            .saturating_add(self.blank)
            .saturating_add(self.invalid)
    }

    pub fn checked_add(&self, other: &VoteCount) -> Option<VoteCount> {
        Some(VoteCount {
            yes: self.yes.checked_add(other.yes)?,
            no: self.no.checked_add(other.no)?,
            blank: self.blank.checked_add(other.blank)?,
            invalid: self.invalid.checked_add(other.invalid)?,
        })
    }

    pub fn saturating_add(&self, other: &VoteCount) -> VoteCount {
        VoteCount {
            yes: self.yes.saturating_add(other.yes),
            no: self.no.saturating_add(other.no),
            blank: self.blank.saturating_add(other.blank),
            invalid: self.invalid.saturating_add(other.invalid),
        }
    }
}

impl fmt::Display for VoteCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "yes={} no={} blank={} invalid={}",
            self.yes, self.no, self.blank, self.invalid
        )
    }
}

/// Component-wise sum. Overflow is reported, never wrapped.
pub fn accumulate<'a, I>(reports: I) -> Result<VoteCount, TallyError>
where
    I: IntoIterator<Item = &'a VoteCount>,
{
    reports.into_iter().try_fold(VoteCount::ZERO, |acc, c| {
        acc.checked_add(c).ok_or(TallyError::ArithmeticOverflow)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("empty jurisdiction path")]
    Empty,
    #[error("invalid path segment {0:?}")]
    BadSegment(String),
}

/// Slash-separated path naming one node of the hierarchy, e.g. `CH/ZH/Uster`.
///
/// Segments are nonempty and contain no `/`, `=`, `%`, whitespace or control
/// characters, so a path can be embedded verbatim in the line formats used
/// for traces, certificates and canonical report bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JurisdictionId(Vec<String>);

impl JurisdictionId {
    pub fn new<I, S>(segments: I) -> Result<Self, IdError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        if segments.is_empty() {
            return Err(IdError::Empty);
        }
        for s in &segments {
            if !valid_segment(s) {
                return Err(IdError::BadSegment(s.clone()));
            }
        }
        Ok(JurisdictionId(segments))
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    /// Number of edges between this node and the root of its path.
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn parent(&self) -> Option<JurisdictionId> {
        if self.0.len() < 2 {
            None
        } else {
            Some(JurisdictionId(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_parent_of(&self, other: &JurisdictionId) -> bool {
        other.0.len() == self.0.len() + 1 && other.0.starts_with(&self.0)
    }

    pub fn is_ancestor_of(&self, other: &JurisdictionId) -> bool {
        other.0.len() > self.0.len() && other.0.starts_with(&self.0)
    }

    pub fn child(&self, segment: &str) -> Result<JurisdictionId, IdError> {
        if !valid_segment(segment) {
            return Err(IdError::BadSegment(segment.to_string()));
        }
        let mut segs = self.0.clone();
        segs.push(segment.to_string());
        Ok(JurisdictionId(segs))
    }

    pub fn last(&self) -> &str {
        self.0.last().map(String::as_str).unwrap_or_default()
    }
}

fn valid_segment(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c == '/' || c == '=' || c == '%' || c.is_whitespace() || c.is_control())
}

impl FromStr for JurisdictionId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(IdError::Empty);
        }
        JurisdictionId::new(s.split('/'))
    }
}

impl fmt::Display for JurisdictionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

impl Serialize for JurisdictionId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for JurisdictionId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and examples; panics on a malformed literal.
pub fn jid(path: &str) -> JurisdictionId {
    path.parse().unwrap_or_else(|e| panic!("bad jurisdiction path {path:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accumulate_sums_componentwise() {
        let got = accumulate(&[
            VoteCount::with_blank_invalid(1, 2, 0, 0),
            VoteCount::with_blank_invalid(3, 4, 1, 0),
        ])
        .unwrap();
        assert_eq!(got, VoteCount::with_blank_invalid(4, 6, 1, 0));
    }

    #[test]
    fn accumulate_empty_is_zero() {
        assert_eq!(accumulate(&[]).unwrap(), VoteCount::ZERO);
    }

    #[test]
    fn accumulate_detects_overflow() {
        let a = VoteCount::new(u64::MAX, 0);
        let b = VoteCount::new(1, 0);
        assert_eq!(accumulate(&[a, b]), Err(TallyError::ArithmeticOverflow));
        let c = VoteCount::with_blank_invalid(0, 0, 0, u64::MAX);
        assert_eq!(accumulate(&[c, c]), Err(TallyError::ArithmeticOverflow));
    }

    #[test]
    fn jurisdiction_paths() {
        let id = jid("CH/ZH/Uster");
        assert_eq!(id.to_string(), "CH/ZH/Uster");
        assert_eq!(id.depth(), 2);
        assert_eq!(id.parent(), Some(jid("CH/ZH")));
        assert!(jid("CH/ZH").is_parent_of(&id));
        assert!(!jid("CH").is_parent_of(&id));
        assert!(jid("CH").is_ancestor_of(&id));
        assert_eq!(jid("CH").parent(), None);
        assert!("".parse::<JurisdictionId>().is_err());
        assert!("CH//ZH".parse::<JurisdictionId>().is_err());
        assert!("CH/St Gallen".parse::<JurisdictionId>().is_err());
        assert!("CH/a=b".parse::<JurisdictionId>().is_err());
        assert!("CH/Zürich".parse::<JurisdictionId>().is_ok());
    }

    fn count() -> impl Strategy<Value = VoteCount> {
        (0u64..1 << 40, 0u64..1 << 40, 0u64..1 << 20, 0u64..1 << 20)
            .prop_map(|(y, n, b, i)| VoteCount::with_blank_invalid(y, n, b, i))
    }

    proptest! {
        #[test]
        fn accumulate_is_order_independent(mut v in prop::collection::vec(count(), 0..12), seed in any::<u64>()) {
            let a = accumulate(&v).unwrap();
            let len = v.len();
            if len > 1 {
                v.rotate_left((seed as usize) % len);
                v.swap(0, (seed as usize / 7) % len);
            }
            prop_assert_eq!(accumulate(&v).unwrap(), a);
        }

        #[test]
        fn accumulate_is_associative_with_identity(a in count(), b in count(), c in count()) {
            let left = accumulate(&[accumulate(&[a, b]).unwrap(), c]).unwrap();
            let right = accumulate(&[a, accumulate(&[b, c]).unwrap()]).unwrap();
            prop_assert_eq!(left, right);
            prop_assert_eq!(accumulate(&[a, VoteCount::ZERO]).unwrap(), a);
        }
    }
}
