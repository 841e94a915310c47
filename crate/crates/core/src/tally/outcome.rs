use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{accumulate, HalfVotes, JurisdictionId, JurisdictionTree, TallyError, VoteCount};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accepted,
    Rejected,
}

impl Decision {
    pub fn opposite(self) -> Decision {
        match self {
            Decision::Accepted => Decision::Rejected,
            Decision::Rejected => Decision::Accepted,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accepted => "Accepted",
            Decision::Rejected => "Rejected",
        })
    }
}

/// Ordinary law referendums need only the popular majority; constitutional
/// amendments need the popular and the cantonal majority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MajorityRule {
    PopularOnly,
    DoubleMajority,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReferendumSpec {
    pub election_id: String,
    pub majority_rule: MajorityRule,
}

impl ReferendumSpec {
    pub fn new(election_id: impl Into<String>, majority_rule: MajorityRule) -> Self {
        ReferendumSpec { election_id: election_id.into(), majority_rule }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CantonalTally {
    pub decision: Decision,
    pub yes_weight: HalfVotes,
    pub no_weight: HalfVotes,
    pub total_weight: HalfVotes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub popular: Decision,
    /// Present only under the double-majority rule.
    pub cantonal: Option<CantonalTally>,
    pub overall: Decision,
    pub national: VoteCount,
}

/// Strict majority of yes over no; blank and invalid ballots do not count and
/// a tie rejects.
pub fn popular_outcome(counts: &VoteCount) -> Decision {
    if counts.yes > counts.no {
        Decision::Accepted
    } else {
        Decision::Rejected
    }
}

pub fn cantonal_outcome(
    per_canton: &BTreeMap<JurisdictionId, VoteCount>,
    tree: &JurisdictionTree,
) -> Result<CantonalTally, TallyError> {
    check_coverage(per_canton, tree)?;
    let mut yes = HalfVotes(0);
    let mut no = HalfVotes(0);
    for canton in tree.cantons() {
        let c = &per_canton[canton];
        let w = tree.weight(canton).unwrap_or_default();
        // a canton-level tie goes to neither side
        if c.yes > c.no {
            yes = yes + w;
        } else if c.no > c.yes {
            no = no + w;
        }
    }
    let total = tree.total_weight();
    let decision = if 2 * yes.0 > total.0 { Decision::Accepted } else { Decision::Rejected };
    Ok(CantonalTally { decision, yes_weight: yes, no_weight: no, total_weight: total })
}

pub(crate) fn check_coverage(
    per_canton: &BTreeMap<JurisdictionId, VoteCount>,
    tree: &JurisdictionTree,
) -> Result<(), TallyError> {
    for canton in tree.cantons() {
        if !per_canton.contains_key(canton) {
            return Err(TallyError::MissingCanton(canton.clone()));
        }
    }
    for id in per_canton.keys() {
        if tree.weight(id).is_none() {
            return Err(TallyError::UnknownCanton(id.clone()));
        }
    }
    Ok(())
}

pub fn referendum_outcome(
    spec: &ReferendumSpec,
    per_canton: &BTreeMap<JurisdictionId, VoteCount>,
    tree: &JurisdictionTree,
) -> Result<Outcome, TallyError> {
    let national = accumulate(per_canton.values())?;
    let popular = popular_outcome(&national);
    match spec.majority_rule {
        MajorityRule::PopularOnly => {
            Ok(Outcome { popular, cantonal: None, overall: popular, national })
        }
        MajorityRule::DoubleMajority => {
            let cantonal = cantonal_outcome(per_canton, tree)?;
            let overall = if popular == Decision::Accepted
                && cantonal.decision == Decision::Accepted
            {
                Decision::Accepted
            } else {
                Decision::Rejected
            };
            Ok(Outcome { popular, cantonal: Some(cantonal), overall, national })
        }
    }
}
