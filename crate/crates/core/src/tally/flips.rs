//! Minimum number of single-ballot flips needed to change a referendum
//! outcome. A flip moves one ballot from the side opposing the target to the
//! target side, so it changes the yes/no margin by two.

use std::collections::BTreeMap;

use super::outcome::check_coverage;
use super::{
    accumulate, cantonal_outcome, popular_outcome, referendum_outcome, Decision, JurisdictionId,
    JurisdictionTree, MajorityRule, ReferendumSpec, TallyError, VoteCount,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipPlan {
    pub target: Decision,
    /// Flips per jurisdiction; zero entries are omitted.
    pub flips: BTreeMap<JurisdictionId, u64>,
    pub total_flips: u64,
}

impl FlipPlan {
    pub fn empty(target: Decision) -> Self {
        FlipPlan { target, flips: BTreeMap::new(), total_flips: 0 }
    }

    fn from_flips(target: Decision, mut flips: BTreeMap<JurisdictionId, u64>) -> Self {
        flips.retain(|_, k| *k > 0);
        let total_flips = flips.values().sum();
        FlipPlan { target, flips, total_flips }
    }

    pub fn jurisdictions(&self) -> impl Iterator<Item = &JurisdictionId> {
        self.flips.keys()
    }

    pub fn flips_at(&self, id: &JurisdictionId) -> u64 {
        self.flips.get(id).copied().unwrap_or(0)
    }

    /// Applies the flips to per-jurisdiction counts.
    pub fn apply(
        &self,
        counts: &BTreeMap<JurisdictionId, VoteCount>,
    ) -> Result<BTreeMap<JurisdictionId, VoteCount>, TallyError> {
        let mut out = counts.clone();
        for (id, k) in &self.flips {
            let c = out.get_mut(id).ok_or_else(|| TallyError::MissingCanton(id.clone()))?;
            *c = flip(c, *k, self.target).ok_or_else(|| self.infeasible(id))?;
        }
        Ok(out)
    }

    /// Applies the whole plan to one aggregate count, ignoring where the
    /// flips are located.
    pub fn apply_total(&self, counts: &VoteCount) -> Result<VoteCount, TallyError> {
        flip(counts, self.total_flips, self.target).ok_or_else(|| TallyError::Infeasible {
            target: self.target,
            reason: "not enough ballots on the opposing side".into(),
        })
    }

    fn infeasible(&self, id: &JurisdictionId) -> TallyError {
        TallyError::Infeasible {
            target: self.target,
            reason: format!("not enough ballots to flip in {id}"),
        }
    }
}

/// Moves `k` ballots toward `target`; `None` if the opposing side has fewer
/// than `k`.
fn flip(c: &VoteCount, k: u64, target: Decision) -> Option<VoteCount> {
    let mut out = *c;
    match target {
        Decision::Accepted => {
            out.no = c.no.checked_sub(k)?;
            out.yes = c.yes.checked_add(k)?;
        }
        Decision::Rejected => {
            out.yes = c.yes.checked_sub(k)?;
            out.no = c.no.checked_add(k)?;
        }
    }
    Some(out)
}

/// Ballots available to move toward `target`.
fn capacity(c: &VoteCount, target: Decision) -> u64 {
    match target {
        Decision::Accepted => c.no,
        Decision::Rejected => c.yes,
    }
}

/// Smallest `k` such that flipping `k` ballots makes the strict popular
/// outcome equal `target`.
pub fn popular_flip_cost(counts: &VoteCount, target: Decision) -> Result<u64, TallyError> {
    if popular_outcome(counts) == target {
        return Ok(0);
    }
    let k = match target {
        // yes + k > no - k
        Decision::Accepted => (counts.no - counts.yes) / 2 + 1,
        // yes - k <= no + k; a tie already rejects
        Decision::Rejected => (counts.yes - counts.no).div_ceil(2),
    };
    if k > capacity(counts, target) {
        return Err(TallyError::Infeasible {
            target,
            reason: format!("{k} flips needed but only {} ballots can move", capacity(counts, target)),
        });
    }
    Ok(k)
}

/// Popular-majority flip plan for one aggregate count, located at `scope`.
pub fn min_flips_popular(
    scope: &JurisdictionId,
    counts: &VoteCount,
    target: Decision,
) -> Result<FlipPlan, TallyError> {
    let k = popular_flip_cost(counts, target)?;
    Ok(FlipPlan::from_flips(target, BTreeMap::from([(scope.clone(), k)])))
}

/// Popular-majority flip plan over per-canton counts, with the flips placed
/// in as few cantons as possible.
pub fn min_flips_popular_allocated(
    per_canton: &BTreeMap<JurisdictionId, VoteCount>,
    target: Decision,
) -> Result<FlipPlan, TallyError> {
    let national = accumulate(per_canton.values())?;
    let k = popular_flip_cost(&national, target)?;
    allocate(per_canton, BTreeMap::new(), k, target)
}

/// Spreads `extra` flips over the jurisdictions with the most movable
/// ballots left after `base`.
fn allocate(
    per_canton: &BTreeMap<JurisdictionId, VoteCount>,
    mut base: BTreeMap<JurisdictionId, u64>,
    mut extra: u64,
    target: Decision,
) -> Result<FlipPlan, TallyError> {
    let mut room: Vec<(u64, &JurisdictionId)> = per_canton
        .iter()
        .map(|(id, c)| (capacity(c, target) - base.get(id).copied().unwrap_or(0), id))
        .collect();
    room.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    for (free, id) in room {
        if extra == 0 {
            break;
        }
        let take = free.min(extra);
        *base.entry(id.clone()).or_default() += take;
        extra -= take;
    }
    if extra > 0 {
        return Err(TallyError::Infeasible {
            target,
            reason: format!("{extra} flips could not be placed"),
        });
    }
    Ok(FlipPlan::from_flips(target, base))
}

struct Candidate<'a> {
    id: &'a JurisdictionId,
    units: u32,
    cost: u64,
}

/// Cheapest set of cantons to flip so the cantonal majority equals `target`.
pub fn min_flips_cantonal(
    per_canton: &BTreeMap<JurisdictionId, VoteCount>,
    tree: &JurisdictionTree,
    target: Decision,
) -> Result<FlipPlan, TallyError> {
    let current = cantonal_outcome(per_canton, tree)?;
    if current.decision == target {
        return Ok(FlipPlan::empty(target));
    }
    let total = tree.total_weight().0;
    let yes = current.yes_weight.0;
    // Accepted needs 2*yes > total; Rejected needs 2*yes <= total.
    let need = match target {
        Decision::Accepted => (total / 2 + 1).saturating_sub(yes),
        Decision::Rejected => yes.saturating_sub(total / 2),
    };
    let candidates: Vec<Candidate<'_>> = tree
        .cantons()
        .into_iter()
        .filter(|id| popular_outcome(&per_canton[*id]) != target)
        .filter_map(|id| {
            let cost = popular_flip_cost(&per_canton[id], target).ok()?;
            Some(Candidate { id, units: tree.weight(id).unwrap_or_default().0, cost })
        })
        .collect();
    let chosen = min_cost_cover(&candidates, need).ok_or_else(|| TallyError::Infeasible {
        target,
        reason: "flipping every opposing canton is not enough".into(),
    })?;
    let flips = chosen.into_iter().map(|i| (candidates[i].id.clone(), candidates[i].cost)).collect();
    Ok(FlipPlan::from_flips(target, flips))
}

/// Exact 0/1 min-cost cover: pick items whose units sum to at least `need`
/// at minimum total cost. Returns chosen indices in input order.
fn min_cost_cover(items: &[Candidate<'_>], need: u32) -> Option<Vec<usize>> {
    const INF: u64 = u64::MAX;
    let need = need as usize;
    // best[i][j]: min cost covering >= j units using the first i items
    let mut best = vec![vec![INF; need + 1]; items.len() + 1];
    best[0][0] = 0;
    for (i, item) in items.iter().enumerate() {
        for j in 0..=need {
            let skip = best[i][j];
            let rest = best[i][j.saturating_sub(item.units as usize)];
            let take = if rest == INF { INF } else { rest.saturating_add(item.cost) };
            best[i + 1][j] = skip.min(take);
        }
    }
    if best[items.len()][need] == INF {
        return None;
    }
    let mut chosen = Vec::new();
    let mut j = need;
    for i in (0..items.len()).rev() {
        if best[i + 1][j] != best[i][j] {
            chosen.push(i);
            j = j.saturating_sub(items[i].units as usize);
        }
    }
    chosen.reverse();
    Some(chosen)
}

/// Minimal flips so that the overall double-majority outcome equals
/// `target`. Accepting needs both majorities; rejecting needs either one to
/// fail, so the cheaper of the two routes is taken.
pub fn min_flips_double(
    per_canton: &BTreeMap<JurisdictionId, VoteCount>,
    tree: &JurisdictionTree,
    spec: &ReferendumSpec,
    target: Decision,
) -> Result<FlipPlan, TallyError> {
    if spec.majority_rule != MajorityRule::DoubleMajority {
        return Err(TallyError::RuleMismatch(spec.majority_rule));
    }
    check_coverage(per_canton, tree)?;
    let outcome = referendum_outcome(spec, per_canton, tree)?;
    if outcome.overall == target {
        return Ok(FlipPlan::empty(target));
    }
    let popular_cost = popular_flip_cost(&outcome.national, target);
    match target {
        Decision::Accepted => {
            let popular_cost = popular_cost?;
            let cantonal = min_flips_cantonal(per_canton, tree, target)?;
            // flips spent on cantons also move the national margin
            let extra = popular_cost.saturating_sub(cantonal.total_flips);
            allocate(per_canton, cantonal.flips, extra, target)
        }
        Decision::Rejected => {
            let via_popular = popular_cost
                .and_then(|k| allocate(per_canton, BTreeMap::new(), k, target));
            let via_cantonal = min_flips_cantonal(per_canton, tree, target);
            match (via_popular, via_cantonal) {
                (Ok(p), Ok(c)) => Ok(if c.total_flips < p.total_flips { c } else { p }),
                (Ok(p), Err(_)) => Ok(p),
                (Err(_), Ok(c)) => Ok(c),
                (Err(e), Err(_)) => Err(e),
            }
        }
    }
}
