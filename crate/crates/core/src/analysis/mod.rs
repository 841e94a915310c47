//! Historical preliminary/final result pairs: loading, discrepancy
//! statistics and flip-vulnerability assessment.
//!
//! The discrepancy of one (canton, referendum) row is `|Δyes| + |Δno|`
//! between the preliminary and the final counts; its relative value divides
//! by the final total (all ballots cast, including blank and invalid).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::tally::{
    min_flips_cantonal, min_flips_double, min_flips_popular_allocated, referendum_outcome,
    Decision, FlipPlan, JurisdictionId, JurisdictionTree, MajorityRule, Outcome, ReferendumSpec,
    TallyError, VoteCount,
};

/// Canton column value of a national row.
pub const FEDERAL: &str = "Switzerland";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Io(String),
    #[error("row {row}: {msg}")]
    Parse { row: u64, msg: String },
    #[error("row {row}: duplicate record for {canton} in {referendum}")]
    DuplicateRecord { row: u64, referendum: String, canton: String },
    #[error("{referendum}: no record for canton {canton}")]
    MissingCanton { referendum: String, canton: String },
    #[error("{referendum}: unknown canton {canton:?}")]
    UnknownCanton { referendum: String, canton: String },
    #[error(transparent)]
    Tally(#[from] TallyError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoricalRecord {
    pub referendum_id: String,
    pub date: NaiveDate,
    pub canton: String,
    /// Yes and no only; preliminary reports carry no blank/invalid split.
    pub preliminary: VoteCount,
    /// `blank` holds every ballot that is neither yes nor no.
    pub final_counts: VoteCount,
}

impl HistoricalRecord {
    pub fn discrepancy(&self) -> u64 {
        self.preliminary.yes.abs_diff(self.final_counts.yes) + self.preliminary.no.abs_diff(self.final_counts.no)
    }

    pub fn final_total(&self) -> u64 {
        self.final_counts.total()
    }

    pub fn relative(&self) -> f64 {
        match self.final_total() {
            0 => 0.0,
            t => self.discrepancy() as f64 / t as f64,
        }
    }

    pub fn is_federal(&self) -> bool {
        self.canton == FEDERAL
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    referendum_id: String,
    date: String,
    canton: String,
    prelim_yes: u64,
    prelim_no: u64,
    final_yes: u64,
    final_no: u64,
    final_total: u64,
}

/// Reads the results CSV. Lines starting with `#` are comments. Row numbers
/// in errors are file line numbers.
pub fn parse_results(mut reader: impl Read) -> Result<Vec<HistoricalRecord>, AnalysisError> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| AnalysisError::Io(e.to_string()))?;
    // drop comments here so csv positions can be mapped back to file lines
    let mut file_line = Vec::new();
    let mut body = String::with_capacity(text.len());
    for (i, l) in text.lines().enumerate() {
        if !l.trim_start().starts_with('#') {
            body.push_str(l);
            body.push('\n');
            file_line.push(i as u64 + 1);
        }
    }
    let line = |csv_line: u64| file_line.get(csv_line.saturating_sub(1) as usize).copied().unwrap_or(csv_line);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| AnalysisError::Parse { row: line(1), msg: e.to_string() })?.clone();
    let expected = ["referendum_id", "date", "canton", "prelim_yes", "prelim_no", "final_yes", "final_no", "final_total"];
    if headers.iter().ne(expected) {
        if headers.is_empty() {
            return Ok(Vec::new());
        }
        return Err(AnalysisError::Parse {
            row: line(1),
            msg: format!("header must be {}", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AnalysisError::Parse {
            row: line(e.position().map_or(0, |p| p.line())),
            msg: e.to_string(),
        })?;
        let row_no = line(rec.position().map_or(0, |p| p.line()));
        let parse_err = |msg: String| AnalysisError::Parse { row: row_no, msg };
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| parse_err(e.to_string()))?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| parse_err(format!("date {:?}: {e}", row.date)))?;
        if row.referendum_id.is_empty() || row.canton.is_empty() {
            return Err(parse_err("empty referendum id or canton".into()));
        }
        let counted = row.final_yes.checked_add(row.final_no).filter(|s| *s <= row.final_total);
        let Some(counted) = counted else {
            return Err(parse_err("final_total is smaller than final_yes + final_no".into()));
        };
        if !seen.insert((row.referendum_id.clone(), row.canton.clone())) {
            return Err(AnalysisError::DuplicateRecord { row: row_no, referendum: row.referendum_id, canton: row.canton });
        }
        out.push(HistoricalRecord {
            referendum_id: row.referendum_id,
            date,
            canton: row.canton,
            preliminary: VoteCount::new(row.prelim_yes, row.prelim_no),
            final_counts: VoteCount::with_blank_invalid(row.final_yes, row.final_no, row.final_total - counted, 0),
        });
    }
    Ok(out)
}

pub fn load_results(path: &Path) -> Result<Vec<HistoricalRecord>, AnalysisError> {
    let file = std::fs::File::open(path).map_err(|e| AnalysisError::Io(format!("{}: {e}", path.display())))?;
    parse_results(file)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyStat {
    pub canton: String,
    pub max_abs_discrepancy: u64,
    pub total_at_max: u64,
    pub max_relative: f64,
    pub referendum_at_max: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancySummary {
    /// In order of first appearance.
    pub per_canton: Vec<DiscrepancyStat>,
    /// The national row's maximum, when national rows are present.
    pub federal: Option<DiscrepancyStat>,
    /// Mean relative national discrepancy over referendums. National rows are
    /// used when present, otherwise canton rows are summed.
    pub federal_average: Option<f64>,
    /// Mean over referendums of the largest relative cantonal discrepancy.
    pub average_max_cantonal: Option<f64>,
}

impl DiscrepancySummary {
    pub fn canton(&self, name: &str) -> Option<&DiscrepancyStat> {
        self.per_canton.iter().find(|s| s.canton == name)
    }

    /// One row per canton plus the national row, mirroring the published
    /// table: canton, votes, total, percent.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("canton,max_abs_discrepancy,total_at_max,max_relative_percent\n");
        for st in self.per_canton.iter().chain(&self.federal) {
            let _ = writeln!(
                s,
                "{},{},{},{:.2}",
                csv_field(&st.canton),
                st.max_abs_discrepancy,
                st.total_at_max,
                st.max_relative * 100.0
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:>9} {:>10} {:>7}", "canton", "votes", "total", "pct");
        for st in self.per_canton.iter().chain(&self.federal) {
            let _ = writeln!(
                s,
                "{:<24} {:>9} {:>10} {:>6.2}%",
                st.canton,
                st.max_abs_discrepancy,
                st.total_at_max,
                st.max_relative * 100.0
            );
        }
        if let Some(avg) = self.federal_average {
            let _ = writeln!(s, "average national discrepancy: {:.2}%", avg * 100.0);
        }
        if let Some(avg) = self.average_max_cantonal {
            let _ = writeln!(s, "average largest cantonal discrepancy: {:.2}%", avg * 100.0);
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn better(stat: &DiscrepancyStat, r: &HistoricalRecord) -> bool {
    // ties keep the first occurrence
    r.discrepancy() > stat.max_abs_discrepancy
}

fn stat_of(r: &HistoricalRecord) -> DiscrepancyStat {
    DiscrepancyStat {
        canton: r.canton.clone(),
        max_abs_discrepancy: r.discrepancy(),
        total_at_max: r.final_total(),
        max_relative: r.relative(),
        referendum_at_max: r.referendum_id.clone(),
    }
}

pub fn discrepancy_stats(records: &[HistoricalRecord]) -> DiscrepancySummary {
    let mut per_canton: Vec<DiscrepancyStat> = Vec::new();
    let mut federal: Option<DiscrepancyStat> = None;
    for r in records {
        if r.is_federal() {
            if federal.as_ref().is_none_or(|s| better(s, r)) {
                federal = Some(stat_of(r));
            }
        } else {
            match per_canton.iter_mut().find(|s| s.canton == r.canton) {
                Some(s) if better(s, r) => *s = stat_of(r),
                Some(_) => {}
                None => per_canton.push(stat_of(r)),
            }
        }
    }

    let mut by_ref: BTreeMap<&str, Vec<&HistoricalRecord>> = BTreeMap::new();
    for r in records {
        by_ref.entry(&r.referendum_id).or_default().push(r);
    }
    let mut national = Vec::new();
    let mut max_cantonal = Vec::new();
    for rows in by_ref.values() {
        if let Some(f) = rows.iter().find(|r| r.is_federal()) {
            national.push(f.relative());
        } else {
            let prelim = rows.iter().fold(VoteCount::ZERO, |a, r| a.saturating_add(&r.preliminary));
            let fin = rows.iter().fold(VoteCount::ZERO, |a, r| a.saturating_add(&r.final_counts));
            let d = prelim.yes.abs_diff(fin.yes) + prelim.no.abs_diff(fin.no);
            national.push(if fin.total() == 0 { 0.0 } else { d as f64 / fin.total() as f64 });
        }
        let m = rows.iter().filter(|r| !r.is_federal()).map(|r| r.relative()).fold(None, |a: Option<f64>, x| {
            Some(a.map_or(x, |a| a.max(x)))
        });
        max_cantonal.extend(m);
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    DiscrepancySummary {
        per_canton,
        federal,
        federal_average: mean(&national),
        average_max_cantonal: mean(&max_cantonal),
    }
}

/// Flip plans for one referendum, computed on its final counts.
#[derive(Debug, Clone, PartialEq)]
pub struct VulnerabilityAssessment {
    pub referendum_id: String,
    pub rule: MajorityRule,
    pub outcome: Outcome,
    /// The opposite of the actual overall outcome.
    pub target: Decision,
    /// Cheapest popular-majority flip, allocated to cantons.
    pub popular: FlipPlan,
    /// Cheapest cantonal-majority flip; double majority only.
    pub cantonal: Option<FlipPlan>,
    /// Cheapest plan that changes the overall outcome under the rule.
    pub plan: FlipPlan,
    pub vulnerable: bool,
}

/// Whether ordinary counting noise could hide `plan`: a plan that may be
/// placed anywhere (popular only) must fit within the largest historical
/// canton discrepancy; a plan tied to specific cantons must fit within each
/// of those cantons' own historical maximum.
fn hidden_by_noise(plan: &FlipPlan, pinned: bool, tree: &JurisdictionTree, history: &DiscrepancySummary) -> bool {
    let max_of = |id: &JurisdictionId| history.canton(&tree.label(id)).map_or(0, |s| s.max_abs_discrepancy);
    if pinned {
        plan.flips.iter().all(|(id, k)| *k <= max_of(id))
    } else {
        let largest = history.per_canton.iter().map(|s| s.max_abs_discrepancy).max().unwrap_or(0);
        plan.total_flips <= largest
    }
}

/// Assesses every referendum listed in `specs`.
pub fn vulnerability_report(
    records: &[HistoricalRecord],
    tree: &JurisdictionTree,
    specs: &[ReferendumSpec],
    history: &DiscrepancySummary,
) -> Result<Vec<VulnerabilityAssessment>, AnalysisError> {
    specs.iter().map(|spec| assess(records, tree, spec, history)).collect()
}

/// Per-canton final counts of one referendum, keyed by tree id.
pub fn final_counts_by_canton(
    records: &[HistoricalRecord],
    tree: &JurisdictionTree,
    referendum_id: &str,
) -> Result<BTreeMap<JurisdictionId, VoteCount>, AnalysisError> {
    let mut per_canton = BTreeMap::new();
    for r in records.iter().filter(|r| r.referendum_id == referendum_id && !r.is_federal()) {
        let id = tree
            .find(&r.canton)
            .filter(|id| tree.weight(id).is_some())
            .ok_or_else(|| AnalysisError::UnknownCanton { referendum: referendum_id.into(), canton: r.canton.clone() })?;
        per_canton.insert(id.clone(), r.final_counts);
    }
    if let Some(missing) = tree.cantons().into_iter().find(|c| !per_canton.contains_key(*c)) {
        return Err(AnalysisError::MissingCanton { referendum: referendum_id.into(), canton: tree.label(missing) });
    }
    Ok(per_canton)
}

fn assess(
    records: &[HistoricalRecord],
    tree: &JurisdictionTree,
    spec: &ReferendumSpec,
    history: &DiscrepancySummary,
) -> Result<VulnerabilityAssessment, AnalysisError> {
    let per_canton = final_counts_by_canton(records, tree, &spec.election_id)?;
    let outcome = referendum_outcome(spec, &per_canton, tree)?;
    let target = outcome.overall.opposite();
    let popular = min_flips_popular_allocated(&per_canton, target)?;
    let (cantonal, plan) = match spec.majority_rule {
        MajorityRule::PopularOnly => (None, popular.clone()),
        MajorityRule::DoubleMajority => {
            let cantonal = min_flips_cantonal(&per_canton, tree, target)?;
            (Some(cantonal), min_flips_double(&per_canton, tree, spec, target)?)
        }
    };
    // a plan that needs specific cantons (any cantonal component) is pinned
    let pinned = cantonal.as_ref().is_some_and(|c| c.total_flips > 0);
    let vulnerable = plan.total_flips > 0 && hidden_by_noise(&plan, pinned, tree, history);
    Ok(VulnerabilityAssessment {
        referendum_id: spec.election_id.clone(),
        rule: spec.majority_rule,
        outcome,
        target,
        popular,
        cantonal,
        plan,
        vulnerable,
    })
}

impl VulnerabilityAssessment {
    pub fn to_text(&self, tree: &JurisdictionTree) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "referendum: {}", self.referendum_id);
        let _ = writeln!(s, "outcome: {:?} (popular {:?})", self.outcome.overall, self.outcome.popular);
        if let Some(c) = &self.outcome.cantonal {
            let _ = writeln!(s, "cantonal votes: {} yes, {} no of {}", c.yes_weight, c.no_weight, c.total_weight);
        }
        let _ = writeln!(s, "target: {:?}", self.target);
        let _ = writeln!(s, "total_flips: {}", self.plan.total_flips);
        for (id, k) in &self.plan.flips {
            let _ = writeln!(s, "  {} ({}): {}", tree.label(id), id.last(), k);
        }
        let _ = writeln!(s, "vulnerable: {}", self.vulnerable);
        s
    }
}
