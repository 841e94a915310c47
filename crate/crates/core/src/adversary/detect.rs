use std::fmt::Write as _;

use crate::simnet::{publish_timeline, EventTrace, ReportKind, Tick, TraceEvent, TraceRecord};
use crate::tally::{popular_outcome, JurisdictionId, VoteCount};

/// A preliminary publication in which some subordinate's figure differs
/// from the figure it later reported by post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub time: Tick,
    pub published: VoteCount,
    /// (child, published, final)
    pub children: Vec<(JurisdictionId, VoteCount, VoteCount)>,
}

/// A preliminary publication that does not yet reflect every office.
/// Informational: missing results are not evidence of an attack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageGap {
    pub time: Tick,
    /// Subordinates absent from the publication.
    pub missing: Vec<JurisdictionId>,
    /// Subordinates present with a figure that covers only some of their offices.
    pub partial: Vec<JurisdictionId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionSummary {
    pub final_at: Option<Tick>,
    pub final_totals: Option<VoteCount>,
    pub matches_ground_truth: bool,
    pub divergences: Vec<Divergence>,
    pub detections: Vec<TraceRecord>,
    pub coverage_gaps: Vec<CoverageGap>,
    /// Complete preliminary publications whose popular outcome differs from
    /// the final one.
    pub wrong_outcome: Vec<Tick>,
    /// Ticks from the first divergent publication to the final publication.
    pub integrity_gap: Option<Tick>,
}

impl DetectionSummary {
    pub fn first_divergence(&self) -> Option<Tick> {
        self.divergences.first().map(|d| d.time)
    }

    pub fn to_text(&self) -> String {
        use crate::simnet::escape;
        let opt = |t: Option<Tick>| t.map_or("none".to_string(), |t| t.to_string());
        let c = |v: &VoteCount| format!("{}:{}:{}:{}", v.yes, v.no, v.blank, v.invalid);
        let mut s = String::from("# tallynet detection summary v1\n");
        let _ = writeln!(
            s,
            "final at={} counts={} matches_ground_truth={}",
            opt(self.final_at),
            self.final_totals.as_ref().map_or("none".into(), c),
            self.matches_ground_truth
        );
        let _ = writeln!(
            s,
            "totals divergences={} detections={} coverage_gaps={} wrong_outcome={} first_divergence={} integrity_gap={}",
            self.divergences.len(),
            self.detections.len(),
            self.coverage_gaps.len(),
            self.wrong_outcome.len(),
            opt(self.first_divergence()),
            opt(self.integrity_gap)
        );
        for d in &self.divergences {
            let _ = write!(s, "divergence t={} published={}", d.time, c(&d.published));
            for (id, p, f) in &d.children {
                let _ = write!(s, " {id}={}/{}", c(p), c(f));
            }
            s.push('\n');
        }
        for t in &self.wrong_outcome {
            let _ = writeln!(s, "wrong_outcome t={t}");
        }
        for r in &self.detections {
            if let TraceEvent::Detect { node, from, kind, seq, reason } = &r.event {
                let _ = writeln!(
                    s,
                    "detect t={} node={node} from={from} kind={kind} seq={seq} reason={}",
                    r.time,
                    escape(reason)
                );
            }
        }
        for g in &self.coverage_gaps {
            let _ = writeln!(s, "coverage_gap t={} missing={} partial={}", g.time, g.missing.len(), g.partial.len());
        }
        s
    }
}

/// Compares every federal preliminary publication against the final one.
///
/// Only figures that cover all of a subordinate's offices are compared;
/// partial figures are reported as coverage gaps.
pub fn detection_report(trace: &EventTrace, ground_truth: &VoteCount) -> DetectionSummary {
    let timeline = publish_timeline(trace);
    let fin = timeline.iter().find(|p| p.kind == ReportKind::Final);
    let mut divergences = Vec::new();
    let mut coverage_gaps = Vec::new();
    let mut wrong_outcome = Vec::new();
    for p in timeline.iter().filter(|p| p.kind == ReportKind::Preliminary) {
        if let Some(fin) = fin {
            let children: Vec<_> = p
                .per_child
                .iter()
                .filter(|(id, _)| !p.partial.contains(*id))
                .filter_map(|(id, v)| {
                    let f = fin.per_child.get(id).copied().unwrap_or_default();
                    (*v != f).then(|| (id.clone(), *v, f))
                })
                .collect();
            if !children.is_empty() {
                divergences.push(Divergence { time: p.time, published: p.totals, children });
            }
            let missing: Vec<JurisdictionId> =
                fin.per_child.keys().filter(|id| !p.per_child.contains_key(*id)).cloned().collect();
            if !missing.is_empty() || !p.partial.is_empty() {
                coverage_gaps.push(CoverageGap { time: p.time, missing, partial: p.partial.iter().cloned().collect() });
            }
            if p.is_complete() && popular_outcome(&p.totals) != popular_outcome(&fin.totals) {
                wrong_outcome.push(p.time);
            }
        } else if !p.is_complete() {
            coverage_gaps.push(CoverageGap { time: p.time, missing: Vec::new(), partial: p.partial.iter().cloned().collect() });
        }
    }
    let final_at = fin.map(|f| f.time);
    let integrity_gap = match (divergences.first(), final_at) {
        (Some(d), Some(f)) => Some(f.saturating_sub(d.time)),
        _ => None,
    };
    DetectionSummary {
        final_at,
        final_totals: fin.map(|f| f.totals),
        matches_ground_truth: fin.is_some_and(|f| f.totals == *ground_truth),
        divergences,
        detections: trace.detections().cloned().collect(),
        coverage_gaps,
        wrong_outcome,
        integrity_gap,
    }
}
