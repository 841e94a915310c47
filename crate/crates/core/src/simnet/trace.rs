//! Event trace text format.
//!
//! Header lines come first: comments starting with `#`, one `scenario`
//! line and one `attack` line per declared attack. Every other line is a
//! record:
//!
//! ```text
//! t=<tick> <event> key=value key=value ...
//! ```
//!
//! Counts are written `yes:no:blank:invalid`. Values percent-escape space,
//! `%`, `=` and control characters. `publish` records list the federal
//! office's per-child figures as `<child path>=<counts>` after the fixed keys.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::secauth::SignedReport;
use crate::tally::{JurisdictionId, VoteCount};

use super::{ReportKind, Tick};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    /// A leaf office releases its own count.
    Emit { node: JurisdictionId, kind: ReportKind, seq: u64, counts: VoteCount },
    Send {
        from: JurisdictionId,
        to: JurisdictionId,
        channel: String,
        kind: ReportKind,
        seq: u64,
        counts: VoteCount,
        arrive: Tick,
    },
    /// An attack acted on the edge. `action` is `tamper`, `delay` or `inject`.
    Intercept {
        attack: usize,
        action: String,
        from: JurisdictionId,
        to: JurisdictionId,
        seq: u64,
        counts: VoteCount,
        arrive: Tick,
    },
    Deliver {
        from: JurisdictionId,
        to: JurisdictionId,
        kind: ReportKind,
        seq: u64,
        counts: VoteCount,
        forged: bool,
    },
    Accept { node: JurisdictionId, from: JurisdictionId, kind: ReportKind, seq: u64 },
    Detect { node: JurisdictionId, from: JurisdictionId, kind: ReportKind, seq: u64, reason: String },
    Publish {
        kind: ReportKind,
        counts: VoteCount,
        children: usize,
        per_child: BTreeMap<JurisdictionId, VoteCount>,
    },
}

impl TraceEvent {
    pub fn name(&self) -> &'static str {
        match self {
            TraceEvent::Emit { .. } => "emit",
            TraceEvent::Send { .. } => "send",
            TraceEvent::Intercept { .. } => "intercept",
            TraceEvent::Deliver { .. } => "deliver",
            TraceEvent::Accept { .. } => "accept",
            TraceEvent::Detect { .. } => "detect",
            TraceEvent::Publish { .. } => "publish",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: Tick,
    pub event: TraceEvent,
}

/// The output of a run. `captured` holds every signed report put on the
/// wire, honest or forged; it is not part of the text form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTrace {
    pub header: Vec<String>,
    pub records: Vec<TraceRecord>,
    pub captured: Vec<SignedReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace line {line}: {msg}")]
pub struct TraceParseError {
    pub line: usize,
    pub msg: String,
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c == ' ' || c == '%' || c == '=' || c.is_control() {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn unescape(s: &str) -> Option<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

fn counts_str(c: &VoteCount) -> String {
    format!("{}:{}:{}:{}", c.yes, c.no, c.blank, c.invalid)
}

fn parse_counts(s: &str) -> Option<VoteCount> {
    let mut it = s.split(':').map(|p| p.parse::<u64>().ok());
    let c = VoteCount::with_blank_invalid(it.next()??, it.next()??, it.next()??, it.next()??);
    it.next().is_none().then_some(c)
}

impl TraceRecord {
    fn fields(&self) -> Vec<(String, String)> {
        let f = |k: &str, v: String| (k.to_string(), v);
        match &self.event {
            TraceEvent::Emit { node, kind, seq, counts } => vec![
                f("node", node.to_string()),
                f("kind", kind.to_string()),
                f("seq", seq.to_string()),
                f("counts", counts_str(counts)),
            ],
            TraceEvent::Send { from, to, channel, kind, seq, counts, arrive } => vec![
                f("from", from.to_string()),
                f("to", to.to_string()),
                f("channel", channel.clone()),
                f("kind", kind.to_string()),
                f("seq", seq.to_string()),
                f("counts", counts_str(counts)),
                f("arrive", arrive.to_string()),
            ],
            TraceEvent::Intercept { attack, action, from, to, seq, counts, arrive } => vec![
                f("attack", attack.to_string()),
                f("action", action.clone()),
                f("from", from.to_string()),
                f("to", to.to_string()),
                f("seq", seq.to_string()),
                f("counts", counts_str(counts)),
                f("arrive", arrive.to_string()),
            ],
            TraceEvent::Deliver { from, to, kind, seq, counts, forged } => vec![
                f("from", from.to_string()),
                f("to", to.to_string()),
                f("kind", kind.to_string()),
                f("seq", seq.to_string()),
                f("counts", counts_str(counts)),
                f("forged", forged.to_string()),
            ],
            TraceEvent::Accept { node, from, kind, seq } => vec![
                f("node", node.to_string()),
                f("from", from.to_string()),
                f("kind", kind.to_string()),
                f("seq", seq.to_string()),
            ],
            TraceEvent::Detect { node, from, kind, seq, reason } => vec![
                f("node", node.to_string()),
                f("from", from.to_string()),
                f("kind", kind.to_string()),
                f("seq", seq.to_string()),
                f("reason", reason.clone()),
            ],
            TraceEvent::Publish { kind, counts, children, per_child } => {
                let mut v = vec![
                    f("kind", kind.to_string()),
                    f("counts", counts_str(counts)),
                    f("covered", per_child.len().to_string()),
                    f("of", children.to_string()),
                ];
                v.extend(per_child.iter().map(|(id, c)| (id.to_string(), counts_str(c))));
                v
            }
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = format!("t={} {}", self.time, self.event.name());
        for (k, v) in self.fields() {
            let _ = write!(s, " {}={}", escape(&k), escape(&v));
        }
        s
    }

    pub fn parse_line(line: &str) -> Result<TraceRecord, String> {
        let mut parts = line.split(' ');
        let time = parts
            .next()
            .and_then(|t| t.strip_prefix("t="))
            .and_then(|t| t.parse::<Tick>().ok())
            .ok_or("missing t=<tick>")?;
        let name = parts.next().ok_or("missing event name")?;
        let mut fields: Vec<(String, String)> = Vec::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| format!("field {p:?} lacks '='"))?;
            let k = unescape(k).ok_or("bad escape")?;
            let v = unescape(v).ok_or("bad escape")?;
            fields.push((k, v));
        }
        let mut fixed = Fields { fields: &fields, used: 0 };
        let event = match name {
            "emit" => TraceEvent::Emit {
                node: fixed.id("node")?,
                kind: fixed.kind()?,
                seq: fixed.num("seq")?,
                counts: fixed.counts("counts")?,
            },
            "send" => TraceEvent::Send {
                from: fixed.id("from")?,
                to: fixed.id("to")?,
                channel: fixed.take("channel")?.to_string(),
                kind: fixed.kind()?,
                seq: fixed.num("seq")?,
                counts: fixed.counts("counts")?,
                arrive: fixed.num("arrive")?,
            },
            "intercept" => TraceEvent::Intercept {
                attack: fixed.num("attack")? as usize,
                action: fixed.take("action")?.to_string(),
                from: fixed.id("from")?,
                to: fixed.id("to")?,
                seq: fixed.num("seq")?,
                counts: fixed.counts("counts")?,
                arrive: fixed.num("arrive")?,
            },
            "deliver" => TraceEvent::Deliver {
                from: fixed.id("from")?,
                to: fixed.id("to")?,
                kind: fixed.kind()?,
                seq: fixed.num("seq")?,
                counts: fixed.counts("counts")?,
                forged: fixed.take("forged")?.parse().map_err(|_| "forged must be true or false")?,
            },
            "accept" => TraceEvent::Accept {
                node: fixed.id("node")?,
                from: fixed.id("from")?,
                kind: fixed.kind()?,
                seq: fixed.num("seq")?,
            },
            "detect" => TraceEvent::Detect {
                node: fixed.id("node")?,
                from: fixed.id("from")?,
                kind: fixed.kind()?,
                seq: fixed.num("seq")?,
                reason: fixed.take("reason")?.to_string(),
            },
            "publish" => {
                let kind = fixed.kind()?;
                let counts = fixed.counts("counts")?;
                let covered = fixed.num("covered")? as usize;
                let children = fixed.num("of")? as usize;
                let mut per_child = BTreeMap::new();
                for (k, v) in &fields[fixed.used..] {
                    let id: JurisdictionId = k.parse().map_err(|e| format!("{k}: {e}"))?;
                    per_child.insert(id, parse_counts(v).ok_or_else(|| format!("bad counts {v:?}"))?);
                }
                if per_child.len() != covered {
                    return Err(format!("covered={covered} but {} children listed", per_child.len()));
                }
                fixed.used = fields.len();
                TraceEvent::Publish { kind, counts, children, per_child }
            }
            other => return Err(format!("unknown event {other:?}")),
        };
        if fixed.used != fields.len() {
            return Err(format!("unexpected field {:?}", fields[fixed.used].0));
        }
        Ok(TraceRecord { time, event })
    }
}

struct Fields<'a> {
    fields: &'a [(String, String)],
    used: usize,
}

impl Fields<'_> {
    fn take(&mut self, key: &str) -> Result<&str, String> {
        match self.fields.get(self.used) {
            Some((k, v)) if k == key => {
                self.used += 1;
                Ok(v)
            }
            _ => Err(format!("expected field {key:?}")),
        }
    }

    fn num(&mut self, key: &str) -> Result<u64, String> {
        let v = self.take(key)?;
        v.parse().map_err(|_| format!("{key}: bad number {v:?}"))
    }

    fn id(&mut self, key: &str) -> Result<JurisdictionId, String> {
        let v = self.take(key)?;
        v.parse().map_err(|e| format!("{key}: {e}"))
    }

    fn kind(&mut self) -> Result<ReportKind, String> {
        self.take("kind")?.parse()
    }

    fn counts(&mut self, key: &str) -> Result<VoteCount, String> {
        let v = self.take(key)?;
        parse_counts(v).ok_or_else(|| format!("{key}: bad counts {v:?}"))
    }
}

impl EventTrace {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            s.push_str(h);
            s.push('\n');
        }
        for r in &self.records {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<EventTrace, TraceParseError> {
        let mut trace = EventTrace::default();
        for (i, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.starts_with("scenario ") || line.starts_with("attack ") {
                if !trace.records.is_empty() {
                    return Err(TraceParseError { line: i + 1, msg: "header line after records".into() });
                }
                trace.header.push(line.to_string());
            } else {
                let r = TraceRecord::parse_line(line).map_err(|msg| TraceParseError { line: i + 1, msg })?;
                trace.records.push(r);
            }
        }
        Ok(trace)
    }

    pub fn publications(&self) -> impl Iterator<Item = (&TraceRecord, ReportKind)> {
        self.records.iter().filter_map(|r| match &r.event {
            TraceEvent::Publish { kind, .. } => Some((r, *kind)),
            _ => None,
        })
    }

    pub fn detections(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| matches!(r.event, TraceEvent::Detect { .. }))
    }
}

/// One publication by the federal office.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Publication {
    pub time: Tick,
    pub kind: ReportKind,
    pub totals: VoteCount,
    /// Subordinates reflected in the totals.
    pub per_child: BTreeMap<JurisdictionId, VoteCount>,
    pub children: usize,
    /// Subordinates whose figure does not yet cover all of their own offices.
    pub partial: BTreeSet<JurisdictionId>,
}

impl Publication {
    /// Every office in the hierarchy is reflected.
    pub fn is_complete(&self) -> bool {
        self.per_child.len() == self.children && self.partial.is_empty()
    }
}

/// The federal publications in order; a complete run ends with the final one.
///
/// A preliminary figure counts as partial when the office that sent it had
/// not yet accepted a complete figure from each of its subordinates.
/// Figures under a sequence number the named sender never sent (injected
/// reports) count as complete.
pub fn publish_timeline(trace: &EventTrace) -> Vec<Publication> {
    let mut subordinates: BTreeMap<&JurisdictionId, BTreeSet<&JurisdictionId>> = BTreeMap::new();
    let mut sent: BTreeSet<(&JurisdictionId, u64)> = BTreeSet::new();
    for r in &trace.records {
        if let TraceEvent::Send { from, to, kind, seq, .. } = &r.event {
            subordinates.entry(to).or_default().insert(from);
            if *kind == ReportKind::Preliminary {
                sent.insert((from, *seq));
            }
        }
    }
    let root = subordinates.keys().find(|n| !subordinates.values().any(|s| s.contains(*n))).copied();
    let mut complete: BTreeSet<(&JurisdictionId, u64)> = BTreeSet::new();
    let mut accepted: BTreeMap<(&JurisdictionId, &JurisdictionId), u64> = BTreeMap::new();
    let covers = |accepted: &BTreeMap<(&JurisdictionId, &JurisdictionId), u64>,
                  complete: &BTreeSet<(&JurisdictionId, u64)>,
                  node: &JurisdictionId,
                  child: &JurisdictionId| {
        accepted.get(&(node, child)).is_some_and(|&seq| !sent.contains(&(child, seq)) || complete.contains(&(child, seq)))
    };
    let mut out = Vec::new();
    for r in &trace.records {
        match &r.event {
            TraceEvent::Accept { node, from, kind: ReportKind::Preliminary, seq } => {
                accepted.insert((node, from), *seq);
            }
            TraceEvent::Send { from, kind: ReportKind::Preliminary, seq, .. } => {
                let whole = subordinates
                    .get(from)
                    .is_none_or(|subs| subs.iter().all(|c| covers(&accepted, &complete, from, c)));
                if whole {
                    complete.insert((from, *seq));
                }
            }
            TraceEvent::Publish { kind, counts, children, per_child } => {
                let partial = match (kind, root) {
                    (ReportKind::Preliminary, Some(root)) => {
                        per_child.keys().filter(|c| !covers(&accepted, &complete, root, c)).cloned().collect()
                    }
                    _ => BTreeSet::new(),
                };
                out.push(Publication {
                    time: r.time,
                    kind: *kind,
                    totals: *counts,
                    per_child: per_child.clone(),
                    children: *children,
                    partial,
                });
            }
            _ => {}
        }
    }
    out
}
