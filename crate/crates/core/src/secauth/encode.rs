//! Canonical report bytes and the line-oriented `field=value` text formats
//! for certificates and signed reports. Parsing is strict: every line must
//! appear in order, decimals have no leading zeros or signs, and byte fields
//! are lowercase hex. A parsed value therefore re-encodes to the same bytes.

use crate::simnet::{Report, ReportKind};
use crate::tally::{JurisdictionId, VoteCount};

use super::SecAuthError;

/// Deterministic, injective encoding of the signed fields of a report.
pub fn canonical_encode(report: &Report) -> Result<Vec<u8>, SecAuthError> {
    let id = &report.election_id;
    if id.is_empty() || id.contains('\n') || id.contains('=') {
        return Err(SecAuthError::Encoding(format!("election id {id:?}")));
    }
    let c = &report.counts;
    Ok(format!(
        "election={}\nsender={}\nseq={}\nkind={}\nyes={}\nno={}\nblank={}\ninvalid={}\n",
        id, report.sender, report.sequence_no, report.kind, c.yes, c.no, c.blank, c.invalid
    )
    .into_bytes())
}

/// Cursor over `field=value` lines.
pub(crate) struct Lines<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines { lines: text.lines(), line_no: 0 }
    }

    fn err(&self, msg: impl std::fmt::Display) -> SecAuthError {
        SecAuthError::Parse { line: self.line_no, msg: msg.to_string() }
    }

    pub(crate) fn field(&mut self, name: &str) -> Result<&'a str, SecAuthError> {
        self.line_no += 1;
        let line = self.lines.next().ok_or_else(|| self.err(format!("expected {name}")))?;
        match line.split_once('=') {
            Some((k, v)) if k == name => Ok(v),
            _ => Err(self.err(format!("expected {name}=..."))),
        }
    }

    pub(crate) fn decimal(&mut self, name: &str) -> Result<u64, SecAuthError> {
        let v = self.field(name)?;
        let canonical = !v.is_empty()
            && v.bytes().all(|b| b.is_ascii_digit())
            && (v == "0" || !v.starts_with('0'));
        if !canonical {
            return Err(self.err(format!("{name} is not a canonical decimal")));
        }
        v.parse().map_err(|e| self.err(format!("{name}: {e}")))
    }

    pub(crate) fn hex(&mut self, name: &str) -> Result<Vec<u8>, SecAuthError> {
        let v = self.field(name)?;
        if v.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(self.err(format!("{name} must be lowercase hex")));
        }
        hex::decode(v).map_err(|e| self.err(format!("{name}: {e}")))
    }

    pub(crate) fn jurisdiction(&mut self, name: &str) -> Result<JurisdictionId, SecAuthError> {
        let v = self.field(name)?;
        v.parse().map_err(|e| self.err(format!("{name}: {e}")))
    }

    pub(crate) fn end(&mut self) -> Result<(), SecAuthError> {
        self.line_no += 1;
        match self.lines.next() {
            None => Ok(()),
            Some(_) => Err(self.err("trailing content")),
        }
    }

    pub(crate) fn report(&mut self) -> Result<Report, SecAuthError> {
        let election_id = self.field("election")?.to_string();
        if election_id.is_empty() {
            return Err(self.err("empty election id"));
        }
        let sender = self.jurisdiction("sender")?;
        let sequence_no = self.decimal("seq")?;
        let kind: ReportKind = {
            let v = self.field("kind")?;
            v.parse().map_err(|e: String| self.err(e))?
        };
        let counts = VoteCount {
            yes: self.decimal("yes")?,
            no: self.decimal("no")?,
            blank: self.decimal("blank")?,
            invalid: self.decimal("invalid")?,
        };
        Ok(Report { election_id, sender, sequence_no, counts, kind, emitted_at: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tally::jid;
    use proptest::prelude::*;

    fn sample() -> Report {
        Report::preliminary("rtvg-2015", jid("CH/ZH/Uster"), 3, VoteCount::with_blank_invalid(10, 20, 1, 2))
    }

    #[test]
    fn exact_layout() {
        let bytes = canonical_encode(&sample()).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "election=rtvg-2015\nsender=CH/ZH/Uster\nseq=3\nkind=Preliminary\nyes=10\nno=20\nblank=1\ninvalid=2\n"
        );
    }

    #[test]
    fn sequence_changes_bytes() {
        let a = sample();
        let mut b = sample();
        b.sequence_no += 1;
        assert_ne!(canonical_encode(&a).unwrap(), canonical_encode(&b).unwrap());
    }

    #[test]
    fn emission_time_is_not_encoded() {
        assert_eq!(canonical_encode(&sample()).unwrap(), canonical_encode(&sample().at(99)).unwrap());
    }

    #[test]
    fn forbidden_characters() {
        let mut r = sample();
        r.election_id = "a\nb".into();
        assert!(matches!(canonical_encode(&r), Err(SecAuthError::Encoding(_))));
        r.election_id = "a=b".into();
        assert!(matches!(canonical_encode(&r), Err(SecAuthError::Encoding(_))));
    }

    #[test]
    fn strict_decimals() {
        let text = String::from_utf8(canonical_encode(&sample()).unwrap()).unwrap();
        for bad in [text.replace("seq=3", "seq=03"), text.replace("seq=3", "seq=+3"), text.replace("yes=10", "yes=")] {
            assert!(Lines::new(&bad).report().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn encode_parse_roundtrip(
            election in "[a-z0-9-]{1,12}",
            segs in prop::collection::vec("[A-Za-z]{1,6}", 1..4),
            seq in any::<u64>(), yes in any::<u64>(), no in any::<u64>(),
            blank in any::<u64>(), invalid in any::<u64>(), fin in any::<bool>(),
        ) {
            let mut r = Report::preliminary(election, JurisdictionId::new(segs).unwrap(), seq,
                VoteCount::with_blank_invalid(yes, no, blank, invalid));
            if fin { r.kind = ReportKind::Final; }
            let bytes = canonical_encode(&r).unwrap();
            let text = String::from_utf8(bytes.clone()).unwrap();
            let mut lines = Lines::new(&text);
            let parsed = lines.report().unwrap();
            lines.end().unwrap();
            prop_assert_eq!(&parsed, &r);
            prop_assert_eq!(canonical_encode(&parsed).unwrap(), bytes);
        }
    }
}
