use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::simnet::Report;
use crate::tally::JurisdictionId;

use super::cert::Certificate;
use super::encode::{canonical_encode, Lines};
use super::keys::Signer;
use super::SecAuthError;

/// A report, its signature over the canonical bytes, and the signer's
/// certificate chain up to (excluding) the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedReport {
    pub report: Report,
    pub signature: Vec<u8>,
    pub certificate_chain: Vec<Certificate>,
}

impl SignedReport {
    pub fn to_text(&self) -> Result<String, SecAuthError> {
        let mut s = String::from_utf8(canonical_encode(&self.report)?).expect("utf-8");
        s.push_str(&format!("signature={}\n", hex::encode(&self.signature)));
        s.push_str(&format!("chain={}\n", self.certificate_chain.len()));
        for c in &self.certificate_chain {
            s.push_str(&c.to_text());
        }
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<SignedReport, SecAuthError> {
        let mut lines = Lines::new(text);
        let report = lines.report()?;
        let signature = lines.hex("signature")?;
        let n = lines.decimal("chain")?;
        // chain length is bounded by hierarchy depth in practice
        if n > 64 {
            return Err(SecAuthError::Certificate(format!("chain of {n} certificates")));
        }
        let certificate_chain = (0..n).map(|_| Certificate::read(&mut lines)).collect::<Result<_, _>>()?;
        lines.end()?;
        Ok(SignedReport { report, signature, certificate_chain })
    }
}

pub fn sign_report(
    key: &impl Signer,
    certificate_chain: Vec<Certificate>,
    report: Report,
) -> Result<SignedReport, SecAuthError> {
    if key.subject() != &report.sender {
        return Err(SecAuthError::SubjectMismatch { expected: report.sender.clone(), got: key.subject().clone() });
    }
    if let Some(head) = certificate_chain.first() {
        if head.subject != report.sender {
            return Err(SecAuthError::SubjectMismatch { expected: report.sender.clone(), got: head.subject.clone() });
        }
    }
    let signature = key.sign(&canonical_encode(&report)?);
    Ok(SignedReport { report, signature, certificate_chain })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    WrongElection,
    /// Chain head is not the report sender.
    SubjectMismatch,
    /// Wrong length, a link whose issuer is not the subject's parent, or a
    /// broken issuer signature below the root.
    BadChain,
    UntrustedRoot,
    Revoked,
    BadSignature,
    Replay,
    Encoding,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Versioned revocation list. Merging never un-revokes a serial, and an
/// older list can never roll back a newer one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RevocationList {
    version: u64,
    revoked: BTreeSet<u64>,
}

impl RevocationList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_revoked(version: u64, serials: impl IntoIterator<Item = u64>) -> Self {
        RevocationList { version, revoked: serials.into_iter().collect() }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn revoke(&mut self, serial: u64) {
        if self.revoked.insert(serial) {
            self.version += 1;
        }
    }

    /// Applies a distributed list. Returns whether the version advanced.
    pub fn merge(&mut self, other: &RevocationList) -> bool {
        self.revoked.extend(other.revoked.iter().copied());
        if other.version > self.version {
            self.version = other.version;
            true
        } else {
            false
        }
    }

    pub fn is_revoked(&self, serial: u64) -> bool {
        self.revoked.contains(&serial)
    }

    pub fn serials(&self) -> impl Iterator<Item = u64> + '_ {
        self.revoked.iter().copied()
    }
}

/// Highest accepted sequence number per (sender, election). Sequence
/// numbers are 1-based, so 0 is never fresh.
#[derive(Debug, Clone, Default)]
pub struct ReplayGuard {
    last: HashMap<(JurisdictionId, String), u64>,
}

impl ReplayGuard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_accepted(&self, sender: &JurisdictionId, election: &str) -> u64 {
        self.last.get(&(sender.clone(), election.to_string())).copied().unwrap_or(0)
    }

    pub fn is_fresh(&self, report: &Report) -> bool {
        report.sequence_no > self.last_accepted(&report.sender, &report.election_id)
    }

    fn commit(&mut self, report: &Report) {
        self.last.insert((report.sender.clone(), report.election_id.clone()), report.sequence_no);
    }
}

/// Everything except freshness: election attribution, chain, revocation and
/// the report signature.
pub fn verify_authentic(
    sr: &SignedReport,
    trusted_root: &Certificate,
    crl: &RevocationList,
    expected_election: &str,
) -> Result<(), RejectReason> {
    let report = &sr.report;
    if report.election_id != expected_election {
        return Err(RejectReason::WrongElection);
    }
    let chain = &sr.certificate_chain;
    match chain.first() {
        Some(head) if head.subject == report.sender => {}
        None if report.sender == trusted_root.subject => {}
        _ => return Err(RejectReason::SubjectMismatch),
    }
    if !report.sender.segments().starts_with(trusted_root.subject.segments()) {
        return Err(RejectReason::UntrustedRoot);
    }
    if chain.len() != report.sender.depth() - trusted_root.subject.depth() {
        return Err(RejectReason::BadChain);
    }
    for (i, cert) in chain.iter().enumerate() {
        if !cert.issuer.is_parent_of(&cert.subject) {
            return Err(RejectReason::BadChain);
        }
        match chain.get(i + 1) {
            Some(issuer) => {
                if issuer.subject != cert.issuer || !cert.signed_by(&issuer.public_key) {
                    return Err(RejectReason::BadChain);
                }
            }
            None => {
                if cert.issuer != trusted_root.subject || !cert.signed_by(&trusted_root.public_key) {
                    return Err(RejectReason::UntrustedRoot);
                }
            }
        }
    }
    if chain.iter().chain(std::iter::once(trusted_root)).any(|c| crl.is_revoked(c.serial)) {
        return Err(RejectReason::Revoked);
    }
    let signer = chain.first().map(|c| &c.public_key).unwrap_or(&trusted_root.public_key);
    let bytes = canonical_encode(report).map_err(|_| RejectReason::Encoding)?;
    if !signer.verify(&bytes, &sr.signature) {
        return Err(RejectReason::BadSignature);
    }
    Ok(())
}

/// Full check; on acceptance the sender's sequence number is recorded.
pub fn verify_report(
    sr: &SignedReport,
    trusted_root: &Certificate,
    crl: &RevocationList,
    expected_election: &str,
    seq_state: &mut ReplayGuard,
) -> Result<(), RejectReason> {
    verify_authentic(sr, trusted_root, crl, expected_election)?;
    if !seq_state.is_fresh(&sr.report) {
        return Err(RejectReason::Replay);
    }
    seq_state.commit(&sr.report);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secauth::{Pki, SchemeKind};
    use crate::tally::{jid, JurisdictionTree, VoteCount};

    fn setup() -> Pki {
        let tree = JurisdictionTree::builder(jid("CH"))
            .node(jid("CH/ZH"))
            .node(jid("CH/GR"))
            .node(jid("CH/ZH/Uster"))
            .build()
            .unwrap();
        Pki::bootstrap(&tree, SchemeKind::ToySchnorr, 11)
    }

    fn signed(pki: &Pki, who: &str, seq: u64, election: &str) -> SignedReport {
        let id = jid(who);
        let r = Report::preliminary(election, id.clone(), seq, VoteCount::new(300, 500));
        sign_report(pki.key(&id).unwrap(), pki.chain(&id).unwrap(), r).unwrap()
    }

    #[test]
    fn untouched_report_accepts() {
        let pki = setup();
        let mut g = ReplayGuard::new();
        let sr = signed(&pki, "CH/ZH/Uster", 1, "e1");
        assert_eq!(verify_report(&sr, pki.root(), &RevocationList::new(), "e1", &mut g), Ok(()));
        assert_eq!(g.last_accepted(&jid("CH/ZH/Uster"), "e1"), 1);
    }

    #[test]
    fn flipped_count_is_bad_signature() {
        let pki = setup();
        let mut sr = signed(&pki, "CH/ZH/Uster", 1, "e1");
        sr.report.counts.yes += 1;
        assert_eq!(
            verify_report(&sr, pki.root(), &RevocationList::new(), "e1", &mut ReplayGuard::new()),
            Err(RejectReason::BadSignature)
        );
    }

    #[test]
    fn replay_is_rejected() {
        let pki = setup();
        let mut g = ReplayGuard::new();
        let crl = RevocationList::new();
        let first = signed(&pki, "CH/ZH", 1, "e1");
        let second = signed(&pki, "CH/ZH", 2, "e1");
        assert!(verify_report(&first, pki.root(), &crl, "e1", &mut g).is_ok());
        assert!(verify_report(&second, pki.root(), &crl, "e1", &mut g).is_ok());
        assert_eq!(verify_report(&first, pki.root(), &crl, "e1", &mut g), Err(RejectReason::Replay));
        // same sequence number signed twice: the second is a replay
        let dup = signed(&pki, "CH/ZH", 2, "e1");
        assert_eq!(verify_report(&dup, pki.root(), &crl, "e1", &mut g), Err(RejectReason::Replay));
        // sequence numbers are 1-based
        let zero = signed(&pki, "CH/GR", 0, "e1");
        assert_eq!(verify_report(&zero, pki.root(), &crl, "e1", &mut g), Err(RejectReason::Replay));
    }

    #[test]
    fn other_election_is_rejected() {
        let pki = setup();
        let sr = signed(&pki, "CH/ZH", 1, "A");
        assert_eq!(
            verify_report(&sr, pki.root(), &RevocationList::new(), "B", &mut ReplayGuard::new()),
            Err(RejectReason::WrongElection)
        );
    }

    #[test]
    fn revoked_canton_blocks_its_municipalities() {
        let pki = setup();
        let mut crl = RevocationList::new();
        crl.revoke(pki.certificate(&jid("CH/ZH")).unwrap().serial);
        let sr = signed(&pki, "CH/ZH/Uster", 1, "e1");
        assert_eq!(verify_report(&sr, pki.root(), &crl, "e1", &mut ReplayGuard::new()), Err(RejectReason::Revoked));
        let gr = signed(&pki, "CH/GR", 1, "e1");
        assert!(verify_report(&gr, pki.root(), &crl, "e1", &mut ReplayGuard::new()).is_ok());
    }

    #[test]
    fn revocation_survives_out_of_order_lists() {
        let mut local = RevocationList::new();
        let v2 = RevocationList::with_revoked(2, [5, 7]);
        let v1 = RevocationList::with_revoked(1, [5]);
        assert!(local.merge(&v2));
        assert!(!local.merge(&v1));
        assert!(local.is_revoked(7) && local.is_revoked(5));
        assert_eq!(local.version(), 2);
    }

    #[test]
    fn foreign_root_is_untrusted() {
        let pki = setup();
        let tree = JurisdictionTree::builder(jid("CH")).node(jid("CH/ZH")).build().unwrap();
        let other = Pki::bootstrap(&tree, SchemeKind::ToySchnorr, 999);
        let sr = signed(&other, "CH/ZH", 1, "e1");
        assert_eq!(
            verify_report(&sr, pki.root(), &RevocationList::new(), "e1", &mut ReplayGuard::new()),
            Err(RejectReason::UntrustedRoot)
        );
    }

    #[test]
    fn chain_must_have_exact_depth() {
        let pki = setup();
        let mut sr = signed(&pki, "CH/ZH/Uster", 1, "e1");
        sr.certificate_chain.pop();
        assert_eq!(
            verify_report(&sr, pki.root(), &RevocationList::new(), "e1", &mut ReplayGuard::new()),
            Err(RejectReason::BadChain)
        );
        let mut sr = signed(&pki, "CH/ZH", 1, "e1");
        sr.certificate_chain.push(pki.root().clone());
        assert_eq!(
            verify_report(&sr, pki.root(), &RevocationList::new(), "e1", &mut ReplayGuard::new()),
            Err(RejectReason::BadChain)
        );
    }

    #[test]
    fn signing_for_someone_else_fails() {
        let pki = setup();
        let uster = jid("CH/ZH/Uster");
        let r = Report::preliminary("e1", jid("CH/ZH"), 1, VoteCount::new(1, 1));
        let e = sign_report(pki.key(&uster).unwrap(), pki.chain(&uster).unwrap(), r);
        assert!(matches!(e, Err(SecAuthError::SubjectMismatch { .. })));
    }

    #[test]
    fn text_roundtrip() {
        let pki = setup();
        let sr = signed(&pki, "CH/ZH/Uster", 4, "e1");
        let text = sr.to_text().unwrap();
        assert_eq!(SignedReport::from_text(&text).unwrap(), sr);
        assert!(text.contains("\nsignature=") && text.contains("\nchain=2\n"));
    }
}
