use proptest::prelude::*;

use tallynet::secauth::{
    sign_report, verify_authentic, verify_report, Certificate, KeyHandle, Pki, RejectReason, ReplayGuard,
    RevocationList, SchemeKind, SignedReport, TrustStore,
};
use tallynet::simnet::{swiss_preset, Report};
use tallynet::tally::{jid, JurisdictionId, VoteCount};

fn signed(pki: &Pki, who: &str, seq: u64) -> SignedReport {
    let id = jid(who);
    let r = Report::preliminary("rtvg-2015", id.clone(), seq, VoteCount::new(36_340, 43_000));
    sign_report(pki.key(&id).unwrap(), pki.chain(&id).unwrap(), r).unwrap()
}

#[test]
fn swiss_hierarchy_issues_one_certificate_per_office() {
    let tree = swiss_preset().tree;
    let pki = Pki::bootstrap(&tree, SchemeKind::ToySchnorr, 1);
    assert_eq!(pki.certificates().count(), tree.nodes().len());
    assert!(pki.root().is_self_signed());
    let cantons = tree.cantons().len();
    assert_eq!(cantons, 26);
    for c in tree.cantons() {
        let cert = pki.certificate(c).unwrap();
        assert_eq!(&cert.issuer, tree.root());
        assert!(cert.signed_by(&pki.root().public_key));
    }
    assert_eq!(pki.chain(&jid("CH/BL/Liestal")).unwrap().len(), 2);
}

#[test]
fn trust_store_roundtrip_and_determinism() {
    let tree = swiss_preset().tree;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let n = Pki::bootstrap(&tree, SchemeKind::Ed25519, 9).trust_store().write(a.path()).unwrap();
    Pki::bootstrap(&tree, SchemeKind::Ed25519, 9).trust_store().write(b.path()).unwrap();
    assert_eq!(n, tree.nodes().len());
    let store = TrustStore::load(a.path()).unwrap();
    assert_eq!(store, TrustStore::load(b.path()).unwrap());
    assert_eq!(store.chain(&jid("CH/ZG/Zug")).unwrap().len(), 2);
}

#[test]
fn generated_keys_differ_from_derived() {
    let tree = swiss_preset().tree;
    let random = Pki::bootstrap_with(&tree, |id| KeyHandle::generate(SchemeKind::Ed25519, id.clone(), &mut rand::rngs::OsRng));
    let derived = Pki::bootstrap(&tree, SchemeKind::Ed25519, 0);
    assert_ne!(random.root().public_key, derived.root().public_key);
    let sr = signed(&random, "CH/BL", 1);
    assert_eq!(verify_authentic(&sr, random.root(), &RevocationList::new(), "rtvg-2015"), Ok(()));
}

#[test]
fn rejection_reasons() {
    let tree = swiss_preset().tree;
    let pki = Pki::bootstrap(&tree, SchemeKind::ToySchnorr, 5);
    let other = Pki::bootstrap(&tree, SchemeKind::ToySchnorr, 6);
    let crl = RevocationList::new();
    let sr = signed(&pki, "CH/BL", 2);

    assert_eq!(verify_authentic(&sr, other.root(), &crl, "rtvg-2015"), Err(RejectReason::UntrustedRoot));
    assert_eq!(verify_authentic(&sr, pki.root(), &crl, "family-2013"), Err(RejectReason::WrongElection));

    let mut tampered = sr.clone();
    tampered.report.counts.no -= 1825;
    tampered.report.counts.yes += 1825;
    assert_eq!(verify_authentic(&tampered, pki.root(), &crl, "rtvg-2015"), Err(RejectReason::BadSignature));

    let mut borrowed = sr.clone();
    borrowed.certificate_chain = pki.chain(&jid("CH/BS")).unwrap();
    assert_eq!(verify_authentic(&borrowed, pki.root(), &crl, "rtvg-2015"), Err(RejectReason::SubjectMismatch));

    let revoked = RevocationList::with_revoked(1, [pki.certificate(&jid("CH/BL")).unwrap().serial]);
    assert_eq!(verify_authentic(&sr, pki.root(), &revoked, "rtvg-2015"), Err(RejectReason::Revoked));
    let municipal = signed(&pki, "CH/BL/Liestal", 1);
    assert_eq!(verify_authentic(&municipal, pki.root(), &revoked, "rtvg-2015"), Err(RejectReason::Revoked));

    let mut guard = ReplayGuard::new();
    assert_eq!(verify_report(&sr, pki.root(), &crl, "rtvg-2015", &mut guard), Ok(()));
    assert_eq!(verify_report(&sr, pki.root(), &crl, "rtvg-2015", &mut guard), Err(RejectReason::Replay));
    assert_eq!(verify_report(&signed(&pki, "CH/BL", 1), pki.root(), &crl, "rtvg-2015", &mut guard), Err(RejectReason::Replay));
    assert_eq!(verify_report(&signed(&pki, "CH/BL", 3), pki.root(), &crl, "rtvg-2015", &mut guard), Ok(()));
}

#[test]
fn revocation_never_rolls_back() {
    let mut newer = RevocationList::with_revoked(3, [7]);
    let older = RevocationList::with_revoked(2, []);
    newer.merge(&older);
    assert!(newer.is_revoked(7));
    assert_eq!(newer.version(), 3);
}

#[test]
fn key_of_another_office_cannot_sign() {
    let tree = swiss_preset().tree;
    let pki = Pki::bootstrap(&tree, SchemeKind::ToySchnorr, 5);
    let r = Report::preliminary("rtvg-2015", jid("CH/BL"), 1, VoteCount::new(1, 2));
    assert!(sign_report(pki.key(&jid("CH/BS")).unwrap(), pki.chain(&jid("CH/BL")).unwrap(), r).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_roundtrip_verifies(seq in 1u64..1_000_000, yes in 0u64..1 << 40, no in 0u64..1 << 40, ed in any::<bool>()) {
        let tree = swiss_preset().tree;
        let scheme = if ed { SchemeKind::Ed25519 } else { SchemeKind::ToySchnorr };
        let pki = Pki::bootstrap(&tree, scheme, 12);
        let id: JurisdictionId = jid("CH/GR/Chur");
        let r = Report::preliminary("family-2013", id.clone(), seq, VoteCount::new(yes, no));
        let sr = sign_report(pki.key(&id).unwrap(), pki.chain(&id).unwrap(), r).unwrap();
        let back = SignedReport::from_text(&sr.to_text().unwrap()).unwrap();
        prop_assert_eq!(&back, &sr);
        prop_assert!(verify_authentic(&back, pki.root(), &RevocationList::new(), "family-2013").is_ok());
        let root = Certificate::from_text(&pki.root().to_text()).unwrap();
        prop_assert_eq!(&root, pki.root());
    }
}
