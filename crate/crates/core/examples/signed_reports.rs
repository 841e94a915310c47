//! Signing, verifying, replaying and tampering with a preliminary report.

use tallynet::secauth::{sign_report, verify_report, Pki, ReplayGuard, RevocationList, SchemeKind};
use tallynet::simnet::{swiss_preset, Report};
use tallynet::tally::{jid, VoteCount};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = swiss_preset().tree;
    let pki = Pki::bootstrap(&tree, SchemeKind::Ed25519, 2015);
    let bl = jid("CH/BL");
    let report = Report::preliminary("rtvg-2015", bl.clone(), 1, VoteCount::new(36_340, 43_000));
    let signed = sign_report(pki.key(&bl).unwrap(), pki.chain(&bl).unwrap(), report)?;
    print!("{}", signed.to_text()?);

    let crl = RevocationList::new();
    let mut guard = ReplayGuard::new();
    println!("first delivery: {:?}", verify_report(&signed, pki.root(), &crl, "rtvg-2015", &mut guard));
    println!("replayed: {:?}", verify_report(&signed, pki.root(), &crl, "rtvg-2015", &mut guard));

    let mut tampered = signed.clone();
    tampered.report.sequence_no = 2;
    tampered.report.counts = VoteCount::new(34_515, 44_825);
    println!("tampered: {:?}", verify_report(&tampered, pki.root(), &crl, "rtvg-2015", &mut guard));

    let revoked = RevocationList::with_revoked(1, [pki.certificate(&bl).unwrap().serial]);
    let mut fresh = ReplayGuard::new();
    println!("after revocation: {:?}", verify_report(&signed, pki.root(), &revoked, "rtvg-2015", &mut fresh));
    Ok(())
}
