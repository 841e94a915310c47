//! Issues the certificate hierarchy for the Swiss preset and writes a trust store.

use tallynet::secauth::{Pki, SchemeKind, TrustStore};
use tallynet::simnet::swiss_preset;
use tallynet::tally::jid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = swiss_preset().tree;
    let pki = Pki::bootstrap(&tree, SchemeKind::Ed25519, 1);
    let dir = std::env::temp_dir().join("tallynet-trust-store");
    let n = pki.trust_store().write(&dir)?;
    println!("wrote {n} certificates to {}", dir.display());

    let store = TrustStore::load(&dir)?;
    for cert in store.chain(&jid("CH/GR/Chur"))? {
        println!("{} issued by {} (serial {})", cert.subject, cert.issuer, cert.serial);
    }
    println!("root {} self-signed: {}", store.root.subject, store.root.is_self_signed());
    Ok(())
}
