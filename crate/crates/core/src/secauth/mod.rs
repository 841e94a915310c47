//! Authenticated reporting: a certificate hierarchy mirroring the
//! jurisdiction tree, canonical report encoding, signatures, replay
//! protection and revocation.
//!
//! Every office holds a [`KeyHandle`] and a certificate issued by its parent;
//! the federal office holds the self-signed root. A [`SignedReport`] carries
//! the sender's chain so any receiver that trusts the root can check it:
//!
//! ```
//! use tallynet::secauth::{sign_report, verify_report, Pki, ReplayGuard, RevocationList, SchemeKind};
//! use tallynet::simnet::Report;
//! use tallynet::tally::{jid, JurisdictionTree, VoteCount};
//!
//! let tree = JurisdictionTree::builder(jid("CH")).node(jid("CH/ZG")).build().unwrap();
//! let pki = Pki::bootstrap(&tree, SchemeKind::Ed25519, 42);
//! let zg = jid("CH/ZG");
//! let report = Report::preliminary("family-2013", zg.clone(), 1, VoteCount::new(17_703, 19_570));
//! let sr = sign_report(pki.key(&zg).unwrap(), pki.chain(&zg).unwrap(), report).unwrap();
//!
//! let mut seen = ReplayGuard::new();
//! let crl = RevocationList::new();
//! assert!(verify_report(&sr, pki.root(), &crl, "family-2013", &mut seen).is_ok());
//! assert!(verify_report(&sr, pki.root(), &crl, "family-2013", &mut seen).is_err());
//! ```

mod cert;
mod encode;
mod keys;
mod verify;

use thiserror::Error;

use crate::simnet::ChannelSpec;
use crate::tally::JurisdictionId;

pub use cert::{issue_certificate, Certificate, Pki, TrustStore};
pub use encode::canonical_encode;
pub use keys::{KeyHandle, PublicKey, SchemeKind, Signer};
pub use verify::{
    sign_report, verify_authentic, verify_report, RejectReason, ReplayGuard, RevocationList,
    SignedReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecAuthError {
    #[error("cannot encode: {0}")]
    Encoding(String),
    #[error("{subject} is not a direct child of issuer {issuer}")]
    Hierarchy { issuer: JurisdictionId, subject: JurisdictionId },
    #[error("key or certificate belongs to {got}, expected {expected}")]
    SubjectMismatch { expected: JurisdictionId, got: JurisdictionId },
    #[error("no key or certificate provisioned for {0}")]
    Provisioning(JurisdictionId),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("certificate: {0}")]
    Certificate(String),
    #[error("io: {0}")]
    Io(String),
}

/// Upgrades a channel to signed transport between two provisioned offices.
/// Integrity and authenticity become guaranteed; a signed message can still
/// be held back, so delayability is unchanged.
pub fn wrap_channel(
    channel: &ChannelSpec,
    pki: &Pki,
    sender: &JurisdictionId,
    receiver: &JurisdictionId,
) -> Result<ChannelSpec, SecAuthError> {
    for id in [sender, receiver] {
        if pki.certificate(id).is_none() || pki.key(id).is_none() {
            return Err(SecAuthError::Provisioning(id.clone()));
        }
    }
    Ok(ChannelSpec {
        name: format!("signed({})", channel.name),
        integrity: true,
        authenticity: true,
        signed: true,
        ..channel.clone()
    })
}
