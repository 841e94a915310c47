//! Signing keys held in software custody. A [`KeyHandle`] signs but never
//! hands out its secret.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer as _, SigningKey, VerifyingKey};
use sha2::{Digest, Sha256};

use crate::tally::JurisdictionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Ed25519,
    /// Schnorr signatures over the multiplicative group mod 2^61 - 1.
    /// Deterministic and fast, but far too small to be secure; for tests and
    /// reproducible goldens only.
    ToySchnorr,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Ed25519 => "ed25519",
            SchemeKind::ToySchnorr => "toy-schnorr",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ed25519" => Ok(SchemeKind::Ed25519),
            "toy-schnorr" | "toy" => Ok(SchemeKind::ToySchnorr),
            other => Err(format!("unknown signature scheme {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PublicKey {
    scheme: SchemeKind,
    bytes: Vec<u8>,
}

impl PublicKey {
    /// Returns `None` when the bytes are not a well-formed key of `scheme`.
    pub fn from_bytes(scheme: SchemeKind, bytes: &[u8]) -> Option<PublicKey> {
        let ok = match scheme {
            SchemeKind::Ed25519 => {
                <[u8; 32]>::try_from(bytes).ok().and_then(|b| VerifyingKey::from_bytes(&b).ok()).is_some()
            }
            SchemeKind::ToySchnorr => toy::decode_public(bytes).is_some(),
        };
        ok.then(|| PublicKey { scheme, bytes: bytes.to_vec() })
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn verify(&self, msg: &[u8], signature: &[u8]) -> bool {
        match self.scheme {
            SchemeKind::Ed25519 => {
                let Ok(key) = <[u8; 32]>::try_from(self.bytes.as_slice()) else { return false };
                let Ok(key) = VerifyingKey::from_bytes(&key) else { return false };
                let Ok(sig) = ed25519_dalek::Signature::from_slice(signature) else { return false };
                key.verify_strict(msg, &sig).is_ok()
            }
            SchemeKind::ToySchnorr => toy::verify(&self.bytes, msg, signature),
        }
    }
}

/// The signing side of the scheme abstraction.
pub trait Signer {
    fn subject(&self) -> &JurisdictionId;
    fn public_key(&self) -> PublicKey;
    fn sign(&self, msg: &[u8]) -> Vec<u8>;
}

enum Secret {
    Ed25519(Box<SigningKey>),
    Toy(u64),
}

/// Software key custody bound to one jurisdiction.
pub struct KeyHandle {
    subject: JurisdictionId,
    secret: Secret,
}

impl KeyHandle {
    /// Key derived from `(scheme, seed, subject)`; the same inputs always
    /// give the same key.
    pub fn derive(scheme: SchemeKind, subject: JurisdictionId, seed: u64) -> KeyHandle {
        let mut h = Sha256::new();
        h.update(b"tallynet key v1\n");
        h.update(scheme.as_str().as_bytes());
        h.update(seed.to_be_bytes());
        h.update(subject.to_string().as_bytes());
        let material: [u8; 32] = h.finalize().into();
        KeyHandle::from_material(scheme, subject, material)
    }

    pub fn generate<R: rand::RngCore + rand::CryptoRng>(
        scheme: SchemeKind,
        subject: JurisdictionId,
        rng: &mut R,
    ) -> KeyHandle {
        let mut material = [0u8; 32];
        rng.fill_bytes(&mut material);
        KeyHandle::from_material(scheme, subject, material)
    }

    fn from_material(scheme: SchemeKind, subject: JurisdictionId, material: [u8; 32]) -> KeyHandle {
        let secret = match scheme {
            SchemeKind::Ed25519 => Secret::Ed25519(Box::new(SigningKey::from_bytes(&material))),
            SchemeKind::ToySchnorr => Secret::Toy(toy::secret_from(&material)),
        };
        KeyHandle { subject, secret }
    }

    pub fn scheme(&self) -> SchemeKind {
        match self.secret {
            Secret::Ed25519(_) => SchemeKind::Ed25519,
            Secret::Toy(_) => SchemeKind::ToySchnorr,
        }
    }
}

impl Signer for KeyHandle {
    fn subject(&self) -> &JurisdictionId {
        &self.subject
    }

    fn public_key(&self) -> PublicKey {
        match &self.secret {
            Secret::Ed25519(k) => PublicKey {
                scheme: SchemeKind::Ed25519,
                bytes: k.verifying_key().to_bytes().to_vec(),
            },
            Secret::Toy(x) => PublicKey { scheme: SchemeKind::ToySchnorr, bytes: toy::public(*x) },
        }
    }

    fn sign(&self, msg: &[u8]) -> Vec<u8> {
        match &self.secret {
            Secret::Ed25519(k) => k.sign(msg).to_bytes().to_vec(),
            Secret::Toy(x) => toy::sign(*x, msg),
        }
    }
}

impl fmt::Debug for KeyHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyHandle")
            .field("subject", &self.subject)
            .field("scheme", &self.scheme())
            .finish_non_exhaustive()
    }
}

mod toy {
    use sha2::{Digest, Sha256};

    const P: u64 = (1 << 61) - 1;
    const ORDER: u64 = P - 1;
    const G: u64 = 37;

    fn mul(a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % P as u128) as u64
    }

    fn pow(mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        base %= P;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mul(acc, base);
            }
            base = mul(base, base);
            exp >>= 1;
        }
        acc
    }

    fn hash(parts: &[&[u8]]) -> u64 {
        let mut h = Sha256::new();
        for p in parts {
            h.update((p.len() as u64).to_be_bytes());
            h.update(p);
        }
        let d = h.finalize();
        u64::from_be_bytes(d[..8].try_into().expect("8 bytes")) % ORDER
    }

    pub fn secret_from(material: &[u8; 32]) -> u64 {
        hash(&[b"secret", material]).max(1)
    }

    pub fn public(x: u64) -> Vec<u8> {
        pow(G, x).to_be_bytes().to_vec()
    }

    pub fn decode_public(bytes: &[u8]) -> Option<u64> {
        let y = u64::from_be_bytes(bytes.try_into().ok()?);
        (y > 0 && y < P).then_some(y)
    }

    pub fn sign(x: u64, msg: &[u8]) -> Vec<u8> {
        let k = hash(&[b"nonce", &x.to_be_bytes(), msg]).max(1);
        let r = pow(G, k);
        let e = hash(&[b"challenge", &r.to_be_bytes(), msg]);
        let xe = ((x as u128 * e as u128) % ORDER as u128) as u64;
        let s = (k + ORDER - xe) % ORDER;
        let mut out = e.to_be_bytes().to_vec();
        out.extend_from_slice(&s.to_be_bytes());
        out
    }

    pub fn verify(public: &[u8], msg: &[u8], sig: &[u8]) -> bool {
        let Some(y) = decode_public(public) else { return false };
        if sig.len() != 16 {
            return false;
        }
        let e = u64::from_be_bytes(sig[..8].try_into().expect("8 bytes"));
        let s = u64::from_be_bytes(sig[8..].try_into().expect("8 bytes"));
        if e >= ORDER || s >= ORDER {
            return false;
        }
        let r = mul(pow(G, s), pow(y, e));
        hash(&[b"challenge", &r.to_be_bytes(), msg]) == e
    }
}
