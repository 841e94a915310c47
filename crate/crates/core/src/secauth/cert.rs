use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::tally::{JurisdictionId, JurisdictionTree};

use super::encode::Lines;
use super::keys::{KeyHandle, PublicKey, SchemeKind, Signer};
use super::SecAuthError;

/// Binds a jurisdiction to its verification key. The issuer is the subject's
/// parent in the hierarchy; only the root certificate is self-signed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Certificate {
    pub subject: JurisdictionId,
    pub issuer: JurisdictionId,
    pub serial: u64,
    pub public_key: PublicKey,
    pub issuer_signature: Vec<u8>,
}

impl Certificate {
    /// Bytes covered by the issuer signature.
    pub fn tbs_bytes(&self) -> Vec<u8> {
        tbs(&self.subject, &self.issuer, self.serial, &self.public_key)
    }

    pub fn self_signed(key: &KeyHandle, serial: u64) -> Certificate {
        let subject = key.subject().clone();
        let public_key = key.public_key();
        let issuer_signature = key.sign(&tbs(&subject, &subject, serial, &public_key));
        Certificate { issuer: subject.clone(), subject, serial, public_key, issuer_signature }
    }

    pub fn is_self_signed(&self) -> bool {
        self.subject == self.issuer
    }

    pub fn signed_by(&self, issuer_key: &PublicKey) -> bool {
        issuer_key.verify(&self.tbs_bytes(), &self.issuer_signature)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from_utf8(self.tbs_bytes()).expect("utf-8");
        s.push_str(&format!("issuer_signature={}\n", hex::encode(&self.issuer_signature)));
        s
    }

    pub fn from_text(text: &str) -> Result<Certificate, SecAuthError> {
        let mut lines = Lines::new(text);
        let cert = Certificate::read(&mut lines)?;
        lines.end()?;
        Ok(cert)
    }

    pub(crate) fn read(lines: &mut Lines<'_>) -> Result<Certificate, SecAuthError> {
        let subject = lines.jurisdiction("subject")?;
        let issuer = lines.jurisdiction("issuer")?;
        let serial = lines.decimal("serial")?;
        let scheme: SchemeKind =
            lines.field("scheme")?.parse().map_err(SecAuthError::Certificate)?;
        let key = lines.hex("public_key")?;
        let public_key = PublicKey::from_bytes(scheme, &key)
            .ok_or_else(|| SecAuthError::Certificate("malformed public key".into()))?;
        let issuer_signature = lines.hex("issuer_signature")?;
        Ok(Certificate { subject, issuer, serial, public_key, issuer_signature })
    }
}

fn tbs(subject: &JurisdictionId, issuer: &JurisdictionId, serial: u64, key: &PublicKey) -> Vec<u8> {
    format!(
        "subject={subject}\nissuer={issuer}\nserial={serial}\nscheme={}\npublic_key={}\n",
        key.scheme(),
        hex::encode(key.as_bytes())
    )
    .into_bytes()
}

/// Issues a certificate for a direct child of the issuer's jurisdiction.
pub fn issue_certificate(
    issuer_key: &impl Signer,
    issuer_cert: &Certificate,
    subject: JurisdictionId,
    subject_public_key: PublicKey,
    serial: u64,
) -> Result<Certificate, SecAuthError> {
    if issuer_key.subject() != &issuer_cert.subject {
        return Err(SecAuthError::SubjectMismatch {
            expected: issuer_cert.subject.clone(),
            got: issuer_key.subject().clone(),
        });
    }
    if !issuer_cert.subject.is_parent_of(&subject) {
        return Err(SecAuthError::Hierarchy { issuer: issuer_cert.subject.clone(), subject });
    }
    let issuer = issuer_cert.subject.clone();
    let issuer_signature = issuer_key.sign(&tbs(&subject, &issuer, serial, &subject_public_key));
    Ok(Certificate { subject, issuer, serial, public_key: subject_public_key, issuer_signature })
}

/// Keys and certificates for every node of a tree, issued top-down so that
/// each office certifies its direct subordinates.
#[derive(Debug)]
pub struct Pki {
    root: Certificate,
    certs: BTreeMap<JurisdictionId, Certificate>,
    keys: BTreeMap<JurisdictionId, KeyHandle>,
}

impl Pki {
    /// Deterministic bootstrap: keys derive from `seed`, serials follow tree
    /// order starting at 1 for the root.
    pub fn bootstrap(tree: &JurisdictionTree, scheme: SchemeKind, seed: u64) -> Pki {
        Pki::bootstrap_with(tree, |id| KeyHandle::derive(scheme, id.clone(), seed))
    }

    pub fn bootstrap_with(
        tree: &JurisdictionTree,
        mut keygen: impl FnMut(&JurisdictionId) -> KeyHandle,
    ) -> Pki {
        let nodes = tree.nodes();
        let root_key = keygen(tree.root());
        let root = Certificate::self_signed(&root_key, 1);
        let mut certs = BTreeMap::from([(tree.root().clone(), root.clone())]);
        let mut keys = BTreeMap::from([(tree.root().clone(), root_key)]);
        for (serial, id) in (2u64..).zip(nodes.into_iter().skip(1)) {
            let parent = id.parent().expect("non-root");
            let key = keygen(id);
            let cert = issue_certificate(&keys[&parent], &certs[&parent], id.clone(), key.public_key(), serial)
                .expect("tree parent issues for its child");
            certs.insert(id.clone(), cert);
            keys.insert(id.clone(), key);
        }
        Pki { root, certs, keys }
    }

    pub fn root(&self) -> &Certificate {
        &self.root
    }

    pub fn certificate(&self, id: &JurisdictionId) -> Option<&Certificate> {
        self.certs.get(id)
    }

    pub fn certificates(&self) -> impl Iterator<Item = &Certificate> {
        self.certs.values()
    }

    pub fn key(&self, id: &JurisdictionId) -> Option<&KeyHandle> {
        self.keys.get(id)
    }

    /// Certificates from `id` up to, but excluding, the root.
    pub fn chain(&self, id: &JurisdictionId) -> Option<Vec<Certificate>> {
        let mut out = Vec::new();
        let mut cur = self.certs.get(id)?;
        while !cur.is_self_signed() {
            out.push(cur.clone());
            cur = self.certs.get(&cur.issuer)?;
        }
        Some(out)
    }

    pub fn trust_store(&self) -> TrustStore {
        TrustStore {
            root: self.root.clone(),
            certs: self.certs.iter().filter(|(_, c)| !c.is_self_signed()).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }
}

/// Directory layout: `root.cert` pins the trusted root; every other
/// certificate lives at `certs/<path>.cert`, e.g. `certs/CH/ZH/Uster.cert`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustStore {
    pub root: Certificate,
    pub certs: BTreeMap<JurisdictionId, Certificate>,
}

impl TrustStore {
    pub const ROOT_FILE: &'static str = "root.cert";

    fn cert_path(dir: &Path, id: &JurisdictionId) -> PathBuf {
        let mut p = dir.join("certs");
        let segs = id.segments();
        for s in &segs[..segs.len() - 1] {
            p.push(s);
        }
        p.push(format!("{}.cert", id.last()));
        p
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<usize> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(Self::ROOT_FILE), self.root.to_text())?;
        for (id, cert) in &self.certs {
            let path = Self::cert_path(dir, id);
            fs::create_dir_all(path.parent().expect("has parent"))?;
            fs::write(path, cert.to_text())?;
        }
        Ok(self.certs.len() + 1)
    }

    /// Loads the store and checks that every certificate chains to the
    /// pinned root.
    pub fn load(dir: &Path) -> Result<TrustStore, SecAuthError> {
        let io = |e: std::io::Error| SecAuthError::Io(e.to_string());
        let root = Certificate::from_text(&fs::read_to_string(dir.join(Self::ROOT_FILE)).map_err(io)?)?;
        if !root.is_self_signed() || !root.signed_by(&root.public_key) {
            return Err(SecAuthError::Certificate("root.cert is not a valid self-signed root".into()));
        }
        let mut certs = BTreeMap::new();
        let certs_dir = dir.join("certs");
        if certs_dir.exists() {
            let mut stack = vec![certs_dir];
            while let Some(d) = stack.pop() {
                for entry in fs::read_dir(&d).map_err(io)? {
                    let path = entry.map_err(io)?.path();
                    if path.is_dir() {
                        stack.push(path);
                    } else if path.extension().is_some_and(|e| e == "cert") {
                        let cert = Certificate::from_text(&fs::read_to_string(&path).map_err(io)?)?;
                        if Self::cert_path(dir, &cert.subject) != path {
                            return Err(SecAuthError::Certificate(format!(
                                "{} holds a certificate for {}",
                                path.display(),
                                cert.subject
                            )));
                        }
                        certs.insert(cert.subject.clone(), cert);
                    }
                }
            }
        }
        let store = TrustStore { root, certs };
        for id in store.certs.keys() {
            store.chain(id)?;
        }
        Ok(store)
    }

    /// Verified chain from `id` up to, excluding, the root.
    pub fn chain(&self, id: &JurisdictionId) -> Result<Vec<Certificate>, SecAuthError> {
        let mut out: Vec<Certificate> = Vec::new();
        let mut cur = id.clone();
        while cur != self.root.subject {
            let cert = self
                .certs
                .get(&cur)
                .ok_or_else(|| SecAuthError::Certificate(format!("no certificate for {cur}")))?;
            let issuer_key = if cert.issuer == self.root.subject {
                &self.root.public_key
            } else {
                &self
                    .certs
                    .get(&cert.issuer)
                    .ok_or_else(|| SecAuthError::Certificate(format!("no certificate for {}", cert.issuer)))?
                    .public_key
            };
            if !cert.issuer.is_parent_of(&cert.subject) || !cert.signed_by(issuer_key) {
                return Err(SecAuthError::Certificate(format!("bad issuer signature on {cur}")));
            }
            out.push(cert.clone());
            cur = cert.issuer.clone();
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tally::jid;

    fn tree() -> JurisdictionTree {
        JurisdictionTree::builder(jid("CH"))
            .node(jid("CH/ZH"))
            .node(jid("CH/BE"))
            .node(jid("CH/ZH/Uster"))
            .node(jid("CH/BE/Biel"))
            .build()
            .unwrap()
    }

    #[test]
    fn root_issues_canton() {
        let pki = Pki::bootstrap(&tree(), SchemeKind::ToySchnorr, 1);
        let chain = pki.chain(&jid("CH/ZH")).unwrap();
        assert_eq!(chain.len(), 1);
        assert!(chain[0].signed_by(&pki.root().public_key));
        assert_eq!(pki.chain(&jid("CH/ZH/Uster")).unwrap().len(), 2);
        assert!(pki.chain(&jid("CH")).unwrap().is_empty());
    }

    #[test]
    fn canton_cannot_certify_foreign_municipality() {
        let pki = Pki::bootstrap(&tree(), SchemeKind::ToySchnorr, 1);
        let zh = pki.key(&jid("CH/ZH")).unwrap();
        let pk = pki.key(&jid("CH/BE/Biel")).unwrap().public_key();
        let e = issue_certificate(zh, pki.certificate(&jid("CH/ZH")).unwrap(), jid("CH/BE/Biel"), pk.clone(), 99);
        assert!(matches!(e, Err(SecAuthError::Hierarchy { .. })));
        // grandchildren are not direct children either
        let root = pki.key(&jid("CH")).unwrap();
        let e = issue_certificate(root, pki.root(), jid("CH/BE/Biel"), pk, 99);
        assert!(matches!(e, Err(SecAuthError::Hierarchy { .. })));
    }

    #[test]
    fn serials_are_unique() {
        let pki = Pki::bootstrap(&tree(), SchemeKind::Ed25519, 3);
        let mut serials: Vec<u64> = pki.certificates().map(|c| c.serial).collect();
        serials.sort();
        serials.dedup();
        assert_eq!(serials, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn certificate_text_roundtrip() {
        let pki = Pki::bootstrap(&tree(), SchemeKind::Ed25519, 3);
        let c = pki.certificate(&jid("CH/ZH/Uster")).unwrap();
        assert_eq!(&Certificate::from_text(&c.to_text()).unwrap(), c);
        assert!(c.to_text().starts_with("subject=CH/ZH/Uster\nissuer=CH/ZH\nserial="));
    }

    #[test]
    fn trust_store_dir_roundtrip() {
        let pki = Pki::bootstrap(&tree(), SchemeKind::ToySchnorr, 5);
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(pki.trust_store().write(dir.path()).unwrap(), 5);
        assert!(dir.path().join("certs/CH/ZH/Uster.cert").exists());
        let loaded = TrustStore::load(dir.path()).unwrap();
        assert_eq!(loaded, pki.trust_store());
        assert_eq!(loaded.chain(&jid("CH/BE/Biel")).unwrap(), pki.chain(&jid("CH/BE/Biel")).unwrap());
    }
}
