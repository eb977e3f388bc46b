//! Keyed authentication tags and the genesis key registry.
//!
//! Transactions and stake proofs are authenticated with a deterministic MAC,
//! `tag = H(key || payload)`. The registry maps each address to its key and is
//! fixed at genesis; addresses are the first 20 bytes of `H(H(key))`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::hash::{sha256, sha256_concat, Address, Digest};

/// Secret authentication key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AuthKey(pub Digest);

impl AuthKey {
    pub fn from_seed(seed: &[u8]) -> Self {
        AuthKey(sha256_concat(&[b"reparo/key", seed]))
    }

    pub fn commitment(&self) -> Digest {
        sha256(&self.0 .0)
    }

    pub fn address(&self) -> Address {
        Address::from_digest(&sha256(&self.commitment().0))
    }

    pub fn tag(&self, payload: &[u8]) -> Digest {
        sha256_concat(&[&self.0 .0, payload])
    }
}

/// An account holder: address plus key.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Identity {
    pub address: Address,
    pub key: AuthKey,
}

impl Identity {
    pub fn from_key(key: AuthKey) -> Self {
        Identity {
            address: key.address(),
            key,
        }
    }

    /// Deterministic identity for fixtures and simulations.
    pub fn derive(label: &str, index: u64) -> Self {
        let mut seed = label.as_bytes().to_vec();
        seed.extend_from_slice(&index.to_be_bytes());
        Self::from_key(AuthKey::from_seed(&seed))
    }
}

/// Address → key table established at genesis. Append-only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyRegistry {
    keys: BTreeMap<Address, AuthKey>,
}

impl KeyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, id: &Identity) {
        self.keys.entry(id.address).or_insert(id.key);
    }

    pub fn key_of(&self, address: &Address) -> Option<&AuthKey> {
        self.keys.get(address)
    }

    pub fn verify(&self, address: &Address, payload: &[u8], tag: &Digest) -> bool {
        match self.keys.get(address) {
            Some(k) => k.address() == *address && k.tag(payload) == *tag,
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Address, &AuthKey)> {
        self.keys.iter()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

impl FromIterator<Identity> for KeyRegistry {
    fn from_iter<I: IntoIterator<Item = Identity>>(iter: I) -> Self {
        let mut reg = KeyRegistry::new();
        for id in iter {
            reg.register(&id);
        }
        reg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_accepts_own_tag_only() {
        let alice = Identity::derive("alice", 0);
        let bob = Identity::derive("bob", 0);
        let reg: KeyRegistry = [alice, bob].into_iter().collect();
        let tag = alice.key.tag(b"payload");
        assert!(reg.verify(&alice.address, b"payload", &tag));
        assert!(!reg.verify(&alice.address, b"payloaD", &tag));
        assert!(!reg.verify(&bob.address, b"payload", &tag));
        assert!(!reg.verify(&Address::special(1), b"payload", &tag));
    }
}
