//! Signature scheme interface with a keyed-hash stand-in.
//!
//! The protocol only needs sign/verify as a black box. The default
//! implementation is a MAC-style keyed hash: verification recomputes the
//! tag with the same key, so it is NOT a public-key signature and offers no
//! security against a holder of the verification key. Real schemes plug in
//! behind the same trait.

use sha2::{Digest, Sha256};

pub trait SignatureScheme {
    fn sign(&self, msg: &[u8]) -> Vec<u8>;
    fn verify(&self, msg: &[u8], sig: &[u8]) -> bool;
    /// Opaque identifier for the verifying side; for the keyed-hash stub
    /// this equals the secret key.
    fn verification_key(&self) -> Vec<u8>;
}

/// Keyed SHA-256 tag; deterministic under a fixed key.
#[derive(Clone, Debug)]
pub struct KeyedHashSignature {
    key: [u8; 32],
}

impl KeyedHashSignature {
    pub fn from_seed(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"quatmoney-signing-key");
        h.update(seed.to_le_bytes());
        let key: [u8; 32] = h.finalize().into();
        KeyedHashSignature { key }
    }

    pub fn from_key(key: [u8; 32]) -> Self {
        KeyedHashSignature { key }
    }
}

impl SignatureScheme for KeyedHashSignature {
    fn sign(&self, msg: &[u8]) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update(msg);
        h.finalize().to_vec()
    }

    fn verify(&self, msg: &[u8], sig: &[u8]) -> bool {
        self.sign(msg) == sig
    }

    fn verification_key(&self) -> Vec<u8> {
        self.key.to_vec()
    }
}
