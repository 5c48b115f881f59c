//! Authentication keys shared between a user and the authenticator.
//!
//! A key is the bit string `h(ID, C)` for a registered user identity and a
//! call counter, truncated or extended to the user's key length. The hash is
//! treated as a black-box one-way function; the construction used here is
//! SHA-256 in counter mode, identified by [`HASH_ID`] in configurations and
//! transcripts. Bumping the counter yields a fresh, unrelated key.

use sha2::{Digest, Sha256};

/// Identifier of the keyed-hash construction backing [`derive_auth_key`].
pub const HASH_ID: &str = "sha256-ctr";

/// Bit string shared between a user and the authenticator; drives every
/// keyed H/I operation in the protocols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthKey {
    pub user_id: Vec<u8>,
    pub counter: u64,
    pub bits: Vec<u8>,
}

impl AuthKey {
    /// Key with explicitly pinned bits, for tests and scripted scenarios.
    pub fn from_bits(bits: Vec<u8>) -> AuthKey {
        assert!(!bits.is_empty(), "key must have at least one bit");
        assert!(bits.iter().all(|&b| b <= 1), "key bits must be 0 or 1");
        AuthKey { user_id: Vec::new(), counter: 0, bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Key bit used at sequence index `i`; the key is reused cyclically when
    /// the sequence outgrows it.
    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i % self.bits.len()]
    }

    /// Number of one bits among the first `count` cyclic positions.
    pub fn ones_among(&self, count: usize) -> usize {
        (0..count).filter(|&i| self.bit(i) == 1).count()
    }
}

/// Derives the `len`-bit authentication key `h(id, counter)`.
pub fn derive_auth_key(id: &[u8], counter: u64, len: usize) -> AuthKey {
    assert!(len >= 1, "key length must be at least one bit");
    let mut bits = Vec::with_capacity(len);
    let mut block: u64 = 0;
    'outer: loop {
        let mut hasher = Sha256::new();
        hasher.update(id);
        hasher.update([0u8]);
        hasher.update(counter.to_be_bytes());
        hasher.update(block.to_be_bytes());
        let digest = hasher.finalize();
        for byte in digest {
            for shift in (0..8).rev() {
                bits.push((byte >> shift) & 1);
                if bits.len() == len {
                    break 'outer;
                }
            }
        }
        block += 1;
    }
    AuthKey { user_id: id.to_vec(), counter, bits }
}
