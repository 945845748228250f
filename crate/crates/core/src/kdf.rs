//! Key hierarchy for the protected file store.
//!
//! There is no hardware sealing key here; a 256-bit master secret stands in
//! for the processor fuses. Per-file root keys are derived with
//! HKDF-SHA256 so that any change of master secret, runtime measurement,
//! binding mode or file identity yields an unrelated key:
//!
//! ```text
//! root_key = HKDF-SHA256(
//!     salt = "redoubt/fs/root-key/v1",
//!     ikm  = master_secret,
//!     info = measurement(32) ‖ binding(1) ‖ len(file_id) as u64 LE ‖ file_id,
//! )[..16]
//! ```
//!
//! The root node itself is re-sealed on every flush under a session key
//! expanded from the root key and a fresh random salt stored in the node's
//! clear header, so the fixed root key never encrypts two different payloads
//! under the same nonce.

use hkdf::Hkdf;
use sha2::Sha256;

use crate::aead::KEY_LEN;

pub const MASTER_SECRET_LEN: usize = 32;
pub const MEASUREMENT_LEN: usize = 32;

const ROOT_KEY_SALT: &[u8] = b"redoubt/fs/root-key/v1";
const SESSION_KEY_SALT: &[u8] = b"redoubt/fs/root-salt/v1";

/// Whether derived keys follow the runtime measurement or only the secret
/// owner. Both modes feed every context field into the KDF; the binding is a
/// domain-separation byte, so keys sealed under one mode never open under the
/// other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwnerBinding {
    EnclaveBound,
    OwnerBound,
}

impl OwnerBinding {
    pub fn as_u8(self) -> u8 {
        match self {
            OwnerBinding::EnclaveBound => 0,
            OwnerBinding::OwnerBound => 1,
        }
    }
}

/// The simulated enclave key context: master secret plus the measurement of
/// the runtime build and policy it is bound to.
#[derive(Clone)]
pub struct SealingContext {
    master_secret: [u8; MASTER_SECRET_LEN],
    measurement: [u8; MEASUREMENT_LEN],
    owner_binding: OwnerBinding,
}

impl SealingContext {
    pub fn new(
        master_secret: [u8; MASTER_SECRET_LEN],
        measurement: [u8; MEASUREMENT_LEN],
        owner_binding: OwnerBinding,
    ) -> Self {
        Self {
            master_secret,
            measurement,
            owner_binding,
        }
    }

    pub fn measurement(&self) -> &[u8; MEASUREMENT_LEN] {
        &self.measurement
    }

    pub fn owner_binding(&self) -> OwnerBinding {
        self.owner_binding
    }
}

impl std::fmt::Debug for SealingContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // never print the master secret
        f.debug_struct("SealingContext")
            .field("measurement", &self.measurement)
            .field("owner_binding", &self.owner_binding)
            .finish_non_exhaustive()
    }
}

/// Derives the per-file root key. Pure in all inputs.
pub fn derive_root_key(ctx: &SealingContext, file_id: &str) -> [u8; KEY_LEN] {
    let mut info = Vec::with_capacity(MEASUREMENT_LEN + 1 + 8 + file_id.len());
    info.extend_from_slice(&ctx.measurement);
    info.push(ctx.owner_binding.as_u8());
    info.extend_from_slice(&(file_id.len() as u64).to_le_bytes());
    info.extend_from_slice(file_id.as_bytes());

    let hk = Hkdf::<Sha256>::new(Some(ROOT_KEY_SALT), &ctx.master_secret);
    let mut key = [0u8; KEY_LEN];
    hk.expand(&info, &mut key).expect("16 bytes is a valid HKDF length");
    key
}

/// Expands the per-flush session key that seals the root node, from the root
/// key and the random salt recorded in the node's clear header.
pub fn derive_session_key(root_key: &[u8; KEY_LEN], salt: &[u8; 16]) -> [u8; KEY_LEN] {
    let hk = Hkdf::<Sha256>::new(Some(SESSION_KEY_SALT), root_key);
    let mut key = [0u8; KEY_LEN];
    hk.expand(salt, &mut key).expect("16 bytes is a valid HKDF length");
    key
}
