//! Authenticated encryption in the two cipher orderings used by the file
//! store: AES-128-GCM (encrypt-then-MAC) and AES-128-CCM (MAC-then-encrypt).
//!
//! Both orderings use 128-bit keys, 96-bit nonces and 128-bit detached tags,
//! so a parent node slot stores `key ‖ tag` in exactly 32 bytes regardless of
//! the variant. The CCM parameters are tag length 16 and nonce length 12
//! (L = 3), which bounds a single message to 2^24 - 1 bytes — far above the
//! 4 KiB node payloads sealed here.

use aes::Aes128;
use aes_gcm::aead::generic_array::GenericArray;
use aes_gcm::{AeadInPlace, Aes128Gcm, KeyInit};
use ccm::consts::{U12, U16};
use ccm::Ccm;
use thiserror::Error;

type Aes128Ccm = Ccm<Aes128, U16, U12>;

pub const KEY_LEN: usize = 16;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;

/// Cipher ordering.
///
/// `EncryptThenMac` authenticates the ciphertext, so a verifier must hold a
/// stable copy of the ciphertext while checking the tag. `MacThenEncrypt`
/// authenticates the plaintext, which lets the caller decrypt straight out of
/// an untrusted buffer: the tag is checked against data that already lives in
/// trusted memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AeadVariant {
    EncryptThenMac,
    MacThenEncrypt,
}

impl AeadVariant {
    pub fn as_u8(self) -> u8 {
        match self {
            AeadVariant::EncryptThenMac => 0,
            AeadVariant::MacThenEncrypt => 1,
        }
    }

    pub fn from_u8(raw: u8) -> Option<Self> {
        match raw {
            0 => Some(AeadVariant::EncryptThenMac),
            1 => Some(AeadVariant::MacThenEncrypt),
            _ => None,
        }
    }
}

/// Authenticity check failed; no plaintext was released.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("integrity check failed: {reason}")]
pub struct IntegrityError {
    pub reason: &'static str,
}

impl IntegrityError {
    pub fn new(reason: &'static str) -> Self {
        Self { reason }
    }
}

/// Encrypts `plain` and returns `(cipher, tag)` with `cipher.len() == plain.len()`.
pub fn seal(
    variant: AeadVariant,
    key: &[u8; KEY_LEN],
    nonce: &[u8; NONCE_LEN],
    aad: &[u8],
    plain: &[u8],
) -> (Vec<u8>, [u8; TAG_LEN]) {
    let mut buf = plain.to_vec();
    let tag = seal_in_place(variant, key, nonce, aad, &mut buf);
    (buf, tag)
}

/// In-place form of [`seal`]: `buf` holds plaintext on entry, ciphertext on return.
pub fn seal_in_place(
    variant: AeadVariant,
    key: &[u8; KEY_LEN],
    nonce: &[u8; NONCE_LEN],
    aad: &[u8],
    buf: &mut [u8],
) -> [u8; TAG_LEN] {
    let nonce = GenericArray::from_slice(nonce);
    let tag = match variant {
        AeadVariant::EncryptThenMac => Aes128Gcm::new(key.into())
            .encrypt_in_place_detached(nonce, aad, buf)
            .expect("payload within GCM bounds"),
        AeadVariant::MacThenEncrypt => Aes128Ccm::new(key.into())
            .encrypt_in_place_detached(nonce, aad, buf)
            .expect("payload within CCM bounds"),
    };
    tag.into()
}

/// Decrypts `cipher`, returning the plaintext only if the tag verifies.
pub fn unseal(
    variant: AeadVariant,
    key: &[u8; KEY_LEN],
    nonce: &[u8; NONCE_LEN],
    aad: &[u8],
    cipher: &[u8],
    tag: &[u8; TAG_LEN],
) -> Result<Vec<u8>, IntegrityError> {
    let mut buf = cipher.to_vec();
    unseal_in_place(variant, key, nonce, aad, &mut buf, tag)?;
    Ok(buf)
}

/// In-place form of [`unseal`]: `buf` holds ciphertext on entry and plaintext
/// on success. On failure the buffer is zeroed before returning so no partial
/// plaintext can leak out of it.
pub fn unseal_in_place(
    variant: AeadVariant,
    key: &[u8; KEY_LEN],
    nonce: &[u8; NONCE_LEN],
    aad: &[u8],
    buf: &mut [u8],
    tag: &[u8; TAG_LEN],
) -> Result<(), IntegrityError> {
    let nonce = GenericArray::from_slice(nonce);
    let tag = GenericArray::from_slice(tag);
    let outcome = match variant {
        AeadVariant::EncryptThenMac => {
            Aes128Gcm::new(key.into()).decrypt_in_place_detached(nonce, aad, buf, tag)
        }
        AeadVariant::MacThenEncrypt => {
            Aes128Ccm::new(key.into()).decrypt_in_place_detached(nonce, aad, buf, tag)
        }
    };
    outcome.map_err(|_| {
        buf.fill(0);
        IntegrityError::new("authentication tag mismatch")
    })
}
