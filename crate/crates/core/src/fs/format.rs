//! On-disk format of a protected file: concatenated 4096-byte nodes.
//!
//! Node 0 is the metadata node. Its first 128 bytes are stored in the clear
//! (the format must be identifiable and the cipher variant known before any
//! decryption), everything after is sealed:
//!
//! ```text
//! offset   size  field
//! 0        8     magic "TWNFSV01"
//! 8        4     format version, u32 LE
//! 12       1     cipher variant (0 = encrypt-then-MAC, 1 = MAC-then-encrypt)
//! 13       8     logical size in bytes, u64 LE
//! 21       32    bound-path hash: SHA-256 of the canonical file id
//! 53       16    root salt, fresh random per metadata write
//! 69       16    reserved, zero                  ── AAD covers bytes 0..85
//! 85       16    root tag
//! 101      27    reserved, zero
//! 128      3968  sealed payload: 124 child slots of 32 bytes
//! ```
//!
//! The metadata payload is sealed with a session key expanded from the file
//! root key and the salt, nonce all-zero, AAD = the clear bytes `0..85`. Only
//! slot 0 is in use: it authenticates node 1, the root of the interior tree.
//!
//! Interior nodes and data leaves are full 4096-byte sealed payloads with a
//! fresh random key per write, nonce all-zero, and AAD = node index as u64 LE.
//! An interior plaintext is a 64-byte reserved header (zero) followed by 126
//! child slots; a leaf plaintext is 4096 bytes of file data. A slot holds
//! `key(16) ‖ tag(16)`; an all-zero slot means the child was never written.

use crate::aead::{AeadVariant, IntegrityError, KEY_LEN, NONCE_LEN, TAG_LEN};

pub const NODE_SIZE: usize = 4096;
pub const MAGIC: [u8; 8] = *b"TWNFSV01";
pub const FORMAT_VERSION: u32 = 1;

pub const CLEAR_HEADER_LEN: usize = 128;
/// The clear-header prefix covered by the metadata AAD (everything up to the
/// root tag).
pub const META_AAD_LEN: usize = 85;
pub const META_PAYLOAD_LEN: usize = NODE_SIZE - CLEAR_HEADER_LEN;

pub const SLOT_LEN: usize = KEY_LEN + TAG_LEN;
pub const META_SLOTS: usize = META_PAYLOAD_LEN / SLOT_LEN;
pub const NODE_HEADER_LEN: usize = 64;
pub const FANOUT: usize = (NODE_SIZE - NODE_HEADER_LEN) / SLOT_LEN;

pub const ZERO_NONCE: [u8; NONCE_LEN] = [0; NONCE_LEN];

const OFF_MAGIC: usize = 0;
const OFF_VERSION: usize = 8;
const OFF_VARIANT: usize = 12;
const OFF_LOGICAL: usize = 13;
const OFF_BOUND_PATH: usize = 21;
const OFF_SALT: usize = 53;
const OFF_TAG: usize = 85;

/// Decoded clear header of the metadata node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootHeader {
    pub variant: AeadVariant,
    pub logical_size: u64,
    pub bound_path: [u8; 32],
    pub salt: [u8; 16],
    pub tag: [u8; TAG_LEN],
}

impl RootHeader {
    pub fn encode(&self) -> [u8; CLEAR_HEADER_LEN] {
        let mut out = [0u8; CLEAR_HEADER_LEN];
        out[OFF_MAGIC..OFF_MAGIC + 8].copy_from_slice(&MAGIC);
        out[OFF_VERSION..OFF_VERSION + 4].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        out[OFF_VARIANT] = self.variant.as_u8();
        out[OFF_LOGICAL..OFF_LOGICAL + 8].copy_from_slice(&self.logical_size.to_le_bytes());
        out[OFF_BOUND_PATH..OFF_BOUND_PATH + 32].copy_from_slice(&self.bound_path);
        out[OFF_SALT..OFF_SALT + 16].copy_from_slice(&self.salt);
        out[OFF_TAG..OFF_TAG + TAG_LEN].copy_from_slice(&self.tag);
        out
    }

    pub fn decode(raw: &[u8]) -> Result<Self, IntegrityError> {
        if raw.len() < CLEAR_HEADER_LEN {
            return Err(IntegrityError::new("metadata node too short"));
        }
        if raw[OFF_MAGIC..OFF_MAGIC + 8] != MAGIC {
            return Err(IntegrityError::new("bad magic"));
        }
        let version = u32::from_le_bytes(raw[OFF_VERSION..OFF_VERSION + 4].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(IntegrityError::new("unsupported format version"));
        }
        let variant = AeadVariant::from_u8(raw[OFF_VARIANT])
            .ok_or(IntegrityError::new("unknown cipher variant"))?;
        let logical_size = u64::from_le_bytes(raw[OFF_LOGICAL..OFF_LOGICAL + 8].try_into().unwrap());
        let mut bound_path = [0u8; 32];
        bound_path.copy_from_slice(&raw[OFF_BOUND_PATH..OFF_BOUND_PATH + 32]);
        let mut salt = [0u8; 16];
        salt.copy_from_slice(&raw[OFF_SALT..OFF_SALT + 16]);
        let mut tag = [0u8; TAG_LEN];
        tag.copy_from_slice(&raw[OFF_TAG..OFF_TAG + TAG_LEN]);
        Ok(Self {
            variant,
            logical_size,
            bound_path,
            salt,
            tag,
        })
    }

    /// The clear-header bytes authenticated as AAD of the metadata payload.
    pub fn aad(&self) -> [u8; META_AAD_LEN] {
        let enc = self.encode();
        enc[..META_AAD_LEN].try_into().unwrap()
    }
}

/// Reads slot `i` out of a slot table region.
pub fn slot(table: &[u8], i: usize) -> Option<([u8; KEY_LEN], [u8; TAG_LEN])> {
    let raw = &table[i * SLOT_LEN..(i + 1) * SLOT_LEN];
    if raw.iter().all(|&b| b == 0) {
        return None;
    }
    let mut key = [0u8; KEY_LEN];
    let mut tag = [0u8; TAG_LEN];
    key.copy_from_slice(&raw[..KEY_LEN]);
    tag.copy_from_slice(&raw[KEY_LEN..]);
    Some((key, tag))
}

pub fn set_slot(table: &mut [u8], i: usize, key: &[u8; KEY_LEN], tag: &[u8; TAG_LEN]) {
    let raw = &mut table[i * SLOT_LEN..(i + 1) * SLOT_LEN];
    raw[..KEY_LEN].copy_from_slice(key);
    raw[KEY_LEN..].copy_from_slice(tag);
}

/// AAD for interior and leaf nodes: the node's own index.
pub fn node_aad(index: u64) -> [u8; 8] {
    index.to_le_bytes()
}
