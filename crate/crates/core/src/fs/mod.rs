//! The protected file store: a Merkle tree of fixed-size sealed nodes over an
//! untrusted backing file, with a plaintext-node LRU cache and a POSIX-like
//! handle API.
//!
//! What it defends against: reading file content from the backing store, and
//! any modification of stored bytes (detected on the first read whose
//! decryption path covers the altered node, which poisons the handle).
//!
//! What it knowingly does not defend against: rollback — an older, once-valid
//! version of the whole file opens cleanly, because nothing ties the root to
//! freshness — and metadata leakage, since node count, access pattern and the
//! logical size in the clear header are all visible to the host. There is no
//! crash recovery: a process killed mid-flush can leave a backing file whose
//! reads later fail with an integrity error.

pub mod cache;
pub mod format;
pub mod tree;

mod file;

pub use file::{
    FsVariant, KeySource, OpenMode, OpenOptions, ProtectedFile, Whence, DEFAULT_CACHE_CAPACITY,
};

use thiserror::Error;

use crate::aead::IntegrityError;
use crate::boundary::StorageError;

#[derive(Debug, Error)]
pub enum FsError {
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("handle poisoned by an earlier integrity failure")]
    HandlePoisoned,
    #[error("handle already closed")]
    Closed,
    #[error("seek resolves to a negative offset")]
    InvalidSeek,
    #[error("handle is read-only")]
    ReadOnly,
    #[error("backing file not found")]
    NotFound,
    #[error("write exceeds maximum file size")]
    FileTooLarge,
    #[error(transparent)]
    Storage(#[from] StorageError),
}
