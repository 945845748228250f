//! Hardware-free trusted-runtime plumbing: an authenticated-encryption
//! Merkle-tree file store with baseline and optimized node pipelines, a
//! capability-based system-interface layer, a simulated enclave boundary with
//! cost accounting, and a signed attestation pipeline.
//!
//! Nothing here talks to real enclave hardware. The [`boundary`] module is
//! the single choke point between "trusted" code and the host: storage,
//! clock, randomness and sockets all cross it, and every crossing, copied
//! byte and cleared byte is counted so the cost structure of the real thing
//! can be measured and compared across variants.

pub mod aead;
pub mod attest;
pub mod boundary;
pub mod fs;
pub mod kdf;
pub mod sandbox;

pub use aead::{AeadVariant, IntegrityError};
pub use boundary::{Boundary, BoundaryCounters, LatencyModel};
pub use fs::{FsError, FsVariant, OpenMode, ProtectedFile};
pub use kdf::{OwnerBinding, SealingContext};
