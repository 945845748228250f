use std::sync::Arc;

use redoubt_core::aead::AeadVariant;
use redoubt_core::boundary::{Boundary, LatencyModel};
use redoubt_core::fs::{FsVariant, KeySource, OpenOptions};
use redoubt_core::kdf::{OwnerBinding, SealingContext};

pub fn boundary() -> Arc<Boundary> {
    Arc::new(Boundary::new(LatencyModel::client_sgx()))
}

pub fn ctx(master: u8, measurement: u8) -> SealingContext {
    SealingContext::new([master; 32], [measurement; 32], OwnerBinding::EnclaveBound)
}

pub fn opts(variant: FsVariant) -> OpenOptions {
    OpenOptions::new(variant, KeySource::Derived(ctx(1, 2)))
}

/// Every fs/cipher combination.
#[allow(dead_code)]
pub fn all_configs() -> Vec<(FsVariant, AeadVariant)> {
    vec![
        (FsVariant::Baseline, AeadVariant::EncryptThenMac),
        (FsVariant::Baseline, AeadVariant::MacThenEncrypt),
        (FsVariant::Optimized, AeadVariant::EncryptThenMac),
        (FsVariant::Optimized, AeadVariant::MacThenEncrypt),
    ]
}

/// Scans `haystack` for any 16-byte window of `payload`, in one pass: a
/// two-byte prefix bitmap rejects almost every position, a hash set confirms
/// the rest.
#[allow(dead_code)]
pub fn leaks_any_window(haystack: &[u8], payload: &[u8]) -> bool {
    use std::collections::HashSet;
    if payload.len() < 16 || haystack.len() < 16 {
        return false;
    }
    let mut prefixes = vec![false; 1 << 16];
    let mut windows: HashSet<[u8; 16]> = HashSet::with_capacity(payload.len());
    for w in payload.windows(16) {
        let w: [u8; 16] = w.try_into().unwrap();
        prefixes[(u16::from(w[0]) as usize) << 8 | w[1] as usize] = true;
        windows.insert(w);
    }
    for i in 0..=haystack.len() - 16 {
        let p = (u16::from(haystack[i]) as usize) << 8 | haystack[i + 1] as usize;
        if prefixes[p] && windows.contains::<[u8; 16]>(&haystack[i..i + 16].try_into().unwrap()) {
            return true;
        }
    }
    false
}

/// Deterministic filler bytes.
#[allow(dead_code)]
pub fn pattern(seed: u64, len: usize) -> Vec<u8> {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    (0..len)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 56) as u8
        })
        .collect()
}
