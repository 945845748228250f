//! Oracle equivalence: every observable output of the protected file store
//! must match a plain in-memory file, for randomized operation sequences,
//! across both fs variants and both ciphers. Also the tamper-injection sweep:
//! flipping any sampled bit of any materialized node must surface as an
//! integrity error on the first read path that covers it.

mod common;

use std::collections::BTreeSet;
use std::io::{Read as _, Seek as _, SeekFrom, Write as _};
use std::sync::Arc;

use common::{all_configs, boundary, opts, pattern};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use redoubt_core::fs::{
    format::NODE_SIZE, tree, FsError, FsVariant, OpenMode, ProtectedFile, Whence,
};

/// The in-memory reference: a growable byte vector with a cursor, mirroring
/// the store's POSIX-like contract (sparse writes fill with zeroes).
struct OracleFile {
    data: Vec<u8>,
    pos: u64,
}

impl OracleFile {
    fn new() -> Self {
        Self {
            data: Vec::new(),
            pos: 0,
        }
    }

    fn read(&mut self, count: usize) -> Vec<u8> {
        let avail = (self.data.len() as u64).saturating_sub(self.pos);
        let n = (count as u64).min(avail) as usize;
        if n == 0 {
            return Vec::new();
        }
        let start = self.pos as usize;
        let out = self.data[start..start + n].to_vec();
        self.pos += n as u64;
        out
    }

    fn write(&mut self, buf: &[u8]) -> usize {
        let end = self.pos as usize + buf.len();
        if end > self.data.len() {
            self.data.resize(end, 0);
        }
        self.data[self.pos as usize..end].copy_from_slice(buf);
        self.pos = end as u64;
        buf.len()
    }

    fn seek(&mut self, offset: i64, whence: Whence) -> Option<u64> {
        let base = match whence {
            Whence::Set => 0i128,
            Whence::Cur => self.pos as i128,
            Whence::End => self.data.len() as i128,
        };
        let target = base + offset as i128;
        if target < 0 {
            return None;
        }
        self.pos = target as u64;
        Some(self.pos)
    }

    fn size(&self) -> u64 {
        self.data.len() as u64
    }
}

/// One mirrored operation sequence; returns the final oracle content.
fn run_sequence(
    file: &mut ProtectedFile,
    oracle: &mut OracleFile,
    seed: u64,
    ops: usize,
    max_payload: usize,
) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed);
    // cap offsets so sparse jumps stay affordable
    const MAX_OFFSET: u64 = 24 << 20;
    for op in 0..ops {
        match rng.gen_range(0..100) {
            0..=29 => {
                let len = rng.gen_range(0..=max_payload);
                let payload = pattern(seed ^ (op as u64), len);
                let got = file.write(&payload).unwrap();
                assert_eq!(got, oracle.write(&payload), "op {op}: write length");
            }
            30..=59 => {
                let len = rng.gen_range(0..=max_payload);
                let got = file.read(len).unwrap();
                assert_eq!(got, oracle.read(len), "op {op}: read");
            }
            60..=74 => {
                let whence = match rng.gen_range(0..3) {
                    0 => Whence::Set,
                    1 => Whence::Cur,
                    _ => Whence::End,
                };
                let offset = match whence {
                    Whence::Set => rng.gen_range(0..MAX_OFFSET) as i64,
                    _ => rng.gen_range(-(NODE_SIZE as i64) * 4..(NODE_SIZE as i64) * 4),
                };
                match (file.seek(offset, whence), oracle.seek(offset, whence)) {
                    (Ok(a), Some(b)) => assert_eq!(a, b, "op {op}: seek position"),
                    (Err(FsError::InvalidSeek), None) => {}
                    (a, b) => panic!("op {op}: seek divergence: {a:?} vs {b:?}"),
                }
            }
            75..=84 => {
                let lens: Vec<usize> =
                    (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..=max_payload / 2)).collect();
                let got = file.read_vectored(&lens).unwrap();
                for (i, seg) in got.iter().enumerate() {
                    assert_eq!(*seg, oracle.read(lens[i]), "op {op}: vectored read seg {i}");
                }
            }
            85..=92 => {
                let segs: Vec<Vec<u8>> = (0..rng.gen_range(1..4))
                    .map(|s| pattern(seed ^ (op as u64) ^ (s as u64) << 32, rng.gen_range(0..=max_payload / 2)))
                    .collect();
                let refs: Vec<&[u8]> = segs.iter().map(Vec::as_slice).collect();
                let got = file.write_vectored(&refs).unwrap();
                let mut want = 0;
                for s in &segs {
                    want += oracle.write(s);
                }
                assert_eq!(got, want, "op {op}: vectored write total");
            }
            93..=96 => {
                file.flush().unwrap();
            }
            _ => {
                assert_eq!(file.size_cached().unwrap(), oracle.size(), "op {op}: size");
            }
        }
    }
    oracle.data.clone()
}

#[test]
fn randomized_sequences_match_the_oracle_for_every_config() {
    let dir = tempfile::tempdir().unwrap();
    let b = boundary();
    for (i, (variant, aead)) in all_configs().into_iter().enumerate() {
        let path = dir.path().join(format!("o{i}.pf"));
        let mut file = ProtectedFile::open(
            Arc::clone(&b),
            &path,
            "o",
            OpenMode::CreateTruncate,
            opts(variant).aead(aead).cache_capacity(24),
        )
        .unwrap();
        let mut oracle = OracleFile::new();
        let final_content = run_sequence(&mut file, &mut oracle, 7_000 + i as u64, 1_500, 16 << 10);
        file.close().unwrap();

        // a fresh handle reads back exactly the oracle content
        let mut file =
            ProtectedFile::open(Arc::clone(&b), &path, "o", OpenMode::Read, opts(variant)).unwrap();
        assert_eq!(file.size().unwrap(), final_content.len() as u64);
        let mut got = Vec::new();
        loop {
            let chunk = file.read(1 << 20).unwrap();
            if chunk.is_empty() {
                break;
            }
            got.extend_from_slice(&chunk);
        }
        assert_eq!(got.len(), final_content.len());
        assert!(got == final_content, "reopen content diverged ({variant:?}, {aead:?})");
        file.close().unwrap();
    }
}

#[test]
fn variants_agree_byte_for_byte_on_the_same_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let b = boundary();
    let mut outputs = Vec::new();
    for variant in [FsVariant::Baseline, FsVariant::Optimized] {
        let path = dir.path().join(format!("agree-{variant:?}.pf"));
        let mut file = ProtectedFile::open(
            Arc::clone(&b),
            &path,
            "agree",
            OpenMode::CreateTruncate,
            opts(variant).cache_capacity(20),
        )
        .unwrap();
        let mut oracle = OracleFile::new();
        let content = run_sequence(&mut file, &mut oracle, 555, 800, 8 << 10);
        file.close().unwrap();
        outputs.push(content);
    }
    assert!(outputs[0] == outputs[1]);
}

/// Builds a protected file, then flips one sampled bit in every materialized
/// node. Every flip must fail the first fresh-handle read covering that node,
/// and reads elsewhere must keep working.
#[test]
fn tamper_sweep_detects_every_node() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.pf");
    let b = boundary();
    const BLOCKS: u64 = 40;
    let payload = pattern(99, (BLOCKS as usize) * NODE_SIZE);
    let mut f = ProtectedFile::open(
        Arc::clone(&b),
        &path,
        "t",
        OpenMode::CreateTruncate,
        opts(FsVariant::Optimized),
    )
    .unwrap();
    f.write(&payload).unwrap();
    f.close().unwrap();

    // every node the tree materialized for these blocks
    let mut nodes: BTreeSet<u64> = BTreeSet::new();
    for block in 0..BLOCKS {
        nodes.extend(tree::path_for_block(block));
    }
    assert!(nodes.len() as u64 >= BLOCKS + 3);

    let mut disk = std::fs::OpenOptions::new()
        .read(true)
        .write(true)
        .open(&path)
        .unwrap();
    let mut rng = StdRng::seed_from_u64(1234);
    let mut detected = 0u64;
    for &node in &nodes {
        // flip one random bit inside the node
        let byte_at = node * NODE_SIZE as u64 + rng.gen_range(0..NODE_SIZE as u64);
        let bit = 1u8 << rng.gen_range(0..8);
        let mut original = [0u8; 1];
        disk.seek(SeekFrom::Start(byte_at)).unwrap();
        disk.read_exact(&mut original).unwrap();
        disk.seek(SeekFrom::Start(byte_at)).unwrap();
        disk.write_all(&[original[0] ^ bit]).unwrap();
        disk.flush().unwrap();

        // choose a block whose decryption path covers the node
        let victim_block = if tree::is_leaf(node) {
            node - tree::FIRST_LEAF
        } else {
            (0..BLOCKS)
                .find(|&blk| tree::path_for_block(blk).contains(&node))
                .expect("some block routes through every materialized node")
        };

        let outcome = ProtectedFile::open(
            Arc::clone(&b),
            &path,
            "t",
            OpenMode::Read,
            opts(FsVariant::Optimized),
        )
        .and_then(|mut fresh| {
            fresh.seek((victim_block * NODE_SIZE as u64) as i64, Whence::Set)?;
            let got = fresh.read(NODE_SIZE)?;
            // no unverified plaintext may ever be handed out
            assert_eq!(got, payload[victim_block as usize * NODE_SIZE..][..NODE_SIZE].to_vec());
            Ok(())
        });
        match outcome {
            Err(FsError::Integrity(_)) => detected += 1,
            Err(other) => panic!("node {node}: unexpected error {other}"),
            Ok(()) => panic!("node {node}: tamper went undetected"),
        }

        // reads not covering the node still succeed (sample another block)
        if tree::is_leaf(node) && node != tree::leaf_for_block(0) {
            let mut fresh = ProtectedFile::open(
                Arc::clone(&b),
                &path,
                "t",
                OpenMode::Read,
                opts(FsVariant::Optimized),
            )
            .unwrap();
            let got = fresh.read(NODE_SIZE).unwrap();
            assert_eq!(got, payload[..NODE_SIZE].to_vec());
        }

        // undo the flip
        disk.seek(SeekFrom::Start(byte_at)).unwrap();
        disk.write_all(&original).unwrap();
        disk.flush().unwrap();
    }
    assert_eq!(detected, nodes.len() as u64, "no false negatives");

    // pristine again: everything reads
    let mut f = ProtectedFile::open(Arc::clone(&b), &path, "t", OpenMode::Read, opts(FsVariant::Optimized)).unwrap();
    assert_eq!(f.read(payload.len()).unwrap(), payload);
}
