//! The protected file handle: POSIX-like reads, writes and seeks over a
//! Merkle tree of sealed nodes in untrusted storage.
//!
//! All plaintext lives in the node cache. Parent slot tables always describe
//! what is on disk: a child's `(key, tag)` slot is rewritten only at the
//! moment its new ciphertext is stored, so the backing file is a consistent
//! tree after every metadata write. Flushing seals dirty nodes deepest level
//! first and finishes with the metadata node, making the flush the durability
//! point: dropping a handle without flushing leaves the previously flushed
//! state intact on disk.
//!
//! The two performance variants share every byte of file semantics and differ
//! only in admission and eviction behaviour:
//!
//! * `Baseline` clears both node buffers on admission (two pages plus
//!   metadata), stages a defensive copy of the ciphertext into trusted memory
//!   before decrypting, clears the plaintext buffer again on eviction, and
//!   defaults to the encrypt-then-MAC cipher.
//! * `Optimized` clears nothing, decrypts directly from the untrusted view,
//!   and defaults to the MAC-then-encrypt cipher, which authenticates
//!   plaintext held in trusted memory.

use std::path::Path;
use std::sync::Arc;

use rand::rngs::OsRng;
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::cache::{zeroed_node_buf, CachedNode, NodeCache};
use super::format::{
    self, RootHeader, CLEAR_HEADER_LEN, META_AAD_LEN, META_PAYLOAD_LEN, NODE_HEADER_LEN, NODE_SIZE,
};
use super::tree;
use super::FsError;
use crate::aead::{self, AeadVariant, IntegrityError, KEY_LEN, TAG_LEN};
use crate::boundary::{BackingFile, BackingOpen, Boundary, StorageError};
use crate::kdf::{self, SealingContext};

/// Performance variant of the node pipeline. Cipher defaults follow the
/// variant but can be overridden at open time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsVariant {
    Baseline,
    Optimized,
}

impl FsVariant {
    pub fn default_aead(self) -> AeadVariant {
        match self {
            FsVariant::Baseline => AeadVariant::EncryptThenMac,
            FsVariant::Optimized => AeadVariant::MacThenEncrypt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenMode {
    Read,
    ReadWrite,
    CreateTruncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Whence {
    Set,
    Cur,
    End,
}

/// Where the file root key comes from: derived from the sealing context (the
/// default), or injected by the caller.
#[derive(Clone)]
pub enum KeySource {
    Derived(SealingContext),
    Explicit([u8; KEY_LEN]),
}

#[derive(Clone)]
pub struct OpenOptions {
    pub variant: FsVariant,
    /// Cipher override; `None` selects the variant default.
    pub aead: Option<AeadVariant>,
    pub cache_capacity: usize,
    pub key: KeySource,
}

pub const DEFAULT_CACHE_CAPACITY: usize = 48;
const MIN_CACHE_CAPACITY: usize = 16;

impl OpenOptions {
    pub fn new(variant: FsVariant, key: KeySource) -> Self {
        Self {
            variant,
            aead: None,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            key,
        }
    }

    pub fn aead(mut self, aead: AeadVariant) -> Self {
        self.aead = Some(aead);
        self
    }

    pub fn cache_capacity(mut self, cap: usize) -> Self {
        self.cache_capacity = cap;
        self
    }
}

/// An open protected file. Single-threaded by construction; the handle may
/// move between threads but is never shared.
pub struct ProtectedFile {
    boundary: Arc<Boundary>,
    backing: BackingFile,
    mode: OpenMode,
    variant: FsVariant,
    aead: AeadVariant,
    root_key: [u8; KEY_LEN],
    header: RootHeader,
    meta_payload: Box<[u8]>,
    meta_dirty: bool,
    cache: NodeCache,
    /// Recycled node buffers. Baseline admissions clear them explicitly, the
    /// way the reference implementation wipes its reused node records; fresh
    /// zero pages from the allocator would hide that cost.
    spare_buffers: Vec<Box<[u8; NODE_SIZE]>>,
    position: u64,
    poisoned: bool,
    closed: bool,
    externally_modified: bool,
}

impl std::fmt::Debug for ProtectedFile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // keys and plaintext stay out of debug output
        f.debug_struct("ProtectedFile")
            .field("backing", &self.backing.path())
            .field("mode", &self.mode)
            .field("variant", &self.variant)
            .field("aead", &self.aead)
            .field("logical_size", &self.header.logical_size)
            .field("position", &self.position)
            .field("cached_nodes", &self.cache.len())
            .field("poisoned", &self.poisoned)
            .field("closed", &self.closed)
            .finish_non_exhaustive()
    }
}

impl ProtectedFile {
    /// Opens or creates a protected file over `host_path`. `file_id` is the
    /// canonical identity of the file: it keys the root-key derivation and is
    /// hashed into the metadata header, so opening a different backing file
    /// under this identity fails.
    pub fn open(
        boundary: Arc<Boundary>,
        host_path: &Path,
        file_id: &str,
        mode: OpenMode,
        options: OpenOptions,
    ) -> Result<Self, FsError> {
        let bound_path: [u8; 32] = Sha256::digest(file_id.as_bytes()).into();
        let root_key = match &options.key {
            KeySource::Derived(ctx) => kdf::derive_root_key(ctx, file_id),
            KeySource::Explicit(key) => *key,
        };
        let cache_capacity = options.cache_capacity.max(MIN_CACHE_CAPACITY);

        match mode {
            OpenMode::CreateTruncate => {
                let backing = boundary
                    .open_backing(
                        host_path,
                        BackingOpen {
                            create: true,
                            truncate: true,
                            write: true,
                        },
                    )
                    .map_err(map_open_err)?;
                let mut salt = [0u8; 16];
                OsRng.fill_bytes(&mut salt);
                let header = RootHeader {
                    variant: options.aead.unwrap_or(options.variant.default_aead()),
                    logical_size: 0,
                    bound_path,
                    salt,
                    tag: [0; TAG_LEN],
                };
                Ok(Self {
                    boundary,
                    backing,
                    mode,
                    variant: options.variant,
                    aead: header.variant,
                    root_key,
                    header,
                    meta_payload: vec![0u8; META_PAYLOAD_LEN].into_boxed_slice(),
                    meta_dirty: true,
                    cache: NodeCache::new(cache_capacity),
                    spare_buffers: Vec::new(),
                    position: 0,
                    poisoned: false,
                    closed: false,
                    externally_modified: false,
                })
            }
            OpenMode::Read | OpenMode::ReadWrite => {
                let backing = boundary
                    .open_backing(
                        host_path,
                        BackingOpen {
                            create: false,
                            truncate: false,
                            write: mode == OpenMode::ReadWrite,
                        },
                    )
                    .map_err(map_open_err)?;

                let view = match boundary.read_node(&backing, tree::META_NODE) {
                    Ok(view) => view,
                    Err(StorageError::ShortNode { .. }) => {
                        return Err(IntegrityError::new("metadata node truncated").into())
                    }
                    Err(e) => return Err(e.into()),
                };
                // metadata admission follows the same variant discipline as
                // any other node
                let staged;
                let raw: &[u8] = match options.variant {
                    FsVariant::Baseline => {
                        boundary.track_clear(2 * NODE_SIZE as u64);
                        let mut buf = zeroed_node_buf();
                        view.copy_into(&mut buf[..]);
                        staged = buf;
                        &staged[..]
                    }
                    FsVariant::Optimized => view.as_untrusted(),
                };

                let header = RootHeader::decode(raw)?;
                if header.bound_path != bound_path {
                    return Err(IntegrityError::new("path binding mismatch").into());
                }
                let session_key = kdf::derive_session_key(&root_key, &header.salt);
                let meta_payload = aead::unseal(
                    header.variant,
                    &session_key,
                    &format::ZERO_NONCE,
                    &header.aad(),
                    &raw[CLEAR_HEADER_LEN..NODE_SIZE],
                    &header.tag,
                )?
                .into_boxed_slice();

                Ok(Self {
                    boundary,
                    backing,
                    mode,
                    variant: options.variant,
                    aead: header.variant,
                    root_key,
                    header,
                    meta_payload,
                    meta_dirty: false,
                    cache: NodeCache::new(cache_capacity),
                    spare_buffers: Vec::new(),
                    position: 0,
                    poisoned: false,
                    closed: false,
                    externally_modified: false,
                })
            }
        }
    }

    pub fn variant(&self) -> FsVariant {
        self.variant
    }

    pub fn aead_variant(&self) -> AeadVariant {
        self.aead
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn boundary(&self) -> &Arc<Boundary> {
        &self.boundary
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    pub fn cached_nodes(&self) -> usize {
        self.cache.len()
    }

    pub fn cache_capacity(&self) -> usize {
        self.cache.capacity()
    }

    /// Flags that the backing file may have been modified externally, forcing
    /// the next [`size_cached`](Self::size_cached) to revalidate with a stat
    /// crossing.
    pub fn mark_externally_modified(&mut self) {
        self.externally_modified = true;
    }

    fn check_usable(&self) -> Result<(), FsError> {
        if self.closed {
            Err(FsError::Closed)
        } else if self.poisoned {
            Err(FsError::HandlePoisoned)
        } else {
            Ok(())
        }
    }

    fn poison(&mut self, e: IntegrityError) -> FsError {
        self.poisoned = true;
        FsError::Integrity(e)
    }

    // ------------------------------------------------------------ reads ----

    /// Reads up to `count` bytes from the current position. Returns fewer
    /// bytes only at end of file.
    pub fn read(&mut self, count: usize) -> Result<Vec<u8>, FsError> {
        self.check_usable()?;
        let avail = self.header.logical_size.saturating_sub(self.position);
        let n = (count as u64).min(avail) as usize;
        let mut out = vec![0u8; n];
        let mut done = 0usize;
        while done < n {
            let offset = self.position + done as u64;
            let block = tree::block_for_offset(offset);
            let in_block = (offset % NODE_SIZE as u64) as usize;
            let take = (NODE_SIZE - in_block).min(n - done);
            if self.ensure_present(tree::leaf_for_block(block))? {
                let leaf = self
                    .cache
                    .get_mut(tree::leaf_for_block(block))
                    .expect("leaf ensured");
                out[done..done + take].copy_from_slice(&leaf.plain[in_block..in_block + take]);
            }
            // absent subtree: sparse region, keep the zeroes
            done += take;
        }
        self.position += n as u64;
        Ok(out)
    }

    /// Iterated per-segment reads. If a segment after the first fails, the
    /// segments completed so far are returned and the failure surfaces on the
    /// next call.
    pub fn read_vectored(&mut self, segment_lens: &[usize]) -> Result<Vec<Vec<u8>>, FsError> {
        let mut out = Vec::with_capacity(segment_lens.len());
        for (i, &len) in segment_lens.iter().enumerate() {
            match self.read(len) {
                Ok(seg) => out.push(seg),
                Err(e) if i == 0 => return Err(e),
                Err(_) => break,
            }
        }
        Ok(out)
    }

    // ----------------------------------------------------------- writes ----

    /// Writes the whole buffer at the current position, extending the file
    /// (sparsely) as needed.
    pub fn write(&mut self, buf: &[u8]) -> Result<usize, FsError> {
        self.check_usable()?;
        if self.mode == OpenMode::Read {
            return Err(FsError::ReadOnly);
        }
        if buf.is_empty() {
            return Ok(0);
        }
        let end = self
            .position
            .checked_add(buf.len() as u64)
            .filter(|&e| e <= tree::MAX_LOGICAL_SIZE)
            .ok_or(FsError::FileTooLarge)?;

        let mut done = 0usize;
        while done < buf.len() {
            let offset = self.position + done as u64;
            let block = tree::block_for_offset(offset);
            let leaf = tree::leaf_for_block(block);
            let in_block = (offset % NODE_SIZE as u64) as usize;
            let take = (NODE_SIZE - in_block).min(buf.len() - done);

            if !self.cache.contains(leaf) {
                let full_overwrite = in_block == 0 && take == NODE_SIZE;
                if full_overwrite {
                    // no point fetching a block we are about to replace
                    self.create_node(leaf)?;
                } else if !self.ensure_present(leaf)? {
                    self.create_node(leaf)?;
                }
            }
            let node = self.cache.get_mut(leaf).expect("leaf just ensured");
            node.plain[in_block..in_block + take].copy_from_slice(&buf[done..done + take]);
            node.dirty = true;
            done += take;
        }

        if end > self.header.logical_size {
            self.header.logical_size = end;
            self.meta_dirty = true;
        }
        self.position = end;
        Ok(buf.len())
    }

    /// Iterated per-segment writes; returns the total written. A failure
    /// after the first segment reports the bytes consumed so far.
    pub fn write_vectored(&mut self, segments: &[&[u8]]) -> Result<usize, FsError> {
        let mut total = 0usize;
        for (i, seg) in segments.iter().enumerate() {
            match self.write(seg) {
                Ok(n) => total += n,
                Err(e) if i == 0 => return Err(e),
                Err(_) => break,
            }
        }
        Ok(total)
    }

    // ------------------------------------------------------------ seeks ----

    /// Moves the cursor; seeking past the end is allowed and the gap reads as
    /// zeroes until written.
    pub fn seek(&mut self, offset: i64, whence: Whence) -> Result<u64, FsError> {
        self.check_usable()?;
        let base = match whence {
            Whence::Set => 0i128,
            Whence::Cur => self.position as i128,
            Whence::End => self.header.logical_size as i128,
        };
        let target = base + offset as i128;
        if target < 0 || target > u64::MAX as i128 {
            return Err(FsError::InvalidSeek);
        }
        self.position = target as u64;
        Ok(self.position)
    }

    // ------------------------------------------------------------- size ----

    /// Logical size with a boundary stat crossing on every call, the way a
    /// plain forwarded `fstat` behaves.
    pub fn size(&mut self) -> Result<u64, FsError> {
        self.check_usable()?;
        let _physical = self.boundary.stat(&self.backing)?;
        Ok(self.header.logical_size)
    }

    /// Logical size served from the cached metadata: zero crossings unless
    /// the external-modification marker is set, in which case it revalidates
    /// once.
    pub fn size_cached(&mut self) -> Result<u64, FsError> {
        self.check_usable()?;
        if self.externally_modified {
            let _physical = self.boundary.stat(&self.backing)?;
            self.externally_modified = false;
        }
        Ok(self.header.logical_size)
    }

    // ------------------------------------------------------ write-back -----

    /// Seals every dirty node, deepest level first, then re-seals and stores
    /// the metadata node. After a flush an immediate reopen reads identical
    /// content.
    pub fn flush(&mut self) -> Result<(), FsError> {
        self.check_usable()?;
        loop {
            let mut dirty = self.cache.dirty_indices();
            if dirty.is_empty() {
                break;
            }
            dirty.sort_by_key(|&i| std::cmp::Reverse(tree::level(i)));
            for idx in dirty {
                let Some(mut node) = self.cache.remove(idx) else {
                    continue;
                };
                if node.dirty {
                    self.seal_and_store(idx, &mut node)?;
                }
                if self.cache.is_full() {
                    self.make_room()?;
                }
                self.cache.insert(idx, node);
            }
        }
        if self.meta_dirty {
            self.write_meta()?;
        }
        Ok(())
    }

    /// Flush (unless poisoned) and release. Idempotent.
    pub fn close(&mut self) -> Result<(), FsError> {
        if self.closed {
            return Ok(());
        }
        if !self.poisoned {
            self.flush()?;
        }
        while let Some((_, mut node)) = self.cache.pop_lru() {
            if self.variant == FsVariant::Baseline {
                node.plain.fill(0);
                self.boundary.track_clear(NODE_SIZE as u64);
            }
        }
        self.closed = true;
        Ok(())
    }

    // ------------------------------------------------------- node plumbing --

    /// Walks down to `idx`, fetching sealed ancestors as needed. Returns
    /// `false` if the path crosses an empty slot (never-written subtree).
    fn ensure_present(&mut self, idx: u64) -> Result<bool, FsError> {
        if idx == tree::META_NODE {
            return Ok(true);
        }
        if self.cache.contains(idx) {
            self.cache.touch(idx);
            return Ok(true);
        }
        if !self.ensure_present(tree::parent(idx))? {
            return Ok(false);
        }
        match self.slot_of(idx) {
            None => Ok(false),
            Some((key, tag)) => {
                self.fetch_node(idx, &key, &tag)?;
                Ok(true)
            }
        }
    }

    /// Reads the `(key, tag)` slot describing `idx` from its parent, which
    /// must be cached.
    fn slot_of(&self, idx: u64) -> Option<([u8; KEY_LEN], [u8; TAG_LEN])> {
        if idx == tree::TREE_ROOT {
            format::slot(&self.meta_payload, 0)
        } else {
            let parent = self
                .cache
                .peek(tree::parent(idx))
                .expect("parent cached by caller");
            format::slot(&parent.plain[NODE_HEADER_LEN..], tree::slot_in_parent(idx))
        }
    }

    /// Admits the sealed node `idx` into the cache.
    fn fetch_node(
        &mut self,
        idx: u64,
        key: &[u8; KEY_LEN],
        tag: &[u8; TAG_LEN],
    ) -> Result<(), FsError> {
        self.make_room()?;
        if self.cache.contains(idx) {
            // a nested write-back re-admitted it with fresher slots
            self.cache.touch(idx);
            return Ok(());
        }
        let mut staged = match self.variant {
            FsVariant::Baseline => Some((self.take_buffer(), self.take_buffer())),
            FsVariant::Optimized => None,
        };
        let view = match self.boundary.read_node(&self.backing, idx) {
            Ok(view) => view,
            Err(StorageError::ShortNode { .. }) => {
                return Err(self.poison(IntegrityError::new("node missing from backing store")))
            }
            Err(e) => return Err(e.into()),
        };
        let aad = format::node_aad(idx);
        let node = match self.variant {
            FsVariant::Baseline => {
                // clear the full node record (two pages), stage the
                // ciphertext in trusted memory, decrypt from the staged copy
                let (mut cipher, mut plain) = staged.take().expect("staged for baseline");
                cipher.fill(0);
                plain.fill(0);
                self.boundary.track_clear(2 * NODE_SIZE as u64);
                view.copy_into(&mut cipher[..]);
                plain.copy_from_slice(&cipher[..]);
                if let Err(e) =
                    aead::unseal_in_place(self.aead, key, &format::ZERO_NONCE, &aad, &mut plain[..], tag)
                {
                    return Err(self.poison(e));
                }
                CachedNode {
                    plain,
                    cipher: Some(cipher),
                    dirty: false,
                }
            }
            FsVariant::Optimized => {
                // decrypt straight from the untrusted buffer
                let plain = match aead::unseal(
                    self.aead,
                    key,
                    &format::ZERO_NONCE,
                    &aad,
                    view.as_untrusted(),
                    tag,
                ) {
                    Ok(p) => p,
                    Err(e) => return Err(self.poison(e)),
                };
                CachedNode {
                    plain: plain.into_boxed_slice().try_into().expect("node sized"),
                    cipher: None,
                    dirty: false,
                }
            }
        };
        self.cache.insert(idx, node);
        Ok(())
    }

    /// Admits a fresh, never-stored node.
    fn create_node(&mut self, idx: u64) -> Result<(), FsError> {
        self.make_room()?;
        if self.cache.contains(idx) {
            self.cache.touch(idx);
            return Ok(());
        }
        let node = match self.variant {
            FsVariant::Baseline => {
                let mut plain = self.take_buffer();
                let mut cipher = self.take_buffer();
                plain.fill(0);
                cipher.fill(0);
                self.boundary.track_clear(2 * NODE_SIZE as u64);
                CachedNode {
                    plain,
                    cipher: Some(cipher),
                    dirty: false,
                }
            }
            FsVariant::Optimized => CachedNode::from_plain(zeroed_node_buf()),
        };
        self.cache.insert(idx, node);
        Ok(())
    }

    fn make_room(&mut self) -> Result<(), FsError> {
        while self.cache.is_full() {
            let (idx, node) = self.cache.pop_lru().expect("full cache has entries");
            self.retire(idx, node)?;
        }
        Ok(())
    }

    fn take_buffer(&mut self) -> Box<[u8; NODE_SIZE]> {
        self.spare_buffers.pop().unwrap_or_else(zeroed_node_buf)
    }

    fn recycle(&mut self, buf: Box<[u8; NODE_SIZE]>) {
        if self.spare_buffers.len() < 2 * self.cache.capacity() {
            self.spare_buffers.push(buf);
        }
    }

    /// Eviction: write back if dirty, then (Baseline) erase the plaintext.
    /// Buffers return to the spare pool either way.
    fn retire(&mut self, idx: u64, mut node: CachedNode) -> Result<(), FsError> {
        if node.dirty {
            self.seal_and_store(idx, &mut node)?;
        }
        if self.variant == FsVariant::Baseline {
            node.plain.fill(0);
            self.boundary.track_clear(NODE_SIZE as u64);
        }
        self.recycle(node.plain);
        if let Some(cipher) = node.cipher {
            self.recycle(cipher);
        }
        Ok(())
    }

    /// Seals `node` under a fresh key, stores it, and records the new
    /// `(key, tag)` in the parent's slot table. Parent slots therefore always
    /// match what is on disk.
    fn seal_and_store(&mut self, idx: u64, node: &mut CachedNode) -> Result<(), FsError> {
        let mut key = [0u8; KEY_LEN];
        OsRng.fill_bytes(&mut key);
        let mut cipher = node.cipher.take().unwrap_or_else(|| self.take_buffer());
        cipher.copy_from_slice(&node.plain[..]);
        let tag = aead::seal_in_place(
            self.aead,
            &key,
            &format::ZERO_NONCE,
            &format::node_aad(idx),
            &mut cipher[..],
        );
        self.boundary.write_node(&self.backing, idx, &cipher[..])?;
        node.cipher = Some(cipher);
        node.dirty = false;

        if idx == tree::TREE_ROOT {
            format::set_slot(&mut self.meta_payload, 0, &key, &tag);
            self.meta_dirty = true;
        } else {
            self.ensure_materialized(tree::parent(idx))?;
            let parent = self.cache.get_mut(tree::parent(idx)).expect("just ensured");
            format::set_slot(
                &mut parent.plain[NODE_HEADER_LEN..],
                tree::slot_in_parent(idx),
                &key,
                &tag,
            );
            parent.dirty = true;
        }
        Ok(())
    }

    /// Like [`ensure_present`](Self::ensure_present) but creates fresh nodes
    /// across never-written slots.
    fn ensure_materialized(&mut self, idx: u64) -> Result<(), FsError> {
        if idx == tree::META_NODE {
            return Ok(());
        }
        if self.cache.contains(idx) {
            self.cache.touch(idx);
            return Ok(());
        }
        self.ensure_materialized(tree::parent(idx))?;
        match self.slot_of(idx) {
            Some((key, tag)) => self.fetch_node(idx, &key, &tag),
            None => self.create_node(idx),
        }
    }

    /// Re-seals the metadata payload under a fresh session salt and stores
    /// node 0.
    fn write_meta(&mut self) -> Result<(), FsError> {
        OsRng.fill_bytes(&mut self.header.salt);
        let session_key = kdf::derive_session_key(&self.root_key, &self.header.salt);
        let mut sealed = self.meta_payload.to_vec();
        let aad: [u8; META_AAD_LEN] = self.header.aad();
        let tag = aead::seal_in_place(
            self.aead,
            &session_key,
            &format::ZERO_NONCE,
            &aad,
            &mut sealed,
        );
        self.header.tag = tag;
        let mut node0 = Vec::with_capacity(NODE_SIZE);
        node0.extend_from_slice(&self.header.encode());
        node0.extend_from_slice(&sealed);
        self.boundary.write_node(&self.backing, tree::META_NODE, &node0)?;
        self.meta_dirty = false;
        Ok(())
    }
}

fn map_open_err(e: StorageError) -> FsError {
    match e {
        StorageError::Io(ref io) if io.kind() == std::io::ErrorKind::NotFound => FsError::NotFound,
        other => FsError::Storage(other),
    }
}
