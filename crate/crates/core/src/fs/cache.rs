//! Plaintext-node LRU cache.
//!
//! A cached node holds the two node-sized buffers (plaintext, and ciphertext
//! once sealed or defensively copied) plus the dirty flag. Capacity is small
//! (default 48 nodes), so recency is tracked with a plain vector.

use std::collections::HashMap;

use super::format::NODE_SIZE;

pub struct CachedNode {
    pub plain: Box<[u8; NODE_SIZE]>,
    pub cipher: Option<Box<[u8; NODE_SIZE]>>,
    pub dirty: bool,
}

impl CachedNode {
    pub fn from_plain(plain: Box<[u8; NODE_SIZE]>) -> Self {
        Self {
            plain,
            cipher: None,
            dirty: false,
        }
    }
}

pub fn zeroed_node_buf() -> Box<[u8; NODE_SIZE]> {
    vec![0u8; NODE_SIZE]
        .into_boxed_slice()
        .try_into()
        .expect("exact length")
}

pub struct NodeCache {
    cap: usize,
    map: HashMap<u64, CachedNode>,
    /// Recency order, least recently used first.
    order: Vec<u64>,
}

impl NodeCache {
    pub fn new(cap: usize) -> Self {
        Self {
            cap,
            map: HashMap::with_capacity(cap),
            order: Vec::with_capacity(cap),
        }
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_full(&self) -> bool {
        self.map.len() >= self.cap
    }

    pub fn contains(&self, index: u64) -> bool {
        self.map.contains_key(&index)
    }

    /// Looks up a node without touching recency.
    pub fn peek(&self, index: u64) -> Option<&CachedNode> {
        self.map.get(&index)
    }

    /// Looks up a node and marks it most recently used.
    pub fn get_mut(&mut self, index: u64) -> Option<&mut CachedNode> {
        if self.map.contains_key(&index) {
            self.touch(index);
        }
        self.map.get_mut(&index)
    }

    pub fn touch(&mut self, index: u64) {
        if let Some(pos) = self.order.iter().position(|&i| i == index) {
            self.order.remove(pos);
            self.order.push(index);
        }
    }

    /// Inserts as most recently used. The caller must have made room first.
    pub fn insert(&mut self, index: u64, node: CachedNode) {
        debug_assert!(self.map.len() < self.cap, "cache overfull");
        let prev = self.map.insert(index, node);
        debug_assert!(prev.is_none(), "node {index} already cached");
        self.order.push(index);
    }

    pub fn remove(&mut self, index: u64) -> Option<CachedNode> {
        if let Some(pos) = self.order.iter().position(|&i| i == index) {
            self.order.remove(pos);
        }
        self.map.remove(&index)
    }

    /// Pops the least recently used entry.
    pub fn pop_lru(&mut self) -> Option<(u64, CachedNode)> {
        let index = *self.order.first()?;
        self.order.remove(0);
        let node = self.map.remove(&index).expect("order tracks map");
        Some((index, node))
    }

    pub fn dirty_indices(&self) -> Vec<u64> {
        self.map
            .iter()
            .filter(|(_, n)| n.dirty)
            .map(|(&i, _)| i)
            .collect()
    }

    pub fn indices(&self) -> Vec<u64> {
        self.map.keys().copied().collect()
    }
}
