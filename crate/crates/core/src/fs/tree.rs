//! Tree geometry: a complete 126-ary tree in breadth-first node numbering.
//!
//! Node 0 is the metadata node whose single child is node 1, the interior
//! root. Interior levels are fixed, so every node index is a pure function of
//! the data block it serves and never changes as the file grows:
//!
//! ```text
//! level 0:  node 0                    metadata
//! level 1:  node 1                    interior root
//! level 2:  nodes 2..=127             126 interiors
//! level 3:  nodes 128..=16003         126^2 interiors
//! level 4:  nodes 16004..             126^3 data leaves
//! ```
//!
//! Children of interior node `n` are `126(n-1)+2 ..= 126(n-1)+127`. Data
//! block `b` lives in leaf `FIRST_LEAF + b`; the backing file is written
//! sparsely, so unused positions occupy no storage.

use super::format::{FANOUT, NODE_SIZE};

pub const META_NODE: u64 = 0;
pub const TREE_ROOT: u64 = 1;
pub const FIRST_LEAF: u64 = 16_004;
pub const MAX_LEAVES: u64 = (FANOUT * FANOUT * FANOUT) as u64;
pub const MAX_LOGICAL_SIZE: u64 = MAX_LEAVES * NODE_SIZE as u64;

/// Interior levels above a leaf (L3, L2, root, metadata).
pub const DEPTH: u32 = 4;

pub fn leaf_for_block(block: u64) -> u64 {
    debug_assert!(block < MAX_LEAVES);
    FIRST_LEAF + block
}

pub fn block_for_offset(offset: u64) -> u64 {
    offset / NODE_SIZE as u64
}

pub fn is_leaf(node: u64) -> bool {
    node >= FIRST_LEAF
}

pub fn parent(node: u64) -> u64 {
    debug_assert!(node >= TREE_ROOT);
    if node == TREE_ROOT {
        META_NODE
    } else {
        (node - 2) / FANOUT as u64 + 1
    }
}

/// Position of `node` in its parent's slot table.
pub fn slot_in_parent(node: u64) -> usize {
    debug_assert!(node >= TREE_ROOT);
    if node == TREE_ROOT {
        0
    } else {
        ((node - 2) % FANOUT as u64) as usize
    }
}

/// Top-down path from the metadata node to the leaf holding `block`:
/// `[0, 1, L2, L3, leaf]`.
pub fn path_for_block(block: u64) -> [u64; DEPTH as usize + 1] {
    let leaf = leaf_for_block(block);
    let l3 = parent(leaf);
    let l2 = parent(l3);
    debug_assert_eq!(parent(l2), TREE_ROOT);
    [META_NODE, TREE_ROOT, l2, l3, leaf]
}

/// Distance from the metadata node: 0 for the metadata node itself, `DEPTH`
/// for leaves. Used to order write-back so children seal before parents.
pub fn level(node: u64) -> u32 {
    match node {
        0 => 0,
        1 => 1,
        2..=127 => 2,
        128..=16_003 => 3,
        _ => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_child_arithmetic_is_consistent() {
        assert_eq!(parent(TREE_ROOT), META_NODE);
        assert_eq!(parent(2), 1);
        assert_eq!(parent(127), 1);
        assert_eq!(parent(128), 2);
        assert_eq!(parent(16_003), 127);
        assert_eq!(parent(FIRST_LEAF), 128);
        // last leaf hangs off the last level-3 interior
        assert_eq!(parent(FIRST_LEAF + MAX_LEAVES - 1), 16_003);
    }

    #[test]
    fn slots_enumerate_each_parents_children() {
        for first_child in [2u64, 128, FIRST_LEAF] {
            let p = parent(first_child);
            for i in 0..FANOUT as u64 {
                let child = first_child + i;
                assert_eq!(parent(child), p);
                assert_eq!(slot_in_parent(child), i as usize);
            }
            assert_ne!(parent(first_child + FANOUT as u64), p);
        }
    }

    #[test]
    fn paths_walk_parent_links() {
        for block in [0u64, 1, 125, 126, 43_749, MAX_LEAVES - 1] {
            let path = path_for_block(block);
            assert_eq!(path[0], META_NODE);
            for w in path.windows(2) {
                assert_eq!(parent(w[1]), w[0]);
            }
            assert_eq!(path[4], leaf_for_block(block));
            assert_eq!(level(path[4]), DEPTH);
        }
    }

    #[test]
    fn levels_partition_the_index_space() {
        assert_eq!(level(0), 0);
        assert_eq!(level(1), 1);
        assert_eq!(level(2), 2);
        assert_eq!(level(127), 2);
        assert_eq!(level(128), 3);
        assert_eq!(level(16_003), 3);
        assert_eq!(level(FIRST_LEAF), 4);
    }
}
