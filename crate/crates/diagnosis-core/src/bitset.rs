//! Fixed-width bit vectors over state indices.
//!
//! Version spaces are subsets of the state set `X`, and belief updates are
//! dominated by intersections `S_{t,q} ∩ D(y, v, q)` followed by weighted
//! sums of prior mass over the surviving states. A packed `u64` block
//! representation keeps both operations cheap and makes a belief
//! fingerprint (for deduplicating sweeps) a plain block comparison.

use alloc::vec;
use alloc::vec::Vec;

/// A subset of `{0, 1, …, len-1}` packed into 64-bit blocks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSet {
    len: usize,
    blocks: Vec<u64>,
}

impl StateSet {
    /// The empty subset of a ground set with `len` elements.
    pub fn empty(len: usize) -> Self {
        StateSet {
            len,
            blocks: vec![0; len.div_ceil(64)],
        }
    }

    /// The full ground set `{0, …, len-1}`.
    pub fn full(len: usize) -> Self {
        let mut s = StateSet {
            len,
            blocks: vec![!0u64; len.div_ceil(64)],
        };
        s.trim();
        s
    }

    /// Number of elements in the ground set (not the subset).
    pub fn ground_len(&self) -> usize {
        self.len
    }

    /// Zero out bits beyond `len` in the last block.
    fn trim(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.blocks.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.blocks[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.blocks[i / 64] |= 1u64 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.blocks[i / 64] &= !(1u64 << (i % 64));
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    /// Number of states in the subset.
    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// In-place intersection. Both sets must share a ground set.
    pub fn intersect_with(&mut self, other: &StateSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= b;
        }
    }

    /// In-place union. Both sets must share a ground set.
    pub fn union_with(&mut self, other: &StateSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    /// `self ∩ other` as a new set.
    pub fn intersection(&self, other: &StateSet) -> StateSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    /// True when every member of `self` is in `other`.
    pub fn is_subset_of(&self, other: &StateSet) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }

    /// Iterate member indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut b = block;
            core::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let i = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some(bi * 64 + i)
                }
            })
        })
    }

    /// Sum of `weights[i]` over members. `weights` must cover the ground set.
    pub fn mass(&self, weights: &[f64]) -> f64 {
        debug_assert!(weights.len() >= self.len);
        let mut total = 0.0;
        for (bi, &block) in self.blocks.iter().enumerate() {
            let mut b = block;
            while b != 0 {
                let i = b.trailing_zeros() as usize;
                b &= b - 1;
                total += weights[bi * 64 + i];
            }
        }
        total
    }

    /// Raw blocks, used as a deduplication fingerprint for belief sweeps.
    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }
}
