//! Range deletes as rectangles in (key × sequence) space, and the
//! disjointization that leaves every key under at most one rectangle.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::types::{Key, SeqNo};

/// The region of (key, seq) space a range delete invalidates:
/// keys `[key_lo, key_hi)` written at sequence numbers `[seq_lo, seq_hi)`.
/// `seq_hi` is the sequence number of the range delete itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EffectiveArea {
    pub key_lo: Key,
    pub key_hi: Key,
    pub seq_lo: SeqNo,
    pub seq_hi: SeqNo,
}

/// A range delete as issued: `seq_lo` is the oldest sequence number that
/// could still be live in the store when the delete was issued.
pub type RangeRecord = EffectiveArea;

impl EffectiveArea {
    pub fn new(key_lo: Key, key_hi: Key, seq_lo: SeqNo, seq_hi: SeqNo) -> Self {
        debug_assert!(key_lo < key_hi, "empty key range [{key_lo}, {key_hi})");
        debug_assert!(seq_lo < seq_hi, "empty seq range [{seq_lo}, {seq_hi})");
        EffectiveArea {
            key_lo,
            key_hi,
            seq_lo,
            seq_hi,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.key_lo < self.key_hi && self.seq_lo < self.seq_hi
    }

    pub fn covers(&self, key: Key, seq: SeqNo) -> bool {
        self.key_lo <= key && key < self.key_hi && self.seq_lo <= seq && seq < self.seq_hi
    }

    pub fn contains_key(&self, key: Key) -> bool {
        self.key_lo <= key && key < self.key_hi
    }

    pub fn keys_overlap(&self, other: &EffectiveArea) -> bool {
        self.key_lo < other.key_hi && other.key_lo < self.key_hi
    }

    /// Same rectangle restricted to keys `[lo, hi)`.
    pub fn with_keys(&self, lo: Key, hi: Key) -> Self {
        EffectiveArea::new(lo, hi, self.seq_lo, self.seq_hi)
    }
}

/// Resolve the overlap of two areas, `newer` dominating wherever their key
/// ranges meet. Returns up to three key-disjoint areas sorted by key.
pub fn disjointize_pair(older: EffectiveArea, newer: EffectiveArea) -> Vec<EffectiveArea> {
    if !older.keys_overlap(&newer) {
        let mut both = vec![older, newer];
        both.sort_by_key(|a| a.key_lo);
        return both;
    }
    assert!(
        newer.seq_hi > older.seq_hi,
        "overlapping areas must carry distinct delete sequence numbers"
    );
    let mut out = Vec::with_capacity(3);
    if older.key_lo < newer.key_lo {
        out.push(older.with_keys(older.key_lo, newer.key_lo));
    }
    out.push(newer);
    if older.key_hi > newer.key_hi {
        out.push(older.with_keys(newer.key_hi, older.key_hi));
    }
    out
}

/// Sweep the key axis over arbitrary, possibly overlapping areas and emit
/// the dominant (largest `seq_hi`) area of each key interval. Output is
/// sorted, key-disjoint and at most twice the size of the input.
pub fn sweep_disjointize(areas: &[EffectiveArea]) -> Vec<EffectiveArea> {
    if areas.is_empty() {
        return Vec::new();
    }
    let mut starts: BinaryHeap<Reverse<(Key, usize)>> = areas
        .iter()
        .enumerate()
        .map(|(i, a)| Reverse((a.key_lo, i)))
        .collect();
    let mut ends: BinaryHeap<Reverse<(Key, usize)>> = BinaryHeap::new();
    // Active areas ordered by seq_hi; ended ones are dropped lazily.
    let mut curr: BinaryHeap<(SeqNo, Reverse<usize>)> = BinaryHeap::new();
    let mut ended = vec![false; areas.len()];

    let mut out = Vec::with_capacity(areas.len());
    // Dominant area and where its current piece began.
    let mut dominant: Option<(usize, Key)> = None;

    loop {
        let next_start = starts.peek().map(|Reverse((k, _))| *k);
        let next_end = ends.peek().map(|Reverse((k, _))| *k);
        let x = match (next_start, next_end) {
            (None, None) => break,
            (Some(s), None) => s,
            (None, Some(e)) => e,
            (Some(s), Some(e)) => s.min(e),
        };
        // Ends before starts at the same coordinate.
        while let Some(&Reverse((k, i))) = ends.peek() {
            if k != x {
                break;
            }
            ends.pop();
            ended[i] = true;
        }
        while let Some(&Reverse((k, i))) = starts.peek() {
            if k != x {
                break;
            }
            starts.pop();
            curr.push((areas[i].seq_hi, Reverse(i)));
            ends.push(Reverse((areas[i].key_hi, i)));
        }
        while let Some(&(_, Reverse(i))) = curr.peek() {
            if !ended[i] {
                break;
            }
            curr.pop();
        }
        let top = curr.peek().map(|&(_, Reverse(i))| i);
        if top != dominant.map(|(i, _)| i) {
            if let Some((i, from)) = dominant {
                if from < x {
                    out.push(areas[i].with_keys(from, x));
                }
            }
            dominant = top.map(|i| (i, x));
        }
    }
    debug_assert!(dominant.is_none());
    out
}

/// True when `areas` is sorted by key and no two share a key.
pub fn is_sorted_disjoint(areas: &[EffectiveArea]) -> bool {
    areas.iter().all(EffectiveArea::is_valid)
        && areas.windows(2).all(|w| w[0].key_hi <= w[1].key_lo)
}
