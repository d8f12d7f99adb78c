//! Brute-force ground truth for every read path.

use std::collections::BTreeMap;

use crate::trace::Operation;
use crate::types::{Key, SeqNo};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleValue {
    Value(Vec<u8>),
    NotFound,
}

/// Replays operations against a plain ordered map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShadowOracle {
    // key -> (seq of last write, value or None when deleted)
    map: BTreeMap<Key, (SeqNo, Option<Vec<u8>>)>,
    seq: SeqNo,
}

impl ShadowOracle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Apply one operation; reads are ignored.
    pub fn apply(&mut self, op: &Operation) {
        match op {
            Operation::Put { key, value } => {
                self.seq += 1;
                self.map.insert(*key, (self.seq, Some(value.clone())));
            }
            Operation::Delete { key } => {
                self.seq += 1;
                self.map.insert(*key, (self.seq, None));
            }
            Operation::RangeDelete { lo, hi } => {
                self.seq += 1;
                let seq = self.seq;
                for (_, slot) in self.map.range_mut(*lo..*hi) {
                    *slot = (seq, None);
                }
            }
            Operation::Get { .. } | Operation::Scan { .. } => {}
        }
    }

    pub fn get(&self, key: Key) -> OracleValue {
        match self.map.get(&key) {
            Some((_, Some(v))) => OracleValue::Value(v.clone()),
            _ => OracleValue::NotFound,
        }
    }

    /// Live keys in `[lo, hi)` in ascending order.
    pub fn scan(&self, lo: Key, hi: Key) -> Vec<(Key, Vec<u8>)> {
        if lo >= hi {
            return Vec::new();
        }
        self.map
            .range(lo..hi)
            .filter_map(|(k, (_, v))| v.as_ref().map(|v| (*k, v.clone())))
            .collect()
    }

    pub fn live_keys(&self) -> impl Iterator<Item = Key> + '_ {
        self.map
            .iter()
            .filter(|(_, (_, v))| v.is_some())
            .map(|(k, _)| *k)
    }
}
