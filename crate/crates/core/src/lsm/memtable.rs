use std::collections::BTreeMap;

use crate::types::{Entry, Key, RangeTombstone, SeqNo};

/// In-memory write buffer: newest entry per key plus any local range
/// tombstones issued since the last flush.
#[derive(Debug, Default)]
pub struct Memtable {
    entries: BTreeMap<Key, Entry>,
    range_tombstones: Vec<RangeTombstone>,
    // Smallest seq inserted since the last clear; replaced entries keep it low.
    min_seq: Option<SeqNo>,
}

impl Memtable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Entries plus range tombstones; both count toward the flush threshold.
    pub fn len(&self) -> usize {
        self.entries.len() + self.range_tombstones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    pub fn min_seq(&self) -> Option<SeqNo> {
        self.min_seq
    }

    fn note_seq(&mut self, seq: SeqNo) {
        self.min_seq = Some(self.min_seq.map_or(seq, |m| m.min(seq)));
    }

    pub fn insert(&mut self, entry: Entry) {
        self.note_seq(entry.seq);
        self.entries.insert(entry.key, entry);
    }

    pub fn add_range_tombstone(&mut self, rt: RangeTombstone) {
        self.note_seq(rt.seq);
        self.range_tombstones.push(rt);
    }

    pub fn get(&self, key: Key) -> Option<&Entry> {
        self.entries.get(&key)
    }

    pub fn range(&self, lo: Key, hi: Key) -> impl Iterator<Item = &Entry> {
        self.entries.range(lo..hi).map(|(_, e)| e)
    }

    pub fn range_tombstones(&self) -> &[RangeTombstone] {
        &self.range_tombstones
    }

    /// Newest range tombstone whose key range contains `key`.
    pub fn newest_covering(&self, key: Key) -> Option<RangeTombstone> {
        self.range_tombstones
            .iter()
            .filter(|r| r.start <= key && key < r.end)
            .max_by_key(|r| r.seq)
            .copied()
    }

    /// Take everything out, leaving an empty buffer.
    pub fn drain(&mut self) -> (Vec<Entry>, Vec<RangeTombstone>) {
        self.min_seq = None;
        let entries = std::mem::take(&mut self.entries).into_values().collect();
        let mut rts = std::mem::take(&mut self.range_tombstones);
        rts.sort_by_key(|r| (r.start, r.seq));
        (entries, rts)
    }
}
