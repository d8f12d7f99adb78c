//! Leveled LSM-tree with the per-key delete baselines and local range
//! tombstones.

pub mod bloom;
pub mod memtable;
pub mod run;

use std::collections::{BTreeMap, BinaryHeap};

use crate::config::{StoreConfig, Strategy};
use crate::device::BlockDevice;
use crate::error::{Error, Result};
use crate::types::{Entry, Key, RangeTombstone, SeqCounter, SeqNo};

use self::memtable::Memtable;
use self::run::{BloomCounts, SortedRun};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LookupResult {
    Found { value: Vec<u8>, seq: SeqNo },
    NotFound,
    DeletedByTombstone,
    DeletedByRange,
}

impl LookupResult {
    pub fn value(&self) -> Option<&[u8]> {
        match self {
            LookupResult::Found { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn into_value(self) -> Option<Vec<u8>> {
        match self {
            LookupResult::Found { value, .. } => Some(value),
            _ => None,
        }
    }
}

/// Describes one merge into `level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompactionContext {
    pub level: usize,
    pub bottommost: bool,
    /// Key span of the merged input, half-open; empty when the input was.
    pub key_lo: Key,
    pub key_hi: Key,
}

/// Lets an outer layer observe and filter compactions.
pub trait CompactionHook {
    /// Called with the merged, newest-per-key output before it is written.
    fn filter(&mut self, entries: Vec<Entry>, _ctx: &CompactionContext) -> Result<Vec<Entry>> {
        Ok(entries)
    }

    /// Called after a compaction whose output is the bottommost level.
    fn on_bottom_compaction(&mut self, _watermark: SeqNo, _ctx: &CompactionContext) -> Result<()> {
        Ok(())
    }
}

pub struct NoHook;

impl CompactionHook for NoHook {}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LsmStats {
    /// Range tombstone blocks probed (one per level holding any).
    pub rt_probes: u64,
    pub rt_records_examined: u64,
    pub bloom: BloomCounts,
    pub flushes: u64,
    pub compactions: u64,
    pub bottom_compactions: u64,
}

/// Tracks the newest range tombstone covering a key during an ascending
/// sweep over keys.
struct RtCover {
    rts: Vec<RangeTombstone>,
    next: usize,
    active: BinaryHeap<(SeqNo, Key)>,
}

impl RtCover {
    fn new(mut rts: Vec<RangeTombstone>) -> Self {
        rts.sort_by_key(|r| r.start);
        RtCover {
            rts,
            next: 0,
            active: BinaryHeap::new(),
        }
    }

    /// Newest seq covering `key`; keys must be passed in ascending order.
    fn newest(&mut self, key: Key) -> Option<SeqNo> {
        while self.next < self.rts.len() && self.rts[self.next].start <= key {
            let r = self.rts[self.next];
            self.active.push((r.seq, r.end));
            self.next += 1;
        }
        while let Some(&(_, end)) = self.active.peek() {
            if end > key {
                break;
            }
            self.active.pop();
        }
        self.active.peek().map(|&(s, _)| s)
    }
}

fn decide(entry: Option<&Entry>, rt: Option<RangeTombstone>) -> Option<LookupResult> {
    if let Some(r) = rt {
        debug_assert!(entry.is_none_or(|e| e.seq != r.seq));
        if entry.is_none_or(|e| r.seq > e.seq) {
            return Some(LookupResult::DeletedByRange);
        }
    }
    entry.map(|e| {
        if e.is_tombstone() {
            LookupResult::DeletedByTombstone
        } else {
            LookupResult::Found {
                value: e.value.clone(),
                seq: e.seq,
            }
        }
    })
}

pub fn run_file_name(level: usize) -> String {
    format!("sst_{level}.run")
}

pub struct LsmStore {
    cfg: StoreConfig,
    device: BlockDevice,
    memtable: Memtable,
    /// `levels[i]` is level `i + 1`.
    levels: Vec<Option<SortedRun>>,
    seq: SeqCounter,
    stats: LsmStats,
}

impl LsmStore {
    pub fn new(device: BlockDevice, cfg: StoreConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(LsmStore {
            cfg,
            device,
            memtable: Memtable::new(),
            levels: Vec::new(),
            seq: SeqCounter::new(),
            stats: LsmStats::default(),
        })
    }

    /// Reattach to runs listed as `(level, file name)`.
    pub fn open(
        device: BlockDevice,
        cfg: StoreConfig,
        last_seq: SeqNo,
        runs: &[(usize, String)],
    ) -> Result<Self> {
        let mut store = Self::new(device, cfg)?;
        store.seq = SeqCounter::resume(last_seq);
        for (level, name) in runs {
            let run = SortedRun::open(&store.device, name, &store.cfg)?;
            store.slot(*level);
            store.levels[level - 1] = Some(run);
        }
        Ok(store)
    }

    pub fn config(&self) -> &StoreConfig {
        &self.cfg
    }

    pub fn device(&self) -> &BlockDevice {
        &self.device
    }

    pub fn stats(&self) -> LsmStats {
        self.stats
    }

    pub fn memtable(&self) -> &Memtable {
        &self.memtable
    }

    pub fn last_seq(&self) -> SeqNo {
        self.seq.last()
    }

    pub fn next_sequence(&mut self) -> SeqNo {
        self.seq.next_sequence()
    }

    /// Deepest level holding a run, 0 if none.
    pub fn depth(&self) -> usize {
        self.levels
            .iter()
            .rposition(Option::is_some)
            .map_or(0, |i| i + 1)
    }

    pub fn run(&self, level: usize) -> Option<&SortedRun> {
        self.levels.get(level.checked_sub(1)?)?.as_ref()
    }

    pub fn runs(&self) -> impl Iterator<Item = &SortedRun> {
        self.levels.iter().flatten()
    }

    /// `(level, file name)` of every run, for the manifest.
    pub fn run_files(&self) -> Vec<(usize, String)> {
        self.runs()
            .map(|r| (r.level(), r.name().to_string()))
            .collect()
    }

    fn slot(&mut self, level: usize) -> &mut Option<SortedRun> {
        if self.levels.len() < level {
            self.levels.resize_with(level, || None);
        }
        &mut self.levels[level - 1]
    }

    pub fn check_key(&self, key: Key) -> Result<()> {
        if key >= self.cfg.universe {
            return Err(Error::KeyOutOfUniverse {
                key,
                universe: self.cfg.universe,
            });
        }
        Ok(())
    }

    pub fn check_range(&self, lo: Key, hi: Key) -> Result<()> {
        if lo >= hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        if hi > self.cfg.universe {
            return Err(Error::KeyOutOfUniverse {
                key: hi - 1,
                universe: self.cfg.universe,
            });
        }
        Ok(())
    }

    fn pad_value(&self, value: &[u8]) -> Result<Vec<u8>> {
        let width = self.cfg.value_width();
        if value.len() > width {
            return Err(Error::ValueTooLong {
                len: value.len(),
                max: width,
            });
        }
        let mut v = value.to_vec();
        v.resize(width, 0);
        Ok(v)
    }

    pub fn put(&mut self, key: Key, value: &[u8]) -> Result<()> {
        self.put_with(key, value, &mut NoHook)
    }

    pub fn put_with(
        &mut self,
        key: Key,
        value: &[u8],
        hook: &mut dyn CompactionHook,
    ) -> Result<()> {
        self.check_key(key)?;
        let value = self.pad_value(value)?;
        let seq = self.seq.next_sequence();
        self.memtable.insert(Entry::value(key, seq, value));
        self.maybe_flush(hook)
    }

    pub fn delete(&mut self, key: Key) -> Result<()> {
        self.delete_with(key, &mut NoHook)
    }

    pub fn delete_with(&mut self, key: Key, hook: &mut dyn CompactionHook) -> Result<()> {
        self.check_key(key)?;
        let seq = self.seq.next_sequence();
        self.memtable.insert(Entry::tombstone(key, seq));
        self.maybe_flush(hook)
    }

    /// Range delete for the strategies implemented inside the LSM-tree.
    pub fn range_delete(&mut self, lo: Key, hi: Key) -> Result<()> {
        self.check_range(lo, hi)?;
        let limit = self.cfg.max_range_expansion;
        let expansion_ok = || {
            if hi - lo > limit {
                Err(Error::ExpansionTooLarge {
                    len: hi - lo,
                    limit,
                })
            } else {
                Ok(())
            }
        };
        match self.cfg.strategy {
            Strategy::Decomp => {
                expansion_ok()?;
                for key in lo..hi {
                    self.delete(key)?;
                }
            }
            Strategy::LookupDelete => {
                expansion_ok()?;
                for key in lo..hi {
                    if matches!(self.lookup(key)?, LookupResult::Found { .. }) {
                        self.delete(key)?;
                    }
                }
            }
            Strategy::ScanDelete => {
                for (key, _) in self.scan(lo, hi)? {
                    self.delete(key)?;
                }
            }
            Strategy::Lrr => {
                let seq = self.seq.next_sequence();
                self.memtable.add_range_tombstone(RangeTombstone {
                    start: lo,
                    end: hi,
                    seq,
                });
                self.maybe_flush(&mut NoHook)?;
            }
            Strategy::Gloran => {
                return Err(Error::InvalidInput(
                    "GLORAN range deletes go through the global index".into(),
                ))
            }
        }
        Ok(())
    }

    /// Top-down search; stops at the first decisive version.
    pub fn lookup(&mut self, key: Key) -> Result<LookupResult> {
        if let Some(r) = decide(self.memtable.get(key), self.memtable.newest_covering(key)) {
            return Ok(r);
        }
        for run in self.levels.iter().flatten() {
            let mut rt = None;
            if run.range_tombstone_count() > 0 {
                let (hit, examined) = run.probe_range_tombstones(key)?;
                self.stats.rt_probes += 1;
                self.stats.rt_records_examined += examined;
                rt = hit;
            }
            let entry = run.get(key, &mut self.stats.bloom)?;
            if let Some(r) = decide(entry.as_ref(), rt) {
                return Ok(r);
            }
        }
        Ok(LookupResult::NotFound)
    }

    pub fn get(&mut self, key: Key) -> Result<Option<Vec<u8>>> {
        Ok(self.lookup(key)?.into_value())
    }

    /// Newest version of every key in `[lo, hi)` across all levels, with
    /// every range tombstone intersecting the span.
    fn collect_range(&self, lo: Key, hi: Key) -> Result<(Vec<Entry>, Vec<RangeTombstone>)> {
        let mut newest: BTreeMap<Key, Entry> = BTreeMap::new();
        let mut rts: Vec<RangeTombstone> = self
            .memtable
            .range_tombstones()
            .iter()
            .filter(|r| r.start < hi && lo < r.end)
            .copied()
            .collect();
        for e in self.memtable.range(lo, hi) {
            newest.insert(e.key, e.clone());
        }
        for run in self.levels.iter().flatten() {
            for e in run.read_range(lo, hi)? {
                newest.entry(e.key).or_insert(e);
            }
            if run.range_tombstone_count() > 0 {
                rts.extend(
                    run.read_range_tombstones()?
                        .into_iter()
                        .filter(|r| r.start < hi && lo < r.end),
                );
            }
        }
        Ok((newest.into_values().collect(), rts))
    }

    /// Newest version per key in `[lo, hi)`, tombstones included; range
    /// tombstones are not applied.
    pub fn newest_versions(&self, lo: Key, hi: Key) -> Result<Vec<Entry>> {
        Ok(self.collect_range(lo, hi)?.0)
    }

    pub fn scan(&self, lo: Key, hi: Key) -> Result<Vec<(Key, Vec<u8>)>> {
        if lo >= hi {
            return Ok(Vec::new());
        }
        let (entries, rts) = self.collect_range(lo, hi)?;
        let mut cover = RtCover::new(rts);
        Ok(entries
            .into_iter()
            .filter(|e| !e.is_tombstone())
            .filter(|e| cover.newest(e.key).is_none_or(|s| s < e.seq))
            .map(|e| (e.key, e.value))
            .collect())
    }

    fn maybe_flush(&mut self, hook: &mut dyn CompactionHook) -> Result<()> {
        if self.memtable.len() >= self.cfg.memtable_capacity {
            self.flush_with(hook)?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.flush_with(&mut NoHook)
    }

    /// Write the memtable into level 1 and cascade compactions.
    pub fn flush_with(&mut self, hook: &mut dyn CompactionHook) -> Result<()> {
        if self.memtable.is_empty() {
            return Ok(());
        }
        let (entries, rts) = self.memtable.drain();
        self.stats.flushes += 1;
        self.merge_into(1, entries, rts, hook)?;
        self.cascade(1, hook)
    }

    fn cascade(&mut self, mut level: usize, hook: &mut dyn CompactionHook) -> Result<()> {
        while let Some(run) = self.run(level) {
            if run.size() <= self.cfg.level_capacity(level) {
                break;
            }
            self.compact_with(level, hook)?;
            level += 1;
        }
        Ok(())
    }

    /// Merge the run at `level` into `level + 1`.
    pub fn compact_with(&mut self, level: usize, hook: &mut dyn CompactionHook) -> Result<()> {
        let Some(run) = self.slot(level).take() else {
            return Ok(());
        };
        let entries = run.read_all()?;
        let rts = run.read_range_tombstones()?;
        self.device.remove(run.name())?;
        self.merge_into(level + 1, entries, rts, hook)
    }

    /// Flush, then push every level down until all data sits in one
    /// bottommost run.
    pub fn force_full_compaction_with(&mut self, hook: &mut dyn CompactionHook) -> Result<()> {
        self.flush_with(hook)?;
        let depth = self.depth();
        for level in 1..depth {
            self.compact_with(level, hook)?;
        }
        if depth == 1 {
            // A lone level still gets a bottommost rewrite.
            self.compact_in_place(1, hook)?;
        }
        Ok(())
    }

    fn compact_in_place(&mut self, level: usize, hook: &mut dyn CompactionHook) -> Result<()> {
        let Some(run) = self.slot(level).take() else {
            return Ok(());
        };
        let entries = run.read_all()?;
        let rts = run.read_range_tombstones()?;
        self.merge_into(level, entries, rts, hook)
    }

    /// Merge newer `upper` data into `level`, writing the result there.
    fn merge_into(
        &mut self,
        level: usize,
        upper: Vec<Entry>,
        upper_rts: Vec<RangeTombstone>,
        hook: &mut dyn CompactionHook,
    ) -> Result<()> {
        let (lower, lower_rts) = match self.slot(level).take() {
            Some(run) => (run.read_all()?, run.read_range_tombstones()?),
            None => (Vec::new(), Vec::new()),
        };
        let bottommost = self.depth() < level;
        self.stats.compactions += 1;

        let key_lo = upper
            .first()
            .map(|e| e.key)
            .into_iter()
            .chain(lower.first().map(|e| e.key))
            .min();
        let key_hi = upper
            .last()
            .map(|e| e.key)
            .into_iter()
            .chain(lower.last().map(|e| e.key))
            .max();
        let ctx = CompactionContext {
            level,
            bottommost,
            key_lo: key_lo.unwrap_or(0),
            key_hi: key_hi.map_or(0, |k| k + 1),
        };

        // Two-way merge; upper wins ties since it is newer.
        let mut merged = Vec::with_capacity(upper.len() + lower.len());
        let mut lower = lower.into_iter().peekable();
        for e in upper {
            while let Some(l) = lower.next_if(|l| l.key < e.key) {
                merged.push(l);
            }
            lower.next_if(|l| l.key == e.key);
            merged.push(e);
        }
        merged.extend(lower);

        let mut rts = upper_rts;
        rts.extend(lower_rts);
        rts.sort_by_key(|r| (r.start, r.seq));
        if !rts.is_empty() {
            let mut cover = RtCover::new(rts.clone());
            merged.retain(|e| cover.newest(e.key).is_none_or(|s| s < e.seq));
        }
        if bottommost {
            merged.retain(|e| !e.is_tombstone());
            rts.clear();
        }
        let merged = hook.filter(merged, &ctx)?;

        let name = run_file_name(level);
        if merged.is_empty() && rts.is_empty() {
            self.device.remove(&name)?;
        } else {
            let run = SortedRun::build(&self.device, &name, level, &merged, &rts, &self.cfg)?;
            *self.slot(level) = Some(run);
        }
        if bottommost {
            self.stats.bottom_compactions += 1;
            let w = self.gc_watermark();
            // The whole bottom level was rewritten, so every key is in span.
            let span = CompactionContext {
                key_lo: 0,
                key_hi: self.cfg.universe,
                ..ctx
            };
            hook.on_bottom_compaction(w, &span)?;
        }
        Ok(())
    }

    /// Smallest seq still present anywhere, if any data exists.
    pub fn min_live_seq(&self) -> Option<SeqNo> {
        self.memtable
            .min_seq()
            .into_iter()
            .chain(self.runs().map(SortedRun::min_seq))
            .filter(|s| *s != SeqNo::MAX)
            .min()
    }

    /// Every seq at or below the watermark lives only in the bottommost level.
    pub fn gc_watermark(&self) -> SeqNo {
        let depth = self.depth();
        let upper_min = self
            .memtable
            .min_seq()
            .into_iter()
            .chain(
                self.levels
                    .iter()
                    .take(depth.saturating_sub(1))
                    .flatten()
                    .map(SortedRun::min_seq),
            )
            .filter(|s| *s != SeqNo::MAX)
            .min();
        match upper_min {
            Some(m) => m - 1,
            None => self.seq.last(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{OracleValue, ShadowOracle};
    use crate::trace::Operation;
    use rand::{Rng, SeedableRng};

    fn small(strategy: Strategy) -> StoreConfig {
        StoreConfig {
            memtable_capacity: 16,
            size_ratio: 3,
            block_size: 256,
            key_width: 8,
            entry_width: 32,
            universe: 1 << 12,
            drtree_fanout: 4,
            strategy,
            ..StoreConfig::default()
        }
    }

    fn store(strategy: Strategy) -> (tempfile::TempDir, LsmStore) {
        let dir = tempfile::tempdir().unwrap();
        let c = small(strategy);
        let dev = BlockDevice::new(dir.path(), c.block_size).unwrap();
        let s = LsmStore::new(dev, c).unwrap();
        (dir, s)
    }

    fn padded(s: &LsmStore, v: &[u8]) -> Vec<u8> {
        let mut v = v.to_vec();
        v.resize(s.config().value_width(), 0);
        v
    }

    #[test]
    fn put_lands_in_memtable() {
        let (_d, mut s) = store(Strategy::Decomp);
        s.put(5, b"x").unwrap();
        assert_eq!(s.memtable().get(5).unwrap().seq, 1);
        let before = s.device().stats();
        assert_eq!(s.get(5).unwrap(), Some(padded(&s, b"x")));
        assert_eq!(s.device().stats(), before);
    }

    #[test]
    fn full_memtable_flushes_sorted() {
        let (_d, mut s) = store(Strategy::Decomp);
        for k in (0..16u64).rev() {
            s.put(k, b"v").unwrap();
        }
        assert!(s.memtable().is_empty());
        let run = s.run(1).unwrap();
        assert_eq!(run.entry_count(), 16);
        let keys: Vec<_> = run.read_all().unwrap().iter().map(|e| e.key).collect();
        assert_eq!(keys, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn empty_store_lookup_reads_nothing() {
        let (_d, mut s) = store(Strategy::Decomp);
        assert_eq!(s.lookup(5).unwrap(), LookupResult::NotFound);
        assert_eq!(s.device().stats().data_block_reads, 0);
        assert!(s.scan(0, 100).unwrap().is_empty());
    }

    #[test]
    fn delete_variants() {
        let (_d, mut s) = store(Strategy::Decomp);
        s.put(5, b"a").unwrap();
        s.delete(5).unwrap();
        assert_eq!(s.lookup(5).unwrap(), LookupResult::DeletedByTombstone);
        s.delete(6).unwrap();
        assert_eq!(s.get(6).unwrap(), None);
    }

    #[test]
    fn tombstone_expires_at_bottom() {
        let (_d, mut s) = store(Strategy::Decomp);
        s.put(7, b"a").unwrap();
        s.flush().unwrap();
        s.delete(7).unwrap();
        s.force_full_compaction_with(&mut NoHook).unwrap();
        let bottom = s.run(s.depth());
        assert!(bottom.is_none_or(|r| r.read_all().unwrap().iter().all(|e| e.key != 7)));
    }

    #[test]
    fn newer_version_wins_in_compaction() {
        let (_d, mut s) = store(Strategy::Decomp);
        s.put(1, b"old").unwrap();
        s.flush().unwrap();
        s.put(1, b"new").unwrap();
        s.flush().unwrap();
        let all = s.run(1).unwrap().read_all().unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].value, padded(&s, b"new"));
    }

    #[test]
    fn decomp_consumes_one_seq_per_key() {
        let (_d, mut s) = store(Strategy::Decomp);
        s.range_delete(10, 13).unwrap();
        assert_eq!(s.last_seq(), 3);
        assert!(s.memtable().get(12).unwrap().is_tombstone());
        assert!(matches!(
            s.range_delete(0, 1 << 12),
            Ok(()) | Err(Error::ExpansionTooLarge { .. })
        ));
    }

    #[test]
    fn scan_delete_only_tombstones_live_keys() {
        let (_d, mut s) = store(Strategy::ScanDelete);
        s.put(11, b"x").unwrap();
        s.range_delete(10, 13).unwrap();
        assert_eq!(s.last_seq(), 2);
        assert_eq!(s.memtable().entry_count(), 1);
    }

    #[test]
    fn lookup_delete_probes_each_key() {
        let (_d, mut s) = store(Strategy::LookupDelete);
        s.put(11, b"x").unwrap();
        s.range_delete(10, 13).unwrap();
        assert_eq!(s.last_seq(), 2);
        assert_eq!(s.get(11).unwrap(), None);
    }

    #[test]
    fn lrr_appends_one_record() {
        let (_d, mut s) = store(Strategy::Lrr);
        s.put(11, b"x").unwrap();
        s.range_delete(10, 13).unwrap();
        assert_eq!(s.memtable().range_tombstones().len(), 1);
        assert_eq!(s.lookup(11).unwrap(), LookupResult::DeletedByRange);
        s.put(11, b"y").unwrap();
        assert_eq!(s.get(11).unwrap(), Some(padded(&s, b"y")));
    }

    #[test]
    fn lrr_scan_skips_shadowed_keys() {
        let (_d, mut s) = store(Strategy::Lrr);
        for k in [1u64, 5, 9] {
            s.put(k, b"v").unwrap();
        }
        s.flush().unwrap();
        s.range_delete(4, 6).unwrap();
        let keys: Vec<_> = s.scan(0, 10).unwrap().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, vec![1, 9]);
        let keys: Vec<_> = s.scan(2, 9).unwrap().into_iter().map(|(k, _)| k).collect();
        assert!(keys.is_empty());
    }

    #[test]
    fn lrr_purges_covered_entry_in_compaction() {
        let (_d, mut s) = store(Strategy::Lrr);
        s.put(8, b"a").unwrap();
        s.flush().unwrap();
        s.put(100, b"b").unwrap();
        s.flush().unwrap();
        s.range_delete(5, 15).unwrap();
        s.flush().unwrap();
        let run = s.run(1).unwrap();
        assert!(run.read_all().unwrap().iter().all(|e| e.key != 8));
        // Level 1 is also the bottom here, so the record itself expires.
        assert_eq!(run.range_tombstone_count(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        let (_d, mut s) = store(Strategy::Lrr);
        assert!(matches!(
            s.range_delete(5, 5),
            Err(Error::InvalidRange { .. })
        ));
        assert!(s.put(1 << 12, b"x").is_err());
        assert!(s.put(1, &[0u8; 100]).is_err());
    }

    #[test]
    fn level_capacity_holds_after_writes() {
        let (_d, mut s) = store(Strategy::Decomp);
        for k in 0..2000u64 {
            s.put((k * 37) % 4096, b"v").unwrap();
            for lvl in 1..=s.depth() {
                if let Some(r) = s.run(lvl) {
                    assert!(r.size() <= s.config().level_capacity(lvl));
                }
            }
        }
    }

    fn random_ops(seed: u64, n: usize) -> Vec<Operation> {
        let mut rng = rand_chacha_like(seed);
        (0..n)
            .map(|_| {
                let key = rng.random_range(0..512u64);
                match rng.random_range(0..10) {
                    0..=4 => Operation::Put {
                        key,
                        value: vec![rng.random::<u8>(), 1],
                    },
                    5 => Operation::Delete { key },
                    6 => Operation::RangeDelete {
                        lo: key,
                        hi: key + rng.random_range(1..40),
                    },
                    7 => Operation::Scan {
                        lo: key,
                        hi: key + 50,
                    },
                    _ => Operation::Get { key },
                }
            })
            .collect()
    }

    fn rand_chacha_like(seed: u64) -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(seed)
    }

    #[test]
    fn baselines_match_oracle() {
        for strategy in [
            Strategy::Decomp,
            Strategy::ScanDelete,
            Strategy::LookupDelete,
            Strategy::Lrr,
        ] {
            for seed in 0..3 {
                let (_d, mut s) = store(strategy);
                let mut oracle = ShadowOracle::new();
                for op in random_ops(seed, 3000) {
                    match &op {
                        Operation::Put { key, value } => s.put(*key, value).unwrap(),
                        Operation::Delete { key } => s.delete(*key).unwrap(),
                        Operation::RangeDelete { lo, hi } => s.range_delete(*lo, *hi).unwrap(),
                        Operation::Get { key } => {
                            let want = match oracle.get(*key) {
                                OracleValue::Value(v) => Some(padded(&s, &v)),
                                OracleValue::NotFound => None,
                            };
                            assert_eq!(s.get(*key).unwrap(), want, "{strategy} get {key}");
                        }
                        Operation::Scan { lo, hi } => {
                            let want: Vec<_> = oracle
                                .scan(*lo, *hi)
                                .into_iter()
                                .map(|(k, v)| (k, padded(&s, &v)))
                                .collect();
                            assert_eq!(s.scan(*lo, *hi).unwrap(), want, "{strategy} scan");
                        }
                    }
                    oracle.apply(&op);
                }
            }
        }
    }

    #[test]
    fn reopen_preserves_runs() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(Strategy::Lrr);
        let dev = BlockDevice::new(dir.path(), c.block_size).unwrap();
        let mut s = LsmStore::new(dev.clone(), c.clone()).unwrap();
        for k in 0..100u64 {
            s.put(k, b"v").unwrap();
        }
        s.range_delete(10, 20).unwrap();
        s.flush().unwrap();
        let files = s.run_files();
        let last = s.last_seq();
        let mut t = LsmStore::open(dev, c, last, &files).unwrap();
        assert_eq!(t.get(15).unwrap(), None);
        assert!(t.get(25).unwrap().is_some());
        assert_eq!(t.min_live_seq(), s.min_live_seq());
        t.put(200, b"z").unwrap();
        assert_eq!(t.last_seq(), last + 1);
    }
}
