//! Store front end: the four in-tree baselines and the global-index store,
//! plus on-disk layout and reopen.
//!
//! Directory layout: `config.txt`, `MANIFEST`, `sst_<level>.run`, and for the
//! global index `INDEX_MANIFEST` with `idx_<level>.drt`.

use std::path::Path;

use crate::config::{parse_kv, StoreConfig, Strategy};
use crate::device::{BlockDevice, IoSnapshot};
use crate::effective_area::EffectiveArea;
use crate::error::{corrupt, Error, Result};
use crate::eve::{Eve, Validity};
use crate::lsm::{CompactionContext, CompactionHook, LookupResult, LsmStore, NoHook};
use crate::lsm_drtree::LsmDrtreeIndex;
use crate::trace::Operation;
use crate::types::{Entry, Key, SeqNo};

pub const MANIFEST: &str = "MANIFEST";
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GloranStats {
    pub lookups: u64,
    /// Lookups answered valid by the estimator without touching the index.
    pub short_circuits: u64,
    pub index_checks: u64,
    pub index_node_accesses: u64,
    pub purged_entries: u64,
    pub gc_purged_leaves: u64,
    pub eve_epochs_dropped: u64,
}

/// Compaction hook that drops entries covered by the global index and runs
/// garbage collection after bottommost compactions.
struct Purger<'a> {
    index: &'a mut LsmDrtreeIndex,
    eve: &'a mut Eve,
    stats: &'a mut GloranStats,
}

impl CompactionHook for Purger<'_> {
    fn filter(&mut self, entries: Vec<Entry>, ctx: &CompactionContext) -> Result<Vec<Entry>> {
        if entries.is_empty() || self.index.is_empty() {
            return Ok(entries);
        }
        let mut cursor = self.index.coverage_cursor(ctx.key_lo, ctx.key_hi)?;
        let mut out = Vec::with_capacity(entries.len());
        for e in entries {
            if !e.is_tombstone() && cursor.is_deleted(e.key, e.seq)? {
                self.stats.purged_entries += 1;
            } else {
                out.push(e);
            }
        }
        Ok(out)
    }

    fn on_bottom_compaction(&mut self, watermark: SeqNo, ctx: &CompactionContext) -> Result<()> {
        self.stats.gc_purged_leaves += self.index.gc(watermark, ctx.key_lo, ctx.key_hi)?;
        self.stats.eve_epochs_dropped += self.eve.drop_outdated(watermark) as u64;
        Ok(())
    }
}

pub struct GloranStore {
    lsm: LsmStore,
    index: LsmDrtreeIndex,
    eve: Eve,
    stats: GloranStats,
}

macro_rules! purger {
    ($s:expr) => {
        &mut Purger {
            index: &mut $s.index,
            eve: &mut $s.eve,
            stats: &mut $s.stats,
        }
    };
}

impl GloranStore {
    pub fn new(device: BlockDevice, cfg: StoreConfig) -> Result<Self> {
        let index = LsmDrtreeIndex::new(device.clone(), &cfg);
        let eve = new_eve(&cfg);
        Ok(GloranStore {
            lsm: LsmStore::new(device, cfg)?,
            index,
            eve,
            stats: GloranStats::default(),
        })
    }

    fn reopen(lsm: LsmStore) -> Result<Self> {
        let index = LsmDrtreeIndex::open(lsm.device().clone(), lsm.config())?;
        let mut eve = new_eve(lsm.config());
        let mut areas = index.all_areas()?;
        areas.sort_by_key(|a| a.seq_hi);
        for a in areas {
            eve.insert(a.key_lo, a.key_hi, a.seq_hi);
        }
        Ok(GloranStore {
            lsm,
            index,
            eve,
            stats: GloranStats::default(),
        })
    }

    pub fn lsm(&self) -> &LsmStore {
        &self.lsm
    }

    pub fn index(&self) -> &LsmDrtreeIndex {
        &self.index
    }

    pub fn eve(&self) -> &Eve {
        &self.eve
    }

    pub fn stats(&self) -> GloranStats {
        self.stats
    }

    pub fn put(&mut self, key: Key, value: &[u8]) -> Result<()> {
        self.lsm.put_with(key, value, purger!(self))
    }

    pub fn delete(&mut self, key: Key) -> Result<()> {
        self.lsm.delete_with(key, purger!(self))
    }

    /// One record in the index and one estimator insertion; the LSM-tree is
    /// not written.
    pub fn range_delete(&mut self, lo: Key, hi: Key) -> Result<()> {
        self.lsm.check_range(lo, hi)?;
        let seq_lo = self.lsm.min_live_seq();
        let seq = self.lsm.next_sequence();
        // Any entry a record can invalidate already exists, so its lower
        // bound may start at the oldest surviving sequence number.
        let seq_lo = seq_lo.map_or(seq - 1, |m| m.min(seq - 1));
        self.index
            .insert_record(EffectiveArea::new(lo, hi, seq_lo, seq))?;
        self.eve.insert(lo, hi, seq);
        Ok(())
    }

    pub fn lookup(&mut self, key: Key) -> Result<LookupResult> {
        self.stats.lookups += 1;
        let found = self.lsm.lookup(key)?;
        let LookupResult::Found { seq, .. } = &found else {
            return Ok(found);
        };
        let seq = *seq;
        if self.eve.query(key, seq) == Validity::DefinitelyValid {
            self.stats.short_circuits += 1;
            return Ok(found);
        }
        let (deleted, accesses) = self.index.check_deleted(key, seq)?;
        self.stats.index_checks += 1;
        self.stats.index_node_accesses += accesses;
        Ok(if deleted {
            LookupResult::DeletedByRange
        } else {
            found
        })
    }

    pub fn scan(&self, lo: Key, hi: Key) -> Result<Vec<(Key, Vec<u8>)>> {
        if lo >= hi {
            return Ok(Vec::new());
        }
        let versions = self.lsm.newest_versions(lo, hi)?;
        let mut cursor = self.index.coverage_cursor(lo, hi)?;
        let mut out = Vec::new();
        for e in versions {
            if !e.is_tombstone() && !cursor.is_deleted(e.key, e.seq)? {
                out.push((e.key, e.value));
            }
        }
        Ok(out)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.lsm.flush_with(purger!(self))?;
        self.index.flush_buffer()
    }

    pub fn force_full_compaction(&mut self) -> Result<()> {
        self.lsm.force_full_compaction_with(purger!(self))
    }
}

fn new_eve(cfg: &StoreConfig) -> Eve {
    Eve::new(
        cfg.eve_first_capacity,
        cfg.eve_bits_per_record,
        cfg.segment_width(),
    )
}

/// A store of any strategy.
#[allow(clippy::large_enum_variant)]
pub enum Store {
    Lsm(LsmStore),
    Gloran(GloranStore),
}

/// Result of a read operation replayed through [`Store::apply`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReadOutcome {
    Get(Option<Vec<u8>>),
    Scan(Vec<(Key, Vec<u8>)>),
}

impl Store {
    /// Create a fresh store in `dir`, which must not already hold one.
    pub fn create(dir: impl AsRef<Path>, cfg: StoreConfig) -> Result<Self> {
        cfg.validate()?;
        let device = BlockDevice::new(dir.as_ref(), cfg.block_size)?;
        if device.exists(MANIFEST) {
            return Err(Error::InvalidInput(format!(
                "{} already contains a store",
                dir.as_ref().display()
            )));
        }
        device.write_text(CONFIG_FILE, &cfg.to_text())?;
        let store = match cfg.strategy {
            Strategy::Gloran => Store::Gloran(GloranStore::new(device, cfg)?),
            _ => Store::Lsm(LsmStore::new(device, cfg)?),
        };
        store.write_manifest()?;
        Ok(store)
    }

    /// Reopen a store previously closed with [`Store::close`].
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(dir.as_ref().join(CONFIG_FILE))?;
        let cfg = StoreConfig::parse(&text)?;
        let device = BlockDevice::new(dir.as_ref(), cfg.block_size)?;
        let manifest = device.read_text(MANIFEST)?;
        let mut next_seq = None;
        let mut runs = Vec::new();
        for (line, key, value) in parse_kv(&manifest)? {
            let bad = || corrupt(MANIFEST, format!("line {line}"));
            if key == "next_seq" {
                next_seq = Some(value.parse::<SeqNo>().map_err(|_| bad())?);
            } else if key == "watermark" {
                // Informational; the index manifest holds the live value.
            } else if let Some(level) = key.strip_prefix("run ") {
                runs.push((level.trim().parse::<usize>().map_err(|_| bad())?, value));
            } else {
                return Err(bad());
            }
        }
        let next_seq = next_seq.ok_or_else(|| corrupt(MANIFEST, "missing next_seq"))?;
        let lsm = LsmStore::open(device, cfg.clone(), next_seq.saturating_sub(1), &runs)?;
        Ok(match cfg.strategy {
            Strategy::Gloran => Store::Gloran(GloranStore::reopen(lsm)?),
            _ => Store::Lsm(lsm),
        })
    }

    fn write_manifest(&self) -> Result<()> {
        let lsm = self.lsm();
        let mut text = format!(
            "next_seq = {}\nwatermark = {}\n",
            lsm.last_seq() + 1,
            self.gloran().map_or(0, |g| g.index.watermark())
        );
        for (level, name) in lsm.run_files() {
            text += &format!("run {level} = {name}\n");
        }
        lsm.device().write_text(MANIFEST, &text)?;
        if let Some(g) = self.gloran() {
            g.index.write_manifest()?;
        }
        Ok(())
    }

    /// Flush all buffers and persist the manifests.
    pub fn close(mut self) -> Result<()> {
        self.flush()?;
        self.write_manifest()
    }

    pub fn flush(&mut self) -> Result<()> {
        match self {
            Store::Lsm(s) => s.flush(),
            Store::Gloran(g) => g.flush(),
        }
    }

    pub fn lsm(&self) -> &LsmStore {
        match self {
            Store::Lsm(s) => s,
            Store::Gloran(g) => &g.lsm,
        }
    }

    pub fn gloran(&self) -> Option<&GloranStore> {
        match self {
            Store::Gloran(g) => Some(g),
            Store::Lsm(_) => None,
        }
    }

    pub fn config(&self) -> &StoreConfig {
        self.lsm().config()
    }

    pub fn strategy(&self) -> Strategy {
        self.config().strategy
    }

    pub fn device(&self) -> &BlockDevice {
        self.lsm().device()
    }

    pub fn io(&self) -> IoSnapshot {
        self.device().stats()
    }

    pub fn put(&mut self, key: Key, value: &[u8]) -> Result<()> {
        match self {
            Store::Lsm(s) => s.put(key, value),
            Store::Gloran(g) => g.put(key, value),
        }
    }

    pub fn delete(&mut self, key: Key) -> Result<()> {
        match self {
            Store::Lsm(s) => s.delete(key),
            Store::Gloran(g) => g.delete(key),
        }
    }

    pub fn range_delete(&mut self, lo: Key, hi: Key) -> Result<()> {
        match self {
            Store::Lsm(s) => s.range_delete(lo, hi),
            Store::Gloran(g) => g.range_delete(lo, hi),
        }
    }

    pub fn lookup(&mut self, key: Key) -> Result<LookupResult> {
        match self {
            Store::Lsm(s) => s.lookup(key),
            Store::Gloran(g) => g.lookup(key),
        }
    }

    pub fn get(&mut self, key: Key) -> Result<Option<Vec<u8>>> {
        Ok(self.lookup(key)?.into_value())
    }

    pub fn scan(&self, lo: Key, hi: Key) -> Result<Vec<(Key, Vec<u8>)>> {
        match self {
            Store::Lsm(s) => s.scan(lo, hi),
            Store::Gloran(g) => g.scan(lo, hi),
        }
    }

    /// Push all data into one bottommost run, running GC where applicable.
    pub fn force_full_compaction(&mut self) -> Result<()> {
        match self {
            Store::Lsm(s) => s.force_full_compaction_with(&mut NoHook),
            Store::Gloran(g) => g.force_full_compaction(),
        }
    }

    /// Replay one trace operation; reads return their outcome.
    pub fn apply(&mut self, op: &Operation) -> Result<Option<ReadOutcome>> {
        Ok(match op {
            Operation::Put { key, value } => {
                self.put(*key, value)?;
                None
            }
            Operation::Delete { key } => {
                self.delete(*key)?;
                None
            }
            Operation::RangeDelete { lo, hi } => {
                self.range_delete(*lo, *hi)?;
                None
            }
            Operation::Get { key } => Some(ReadOutcome::Get(self.get(*key)?)),
            Operation::Scan { lo, hi } => Some(ReadOutcome::Scan(self.scan(*lo, *hi)?)),
        })
    }
}
