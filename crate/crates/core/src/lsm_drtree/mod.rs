//! Global range-record index: an R-tree write buffer over leveled,
//! immutable DR-trees merged by streaming two-way compaction.

pub mod rtree;

use crate::config::StoreConfig;
use crate::device::BlockDevice;
use crate::dr_tree::{DrTree, LeafCursor, TreeShape};
use crate::effective_area::{sweep_disjointize, EffectiveArea};
use crate::error::{corrupt, Result};
use crate::types::{Key, SeqNo};

use self::rtree::RTree;

pub const INDEX_MANIFEST: &str = "INDEX_MANIFEST";

pub fn index_file_name(level: usize) -> String {
    format!("idx_{level}.drt")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IndexStats {
    pub records_inserted: u64,
    pub buffer_flushes: u64,
    pub compactions: u64,
    pub trees_built: u64,
    /// Built trees whose node count exceeded D/(D-1) times their leaves.
    pub node_bound_violations: u64,
    pub point_queries: u64,
    /// Point queries that touched more nodes than the tree height.
    pub height_violations: u64,
    pub checks: u64,
    pub check_hits: u64,
    pub check_node_accesses: u64,
    pub max_check_node_accesses: u64,
    /// Checks that exceeded the summed per-level height bound.
    pub check_bound_violations: u64,
    pub gc_runs: u64,
    pub gc_purged_leaves: u64,
}

/// Answers "is (key, seq) covered" for ascending keys, streaming each
/// level's leaves once.
pub struct CoverageCursor<'a> {
    levels: Vec<(LeafCursor<'a>, Option<EffectiveArea>)>,
    buffer: &'a RTree,
}

impl CoverageCursor<'_> {
    pub fn is_deleted(&mut self, key: Key, seq: SeqNo) -> Result<bool> {
        if self.buffer.covers(key, seq) {
            return Ok(true);
        }
        let mut hit = false;
        for (cursor, head) in &mut self.levels {
            while head.is_some_and(|a| a.key_hi <= key) {
                *head = cursor.next_area()?;
            }
            if head.is_some_and(|a| a.covers(key, seq)) {
                hit = true;
            }
        }
        Ok(hit)
    }
}

pub struct LsmDrtreeIndex {
    device: BlockDevice,
    shape: TreeShape,
    buffer: RTree,
    buffer_capacity: usize,
    size_ratio: usize,
    /// `levels[i]` is level `i + 1`.
    levels: Vec<Option<DrTree>>,
    watermark: SeqNo,
    stats: IndexStats,
}

impl LsmDrtreeIndex {
    pub fn new(device: BlockDevice, cfg: &StoreConfig) -> Self {
        LsmDrtreeIndex {
            device,
            shape: TreeShape {
                fanout: cfg.drtree_fanout,
                key_width: cfg.key_width,
                block_size: cfg.block_size,
            },
            buffer: RTree::new(cfg.rtree_node_capacity),
            buffer_capacity: cfg.index_buffer_capacity,
            size_ratio: cfg.index_size_ratio,
            levels: Vec::new(),
            watermark: 0,
            stats: IndexStats::default(),
        }
    }

    /// Reload the trees listed in the index manifest, if one exists.
    pub fn open(device: BlockDevice, cfg: &StoreConfig) -> Result<Self> {
        let mut idx = Self::new(device, cfg);
        if !idx.device.exists(INDEX_MANIFEST) {
            return Ok(idx);
        }
        let text = idx.device.read_text(INDEX_MANIFEST)?;
        for (line, key, value) in crate::config::parse_kv(&text)? {
            let bad = || corrupt(INDEX_MANIFEST, format!("line {line}"));
            if key == "watermark" {
                idx.watermark = value.parse().map_err(|_| bad())?;
            } else if let Some(lvl) = key.strip_prefix("level ") {
                let level: usize = lvl.trim().parse().map_err(|_| bad())?;
                let mut parts = value.split_ascii_whitespace();
                let name = parts.next().ok_or_else(bad)?;
                let leaves: u64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let tree = DrTree::open(&idx.device, name, idx.shape)?;
                if tree.leaf_count() != leaves {
                    return Err(corrupt(name, "leaf count disagrees with manifest"));
                }
                *idx.slot(level) = Some(tree);
            } else {
                return Err(bad());
            }
        }
        Ok(idx)
    }

    pub fn manifest_text(&self) -> String {
        let mut s = format!("watermark = {}\n", self.watermark);
        for (i, t) in self.levels.iter().enumerate() {
            if let Some(t) = t {
                s += &format!(
                    "level {} = {} {}\n",
                    i + 1,
                    t.file_name().unwrap_or(""),
                    t.leaf_count()
                );
            }
        }
        s
    }

    pub fn write_manifest(&self) -> Result<()> {
        self.device
            .write_text(INDEX_MANIFEST, &self.manifest_text())
    }

    pub fn stats(&self) -> IndexStats {
        self.stats
    }

    pub fn watermark(&self) -> SeqNo {
        self.watermark
    }

    pub fn buffer(&self) -> &RTree {
        &self.buffer
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn level(&self, level: usize) -> Option<&DrTree> {
        self.levels.get(level.checked_sub(1)?)?.as_ref()
    }

    pub fn depth(&self) -> usize {
        self.levels
            .iter()
            .rposition(Option::is_some)
            .map_or(0, |i| i + 1)
    }

    pub fn trees(&self) -> impl Iterator<Item = &DrTree> {
        self.levels.iter().flatten()
    }

    pub fn leaf_count(&self) -> u64 {
        self.trees().map(DrTree::leaf_count).sum()
    }

    pub fn node_count(&self) -> u64 {
        self.trees().map(DrTree::node_count).sum()
    }

    /// Records in the buffer plus leaves on disk.
    pub fn len(&self) -> u64 {
        self.buffer.len() as u64 + self.leaf_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Capacity of level `level` in leaf areas.
    pub fn level_capacity(&self, level: usize) -> u64 {
        let mut c = self.buffer_capacity as u64;
        for _ in 0..level {
            c = c.saturating_mul(self.size_ratio as u64);
        }
        c
    }

    /// Upper bound on nodes touched by [`Self::check_deleted`]: one root to
    /// leaf path per level, each no taller than its capacity allows.
    pub fn check_bound(&self) -> u64 {
        let d = self.shape.fanout as u64;
        (1..=self.levels.len())
            .map(|i| {
                let q = 2 * self.level_capacity(i);
                let mut h = 1u64;
                let mut reach = d;
                while reach < q {
                    reach = reach.saturating_mul(d);
                    h += 1;
                }
                h
            })
            .sum()
    }

    fn slot(&mut self, level: usize) -> &mut Option<DrTree> {
        if self.levels.len() < level {
            self.levels.resize_with(level, || None);
        }
        &mut self.levels[level - 1]
    }

    pub fn insert_record(&mut self, area: EffectiveArea) -> Result<()> {
        debug_assert!(area.is_valid());
        self.buffer.insert(area);
        self.stats.records_inserted += 1;
        if self.buffer.len() >= self.buffer_capacity {
            self.flush_buffer()?;
        }
        Ok(())
    }

    /// Disjointize the buffer, merge it into level 1 and cascade.
    pub fn flush_buffer(&mut self) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        let fresh = sweep_disjointize(&self.buffer.drain());
        self.stats.buffer_flushes += 1;
        let merged = match self.level(1) {
            Some(old) => {
                let mut cursor = old.iterate(0, Key::MAX)?;
                merge_streams(fresh.into_iter().map(Ok), &mut cursor)?
            }
            None => fresh,
        };
        self.install(1, &merged)?;
        let mut level = 1;
        while self
            .level(level)
            .is_some_and(|t| t.leaf_count() > self.level_capacity(level))
        {
            self.compact_index(level)?;
            level += 1;
        }
        Ok(())
    }

    /// Merge level `level` into `level + 1` and empty `level`.
    pub fn compact_index(&mut self, level: usize) -> Result<()> {
        let Some(upper) = self.slot(level).take() else {
            return Ok(());
        };
        self.stats.compactions += 1;
        let merged = match self.level(level + 1) {
            Some(lower) => {
                let mut up = upper.iterate(0, Key::MAX)?;
                let mut low = lower.iterate(0, Key::MAX)?;
                merge_streams(&mut up, &mut low)?
            }
            None => upper.all_leaves()?,
        };
        self.install(level + 1, &merged)?;
        upper.destroy(&self.device)?;
        Ok(())
    }

    fn install(&mut self, level: usize, areas: &[EffectiveArea]) -> Result<()> {
        let name = index_file_name(level);
        let tree = DrTree::build(&self.device, &name, areas, self.shape)?;
        if tree.is_empty() {
            *self.slot(level) = None;
            return Ok(());
        }
        self.stats.trees_built += 1;
        let d = self.shape.fanout as f64;
        if tree.node_count() as f64 > d / (d - 1.0) * tree.leaf_count() as f64 {
            self.stats.node_bound_violations += 1;
        }
        *self.slot(level) = Some(tree);
        Ok(())
    }

    /// Buffer first (free), then each level newest to oldest; stops at the
    /// first covering area. Returns the verdict and DR-tree nodes touched.
    pub fn check_deleted(&mut self, key: Key, seq: SeqNo) -> Result<(bool, u64)> {
        self.stats.checks += 1;
        if self.buffer.covers(key, seq) {
            self.stats.check_hits += 1;
            return Ok((true, 0));
        }
        let mut accesses = 0u64;
        let mut hit = false;
        for tree in self.levels.iter().flatten() {
            let q = tree.query_point(key, seq)?;
            self.stats.point_queries += 1;
            if q.node_accesses > tree.height() {
                self.stats.height_violations += 1;
            }
            accesses += q.node_accesses as u64;
            if q.covering.is_some() {
                hit = true;
                break;
            }
        }
        if hit {
            self.stats.check_hits += 1;
        }
        self.stats.check_node_accesses += accesses;
        self.stats.max_check_node_accesses = self.stats.max_check_node_accesses.max(accesses);
        if accesses > self.check_bound() {
            self.stats.check_bound_violations += 1;
        }
        Ok((hit, accesses))
    }

    /// Streaming coverage test over `[lo, hi)` for keys visited in order.
    pub fn coverage_cursor(&self, lo: Key, hi: Key) -> Result<CoverageCursor<'_>> {
        let mut levels = Vec::new();
        for tree in self.levels.iter().flatten() {
            let mut cursor = tree.iterate(lo, hi.max(lo + 1))?;
            let head = cursor.next_area()?;
            levels.push((cursor, head));
        }
        Ok(CoverageCursor {
            levels,
            buffer: &self.buffer,
        })
    }

    /// Raise the watermark and drop bottom-level areas at or below it that
    /// lie entirely inside `[key_lo, key_hi)`. Returns the number dropped.
    pub fn gc(&mut self, watermark: SeqNo, key_lo: Key, key_hi: Key) -> Result<u64> {
        self.watermark = self.watermark.max(watermark);
        let w = self.watermark;
        let depth = self.depth();
        if depth == 0 || w == 0 || key_lo >= key_hi {
            return Ok(0);
        }
        let tree = self.level(depth).unwrap();
        if tree.min_seq_hi() > w {
            return Ok(0);
        }
        let leaves = tree.all_leaves()?;
        let before = leaves.len();
        let kept: Vec<_> = leaves
            .into_iter()
            .filter(|a| !(a.seq_hi <= w && key_lo <= a.key_lo && a.key_hi <= key_hi))
            .collect();
        let dropped = (before - kept.len()) as u64;
        self.stats.gc_runs += 1;
        if dropped > 0 {
            self.stats.gc_purged_leaves += dropped;
            self.install(depth, &kept)?;
        }
        Ok(dropped)
    }

    /// Every area on disk and in the buffer.
    pub fn all_areas(&self) -> Result<Vec<EffectiveArea>> {
        let mut out = self.buffer.areas();
        for t in self.trees() {
            out.extend(t.all_leaves()?);
        }
        Ok(out)
    }
}

/// Two-way merge of key-sorted, key-disjoint streams into one such stream;
/// wherever they overlap the area with the larger `seq_hi` wins.
pub fn merge_streams(
    mut a: impl Iterator<Item = Result<EffectiveArea>>,
    mut b: impl Iterator<Item = Result<EffectiveArea>>,
) -> Result<Vec<EffectiveArea>> {
    let mut out = Vec::new();
    let mut ha = a.next().transpose()?;
    let mut hb = b.next().transpose()?;
    loop {
        let (x, y) = match (ha, hb) {
            (None, None) => break,
            (Some(x), None) => {
                out.push(x);
                ha = a.next().transpose()?;
                continue;
            }
            (None, Some(y)) => {
                out.push(y);
                hb = b.next().transpose()?;
                continue;
            }
            (Some(x), Some(y)) => (x, y),
        };
        if !x.keys_overlap(&y) {
            if x.key_lo < y.key_lo {
                out.push(x);
                ha = a.next().transpose()?;
            } else {
                out.push(y);
                hb = b.next().transpose()?;
            }
            continue;
        }
        debug_assert_ne!(x.seq_hi, y.seq_hi);
        let a_is_old = x.seq_hi < y.seq_hi;
        let (mut old, new) = if a_is_old { (x, y) } else { (y, x) };
        if old.key_lo < new.key_lo {
            out.push(old.with_keys(old.key_lo, new.key_lo));
            old = old.with_keys(new.key_lo, old.key_hi);
        }
        if old.key_hi <= new.key_hi {
            // Fully dominated; the newer area stays as its stream's head.
            let next_old = if a_is_old { a.next() } else { b.next() }.transpose()?;
            if a_is_old {
                ha = next_old;
            } else {
                hb = next_old;
            }
        } else {
            out.push(new);
            let rest = Some(old.with_keys(new.key_hi, old.key_hi));
            if a_is_old {
                ha = rest;
                hb = b.next().transpose()?;
            } else {
                hb = rest;
                ha = a.next().transpose()?;
            }
        }
    }
    Ok(out)
}
