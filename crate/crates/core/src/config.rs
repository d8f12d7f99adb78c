//! Store configuration and the flat `key = value` file format.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Range-delete strategy a store is created with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// One point tombstone per key of the range.
    Decomp,
    /// Scan the range and tombstone each live key.
    ScanDelete,
    /// Point-lookup every key of the range and tombstone the ones found.
    LookupDelete,
    /// Local range tombstone blocks per level.
    Lrr,
    /// Global range-record index plus validity estimator.
    Gloran,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Decomp,
        Strategy::ScanDelete,
        Strategy::LookupDelete,
        Strategy::Lrr,
        Strategy::Gloran,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Decomp => "DECOMP",
            Strategy::ScanDelete => "SCAN_DELETE",
            Strategy::LookupDelete => "LOOKUP_DELETE",
            Strategy::Lrr => "LRR",
            Strategy::Gloran => "GLORAN",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == upper)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreConfig {
    /// F: memtable capacity in entries.
    pub memtable_capacity: usize,
    /// T: LSM size ratio.
    pub size_ratio: usize,
    /// B: block size in bytes.
    pub block_size: usize,
    /// k: on-disk key width in bytes.
    pub key_width: usize,
    /// e: on-disk entry width in bytes.
    pub entry_width: usize,
    pub bloom_bits_per_entry: f64,
    /// U: size of the key universe, a power of two.
    pub universe: u64,
    pub strategy: Strategy,
    /// F′: range records buffered before the index flushes.
    pub index_buffer_capacity: usize,
    /// T′: size ratio between index levels.
    pub index_size_ratio: usize,
    /// D: DR-tree fanout.
    pub drtree_fanout: usize,
    pub eve_first_capacity: usize,
    pub eve_bits_per_record: f64,
    /// Width of one virtual-bit-array segment; 0 derives it from the universe.
    pub eve_segment_width: u64,
    /// Upper bound on keys enumerated by a single per-key range delete.
    pub max_range_expansion: u64,
    pub rtree_node_capacity: usize,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            memtable_capacity: 4096,
            size_ratio: 10,
            block_size: 4096,
            key_width: 32,
            entry_width: 64,
            bloom_bits_per_entry: 10.0,
            universe: 1 << 32,
            strategy: Strategy::Gloran,
            index_buffer_capacity: 4096 / 16,
            index_size_ratio: 10,
            drtree_fanout: 10,
            eve_first_capacity: 1 << 13,
            eve_bits_per_record: 10.0,
            eve_segment_width: 0,
            max_range_expansion: 1 << 16,
            rtree_node_capacity: 8,
        }
    }
}

const KEYS: &[&str] = &[
    "memtable_capacity",
    "size_ratio",
    "block_size",
    "key_width",
    "entry_width",
    "bloom_bits_per_entry",
    "universe",
    "strategy",
    "index_buffer_capacity",
    "index_size_ratio",
    "drtree_fanout",
    "eve_first_capacity",
    "eve_bits_per_record",
    "eve_segment_width",
    "max_range_expansion",
    "rtree_node_capacity",
];

impl StoreConfig {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    /// Bytes available for a value inside one fixed-width entry.
    pub fn value_width(&self) -> usize {
        self.entry_width - self.key_width - 9
    }

    pub fn entries_per_block(&self) -> usize {
        self.block_size / self.entry_width
    }

    /// Serialized size of one LRR range tombstone record.
    pub fn tombstone_record_width(&self) -> usize {
        2 * self.key_width + 8
    }

    /// Serialized size of one DR-tree child slot.
    pub fn drtree_slot_width(&self) -> usize {
        2 * self.key_width + 24
    }

    /// Capacity of LSM level `level` (1-based) in entries: F·T^level.
    pub fn level_capacity(&self, level: usize) -> u64 {
        capacity(self.memtable_capacity, self.size_ratio, level)
    }

    /// Capacity of index level `level` (1-based) in effective areas: F′·T′^level.
    pub fn index_level_capacity(&self, level: usize) -> u64 {
        capacity(self.index_buffer_capacity, self.index_size_ratio, level)
    }

    pub fn segment_width(&self) -> u64 {
        if self.eve_segment_width > 0 {
            return self.eve_segment_width;
        }
        (self.universe >> 20).max(64).min(self.universe)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.size_ratio < 2 {
            return fail(format!("size_ratio must be >= 2, got {}", self.size_ratio));
        }
        if self.index_size_ratio < 2 {
            return fail(format!(
                "index_size_ratio must be >= 2, got {}",
                self.index_size_ratio
            ));
        }
        if self.drtree_fanout < 2 {
            return fail(format!(
                "drtree_fanout must be >= 2, got {}",
                self.drtree_fanout
            ));
        }
        if self.memtable_capacity < 1 || self.index_buffer_capacity < 1 {
            return fail("buffer capacities must be >= 1".into());
        }
        if self.key_width < 8 {
            return fail(format!("key_width must be >= 8, got {}", self.key_width));
        }
        if self.entry_width < self.key_width + 9 {
            return fail(format!(
                "entry_width {} cannot hold a {}-byte key, sequence and kind",
                self.entry_width, self.key_width
            ));
        }
        if self.block_size < self.entry_width {
            return fail(format!(
                "block_size {} smaller than entry_width {}",
                self.block_size, self.entry_width
            ));
        }
        if self.block_size < self.tombstone_record_width() {
            return fail("block_size cannot hold a range tombstone record".into());
        }
        if self.drtree_fanout * self.drtree_slot_width() > self.block_size {
            return fail(format!(
                "a DR-tree node of fanout {} ({} bytes) does not fit in a {}-byte block",
                self.drtree_fanout,
                self.drtree_fanout * self.drtree_slot_width(),
                self.block_size
            ));
        }
        if self.universe < 2 || !self.universe.is_power_of_two() {
            return fail(format!(
                "universe must be a power of two, got {}",
                self.universe
            ));
        }
        let w = self.segment_width();
        if !w.is_power_of_two() || w > self.universe {
            return fail(format!(
                "segment width {w} must be a power of two within the universe"
            ));
        }
        if self.bloom_bits_per_entry <= 0.0 || self.eve_bits_per_record <= 0.0 {
            return fail("bits-per-entry settings must be positive".into());
        }
        if self.eve_first_capacity < 1 || self.rtree_node_capacity < 2 {
            return fail("eve_first_capacity >= 1 and rtree_node_capacity >= 2 required".into());
        }
        Ok(())
    }

    /// Parse the flat `key = value` format. Unknown keys are rejected and
    /// omitted keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = StoreConfig::default();
        for (line, key, value) in parse_kv(text)? {
            let bad = |e: String| Error::Config(format!("line {line}: `{key}`: {e}"));
            macro_rules! num {
                () => {
                    value.parse().map_err(|e| bad(format!("{e}")))?
                };
            }
            match key.as_str() {
                "memtable_capacity" => cfg.memtable_capacity = num!(),
                "size_ratio" => cfg.size_ratio = num!(),
                "block_size" => cfg.block_size = num!(),
                "key_width" => cfg.key_width = num!(),
                "entry_width" => cfg.entry_width = num!(),
                "bloom_bits_per_entry" => cfg.bloom_bits_per_entry = num!(),
                "universe" => cfg.universe = num!(),
                "strategy" => cfg.strategy = value.parse()?,
                "index_buffer_capacity" => cfg.index_buffer_capacity = num!(),
                "index_size_ratio" => cfg.index_size_ratio = num!(),
                "drtree_fanout" => cfg.drtree_fanout = num!(),
                "eve_first_capacity" => cfg.eve_first_capacity = num!(),
                "eve_bits_per_record" => cfg.eve_bits_per_record = num!(),
                "eve_segment_width" => cfg.eve_segment_width = num!(),
                "max_range_expansion" => cfg.max_range_expansion = num!(),
                "rtree_node_capacity" => cfg.rtree_node_capacity = num!(),
                _ => {
                    return Err(Error::Config(format!(
                        "line {line}: unknown setting `{key}` (expected one of {})",
                        KEYS.join(", ")
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "memtable_capacity = {}\nsize_ratio = {}\nblock_size = {}\nkey_width = {}\n\
             entry_width = {}\nbloom_bits_per_entry = {}\nuniverse = {}\nstrategy = {}\n\
             index_buffer_capacity = {}\nindex_size_ratio = {}\ndrtree_fanout = {}\n\
             eve_first_capacity = {}\neve_bits_per_record = {}\neve_segment_width = {}\n\
             max_range_expansion = {}\nrtree_node_capacity = {}\n",
            self.memtable_capacity,
            self.size_ratio,
            self.block_size,
            self.key_width,
            self.entry_width,
            self.bloom_bits_per_entry,
            self.universe,
            self.strategy,
            self.index_buffer_capacity,
            self.index_size_ratio,
            self.drtree_fanout,
            self.eve_first_capacity,
            self.eve_bits_per_record,
            self.eve_segment_width,
            self.max_range_expansion,
            self.rtree_node_capacity,
        )
    }
}

fn capacity(base: usize, ratio: usize, level: usize) -> u64 {
    let mut cap = base as u64;
    for _ in 0..level {
        cap = cap.saturating_mul(ratio as u64);
    }
    cap
}

/// Split a flat settings file into `(line number, key, value)` triples.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`",
                i + 1
            )));
        };
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
