//! Sorted run file.
//!
//! ```text
//! block 0      magic, level, entry_count, min_key, max_key, fence_count,
//!              bloom_bytes, tombstone_record_count   (u64 big-endian each)
//! block 1..    fence keys (k bytes each), then Bloom bits, padded to a block
//! data blocks  floor(B/e) entries per block: key (k), seq (8), kind (1), value
//! tail blocks  range tombstones: start (k), end (k), seq (8); no record
//!              crosses a block boundary
//! ```

use crate::config::StoreConfig;
use crate::device::{BlockDevice, BlockFile, IoClass};
use crate::error::{corrupt, Result};
use crate::lsm::bloom::{optimal_hashes, BloomFilter};
use crate::types::{
    decode_key, encode_key, read_u64, Entry, EntryKind, Key, RangeTombstone, SeqNo,
};

const MAGIC: u64 = u64::from_be_bytes(*b"GLSSTRUN");

/// Bloom outcome counters for measuring the false-positive rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BloomCounts {
    pub negatives: u64,
    pub false_positives: u64,
}

#[derive(Debug)]
pub struct SortedRun {
    file: BlockFile,
    level: usize,
    entry_count: u64,
    min_key: Key,
    max_key: Key,
    min_seq: SeqNo,
    fences: Vec<Key>,
    bloom: BloomFilter,
    rt_count: u64,
    data_offset: u64,
    rt_offset: u64,
    block_size: usize,
    entry_width: usize,
    key_width: usize,
}

fn align(x: usize, b: usize) -> usize {
    x.div_ceil(b) * b
}

impl SortedRun {
    /// Write `entries` (strictly sorted by key) and `rts` (sorted by start).
    pub fn build(
        device: &BlockDevice,
        name: &str,
        level: usize,
        entries: &[Entry],
        rts: &[RangeTombstone],
        cfg: &StoreConfig,
    ) -> Result<Self> {
        debug_assert!(entries.windows(2).all(|w| w[0].key < w[1].key));
        debug_assert!(rts.windows(2).all(|w| w[0].start <= w[1].start));
        let b = cfg.block_size;
        let k = cfg.key_width;
        let e = cfg.entry_width;
        let epb = cfg.entries_per_block();
        let vw = cfg.value_width();

        let mut bloom = BloomFilter::new(entries.len(), cfg.bloom_bits_per_entry);
        for en in entries {
            bloom.insert(en.key);
        }
        let fences: Vec<Key> = entries.chunks(epb).map(|c| c[0].key).collect();

        let mut buf = Vec::new();
        let header = [
            MAGIC,
            level as u64,
            entries.len() as u64,
            entries.first().map_or(0, |e| e.key),
            entries.last().map_or(0, |e| e.key),
            fences.len() as u64,
            bloom.as_bytes().len() as u64,
            rts.len() as u64,
        ];
        for v in header {
            buf.extend_from_slice(&v.to_be_bytes());
        }
        buf.resize(b, 0);
        for f in &fences {
            encode_key(&mut buf, *f, k);
        }
        buf.extend_from_slice(bloom.as_bytes());
        let data_offset = align(buf.len(), b);
        buf.resize(data_offset, 0);

        for chunk in entries.chunks(epb) {
            let start = buf.len();
            for en in chunk {
                encode_key(&mut buf, en.key, k);
                buf.extend_from_slice(&en.seq.to_be_bytes());
                buf.push(en.kind.to_byte());
                let n = en.value.len().min(vw);
                buf.extend_from_slice(&en.value[..n]);
                buf.resize(buf.len() + (vw - n), 0);
            }
            debug_assert_eq!(buf.len() - start, chunk.len() * e);
            buf.resize(start + b, 0);
        }
        let rt_offset = buf.len();
        let rpb = b / cfg.tombstone_record_width();
        for chunk in rts.chunks(rpb) {
            let start = buf.len();
            for r in chunk {
                encode_key(&mut buf, r.start, k);
                encode_key(&mut buf, r.end, k);
                buf.extend_from_slice(&r.seq.to_be_bytes());
            }
            buf.resize(start + b, 0);
        }
        let total = buf.len();
        let file = device.write_file(
            name,
            &buf,
            &[
                (0..rt_offset, IoClass::Data),
                (rt_offset..total, IoClass::Tombstone),
            ],
        )?;
        Ok(SortedRun {
            file,
            level,
            entry_count: entries.len() as u64,
            min_key: header[3],
            max_key: header[4],
            min_seq: entries
                .iter()
                .map(|e| e.seq)
                .chain(rts.iter().map(|r| r.seq))
                .min()
                .unwrap_or(SeqNo::MAX),
            fences,
            bloom,
            rt_count: rts.len() as u64,
            data_offset: data_offset as u64,
            rt_offset: rt_offset as u64,
            block_size: b,
            entry_width: e,
            key_width: k,
        })
    }

    /// Reopen a run written by [`SortedRun::build`]. Reads the metadata and
    /// scans the data once to recover the minimum sequence number.
    pub fn open(device: &BlockDevice, name: &str, cfg: &StoreConfig) -> Result<Self> {
        let file = device.open(name)?;
        let b = cfg.block_size;
        let k = cfg.key_width;
        if (file.len() as usize) < b {
            return Err(corrupt(name, "shorter than a header block"));
        }
        let h = file.read(0, b, IoClass::Data)?;
        if read_u64(&h, 0) != MAGIC {
            return Err(corrupt(name, "bad run magic"));
        }
        let field = |i: usize| read_u64(&h, 8 * i);
        let (level, entry_count, min_key, max_key) = (field(1), field(2), field(3), field(4));
        let (fence_count, bloom_bytes, rt_count) = (field(5), field(6), field(7));
        let meta_len = fence_count as usize * k + bloom_bytes as usize;
        let data_offset = align(b + meta_len, b) as u64;
        let rt_offset = data_offset + fence_count * b as u64;
        let rpb = (b / cfg.tombstone_record_width()) as u64;
        if rt_offset + rt_count.div_ceil(rpb) * b as u64 != file.len() {
            return Err(corrupt(name, "header does not match file length"));
        }
        let meta = file.read(b as u64, meta_len, IoClass::Data)?;
        let fences = (0..fence_count as usize)
            .map(|i| decode_key(&meta[i * k..], k))
            .collect();
        let bloom = BloomFilter::from_bytes(
            meta[fence_count as usize * k..].to_vec(),
            optimal_hashes(cfg.bloom_bits_per_entry),
        );
        let mut run = SortedRun {
            file,
            level: level as usize,
            entry_count,
            min_key,
            max_key,
            min_seq: SeqNo::MAX,
            fences,
            bloom,
            rt_count,
            data_offset,
            rt_offset,
            block_size: b,
            entry_width: cfg.entry_width,
            key_width: k,
        };
        let min_entry = run.read_all()?.iter().map(|e| e.seq).min();
        let min_rt = run.read_range_tombstones()?.iter().map(|r| r.seq).min();
        run.min_seq = min_entry
            .into_iter()
            .chain(min_rt)
            .min()
            .unwrap_or(SeqNo::MAX);
        Ok(run)
    }

    pub fn name(&self) -> &str {
        self.file.name()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn entry_count(&self) -> u64 {
        self.entry_count
    }

    pub fn range_tombstone_count(&self) -> u64 {
        self.rt_count
    }

    /// Entries plus range tombstones, the quantity bounded by level capacity.
    pub fn size(&self) -> u64 {
        self.entry_count + self.rt_count
    }

    pub fn min_key(&self) -> Key {
        self.min_key
    }

    pub fn max_key(&self) -> Key {
        self.max_key
    }

    /// Smallest seq of any entry or range tombstone, `SeqNo::MAX` if none.
    pub fn min_seq(&self) -> SeqNo {
        self.min_seq
    }

    pub fn bloom(&self) -> &BloomFilter {
        &self.bloom
    }

    pub fn file_bytes(&self) -> u64 {
        self.file.len()
    }

    fn epb(&self) -> usize {
        self.block_size / self.entry_width
    }

    fn block_entries(&self, block: usize) -> usize {
        let epb = self.epb() as u64;
        (self.entry_count - block as u64 * epb).min(epb) as usize
    }

    fn decode_entries(&self, bytes: &[u8], count: usize) -> Vec<Entry> {
        let k = self.key_width;
        let e = self.entry_width;
        (0..count)
            .map(|i| {
                let s = &bytes[i * e..(i + 1) * e];
                let kind = EntryKind::from_byte(s[k + 8]).unwrap_or(EntryKind::Value);
                Entry {
                    key: decode_key(s, k),
                    seq: read_u64(s, k),
                    kind,
                    value: if kind == EntryKind::Value {
                        s[k + 9..].to_vec()
                    } else {
                        Vec::new()
                    },
                }
            })
            .collect()
    }

    fn read_data_blocks(&self, first: usize, last: usize) -> Result<Vec<Entry>> {
        if first > last {
            return Ok(Vec::new());
        }
        let b = self.block_size as u64;
        let bytes = self.file.read(
            self.data_offset + first as u64 * b,
            (last - first + 1) * self.block_size,
            IoClass::Data,
        )?;
        let mut out = Vec::new();
        for blk in first..=last {
            let off = (blk - first) * self.block_size;
            out.extend(self.decode_entries(&bytes[off..], self.block_entries(blk)));
        }
        Ok(out)
    }

    /// Point lookup: Bloom filter, then the single fence-selected block.
    pub fn get(&self, key: Key, counts: &mut BloomCounts) -> Result<Option<Entry>> {
        if self.entry_count == 0 || key < self.min_key || key > self.max_key {
            counts.negatives += 1;
            return Ok(None);
        }
        if !self.bloom.may_contain(key) {
            counts.negatives += 1;
            return Ok(None);
        }
        let block = self.fences.partition_point(|f| *f <= key) - 1;
        let b = self.block_size as u64;
        let bytes = self.file.read(
            self.data_offset + block as u64 * b,
            self.block_size,
            IoClass::Data,
        )?;
        let entries = self.decode_entries(&bytes, self.block_entries(block));
        match entries.binary_search_by_key(&key, |e| e.key) {
            Ok(i) => Ok(Some(entries[i].clone())),
            Err(_) => {
                counts.false_positives += 1;
                Ok(None)
            }
        }
    }

    /// Entries with keys in `[lo, hi)`, reading the spanned blocks sequentially.
    pub fn read_range(&self, lo: Key, hi: Key) -> Result<Vec<Entry>> {
        if self.entry_count == 0 || lo >= hi || hi <= self.min_key || lo > self.max_key {
            return Ok(Vec::new());
        }
        let first = self.fences.partition_point(|f| *f <= lo).saturating_sub(1);
        let last = self.fences.partition_point(|f| *f < hi) - 1;
        let mut out = self.read_data_blocks(first, last)?;
        out.retain(|e| lo <= e.key && e.key < hi);
        Ok(out)
    }

    pub fn read_all(&self) -> Result<Vec<Entry>> {
        if self.fences.is_empty() {
            return Ok(Vec::new());
        }
        self.read_data_blocks(0, self.fences.len() - 1)
    }

    fn decode_rts(&self, bytes: &[u8], count: usize) -> Vec<RangeTombstone> {
        let k = self.key_width;
        let w = 2 * k + 8;
        (0..count)
            .map(|i| {
                let s = &bytes[i * w..];
                RangeTombstone {
                    start: decode_key(s, k),
                    end: decode_key(&s[k..], k),
                    seq: read_u64(s, 2 * k),
                }
            })
            .collect()
    }

    fn rts_per_block(&self) -> u64 {
        (self.block_size / (2 * self.key_width + 8)) as u64
    }

    fn rt_block(&self, block: u64) -> Result<Vec<RangeTombstone>> {
        let rpb = self.rts_per_block();
        let count = (self.rt_count - block * rpb).min(rpb) as usize;
        let bytes = self.file.read(
            self.rt_offset + block * self.block_size as u64,
            self.block_size,
            IoClass::Tombstone,
        )?;
        Ok(self.decode_rts(&bytes, count))
    }

    pub fn read_range_tombstones(&self) -> Result<Vec<RangeTombstone>> {
        if self.rt_count == 0 {
            return Ok(Vec::new());
        }
        let blocks = self.rt_count.div_ceil(self.rts_per_block());
        let bytes = self.file.read(
            self.rt_offset,
            (blocks as usize) * self.block_size,
            IoClass::Tombstone,
        )?;
        let rpb = self.rts_per_block() as usize;
        let mut out = Vec::with_capacity(self.rt_count as usize);
        for blk in 0..blocks as usize {
            let count = (self.rt_count as usize - blk * rpb).min(rpb);
            out.extend(self.decode_rts(&bytes[blk * self.block_size..], count));
        }
        Ok(out)
    }

    /// Examine every range tombstone whose start key is at most `key`: the
    /// first block, then following blocks while they may still hold such
    /// records. Returns the newest covering one and the number examined.
    pub fn probe_range_tombstones(&self, key: Key) -> Result<(Option<RangeTombstone>, u64)> {
        if self.rt_count == 0 {
            return Ok((None, 0));
        }
        let blocks = self.rt_count.div_ceil(self.rts_per_block());
        let mut best: Option<RangeTombstone> = None;
        let mut examined = 0;
        for blk in 0..blocks {
            let recs = self.rt_block(blk)?;
            let mut reached_end = false;
            for r in &recs {
                if r.start > key {
                    reached_end = true;
                    break;
                }
                examined += 1;
                if key < r.end && best.is_none_or(|b| r.seq > b.seq) {
                    best = Some(*r);
                }
            }
            if reached_end {
                break;
            }
        }
        Ok((best, examined))
    }
}
