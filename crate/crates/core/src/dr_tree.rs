//! Disjoint R-tree: an immutable, bulk-loaded hierarchy over key-disjoint
//! effective areas. Because sibling key ranges never overlap, a point query
//! reads exactly one node per level.
//!
//! File layout (all integers big-endian):
//!
//! ```text
//! block 0   magic u64, height u64, leaf_count u64,
//!           height × { node_count u64, byte_offset u64 } (root first),
//!           min_seq_hi u64, max_seq_hi u64
//! block 1.. levels root first; each node is `fanout` slots packed back to back,
//!           slot = key_lo (k bytes), key_hi (k bytes), seq_lo u64, seq_hi u64,
//!           child_index u64
//! ```
//!
//! Nodes are packed contiguously; a node never exceeds one block, so a node
//! read costs one block unless it straddles a block boundary.

use crate::device::{BlockDevice, BlockFile, IoClass};
use crate::effective_area::{is_sorted_disjoint, EffectiveArea};
use crate::error::{corrupt, Error, Result};
use crate::types::{decode_key, encode_key, read_u64, Key, SeqNo};

const MAGIC: u64 = u64::from_be_bytes(*b"GLDRTREE");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    pub fanout: usize,
    pub key_width: usize,
    pub block_size: usize,
}

impl TreeShape {
    pub fn slot_width(&self) -> usize {
        2 * self.key_width + 24
    }

    pub fn node_width(&self) -> usize {
        self.fanout * self.slot_width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Level {
    node_count: u64,
    byte_offset: u64,
    /// Slots in use across the level: areas for the leaf level, nodes of the
    /// level below otherwise.
    child_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    area: EffectiveArea,
    child: u64,
}

/// Outcome of a point-stabbing query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointQuery {
    pub covering: Option<EffectiveArea>,
    pub node_accesses: usize,
}

#[derive(Debug)]
pub struct DrTree {
    file: Option<BlockFile>,
    shape: TreeShape,
    levels: Vec<Level>,
    leaf_count: u64,
    min_seq_hi: SeqNo,
    max_seq_hi: SeqNo,
}

/// Number of node levels needed for `n` leaves at fanout `d` (at least 1).
pub fn tree_height(n: u64, d: usize) -> usize {
    let mut h = 1;
    let mut c = n.max(1);
    while c > d as u64 {
        c = c.div_ceil(d as u64);
        h += 1;
    }
    h
}

impl DrTree {
    /// Tree with no areas; every query answers "not covered".
    pub fn empty(shape: TreeShape) -> Self {
        DrTree {
            file: None,
            shape,
            levels: Vec::new(),
            leaf_count: 0,
            min_seq_hi: 0,
            max_seq_hi: 0,
        }
    }

    /// Bulk-load `areas` (sorted, key-disjoint) and write the tree to `name`.
    pub fn build(
        device: &BlockDevice,
        name: &str,
        areas: &[EffectiveArea],
        shape: TreeShape,
    ) -> Result<Self> {
        if !is_sorted_disjoint(areas) {
            return Err(Error::InvalidInput(
                "DR-tree input must be sorted by key and key-disjoint".into(),
            ));
        }
        if shape.node_width() > shape.block_size {
            return Err(Error::Config("DR-tree node does not fit in a block".into()));
        }
        if areas.is_empty() {
            device.remove(name)?;
            return Ok(Self::empty(shape));
        }
        let d = shape.fanout;

        // Bottom-up packing; levels[0] is the leaf level here.
        let mut bottom_up: Vec<Vec<Vec<Slot>>> = Vec::new();
        let leaf_slots: Vec<Slot> = areas
            .iter()
            .enumerate()
            .map(|(i, a)| Slot {
                area: *a,
                child: i as u64,
            })
            .collect();
        let mut current: Vec<Vec<Slot>> = leaf_slots.chunks(d).map(<[Slot]>::to_vec).collect();
        loop {
            let parents: Vec<Slot> = current
                .iter()
                .enumerate()
                .map(|(i, node)| Slot {
                    area: mbr(node),
                    child: i as u64,
                })
                .collect();
            let done = current.len() == 1;
            bottom_up.push(current);
            if done {
                break;
            }
            current = parents.chunks(d).map(<[Slot]>::to_vec).collect();
        }

        let height = bottom_up.len();
        let header_len = 8 * (3 + 2 * height + 2);
        if header_len > shape.block_size {
            return Err(Error::Config(
                "DR-tree header does not fit in a block".into(),
            ));
        }

        let node_width = shape.node_width();
        let mut levels = Vec::with_capacity(height);
        let mut offset = shape.block_size as u64;
        for (depth, nodes) in bottom_up.iter().rev().enumerate() {
            let child_count = if depth + 1 == height {
                areas.len() as u64
            } else {
                bottom_up[height - depth - 2].len() as u64
            };
            levels.push(Level {
                node_count: nodes.len() as u64,
                byte_offset: offset,
                child_count,
            });
            offset += nodes.len() as u64 * node_width as u64;
        }

        let min_seq_hi = areas.iter().map(|a| a.seq_hi).min().unwrap();
        let max_seq_hi = areas.iter().map(|a| a.seq_hi).max().unwrap();

        let mut buf = Vec::with_capacity(offset as usize);
        buf.extend_from_slice(&MAGIC.to_be_bytes());
        buf.extend_from_slice(&(height as u64).to_be_bytes());
        buf.extend_from_slice(&(areas.len() as u64).to_be_bytes());
        for l in &levels {
            buf.extend_from_slice(&l.node_count.to_be_bytes());
            buf.extend_from_slice(&l.byte_offset.to_be_bytes());
        }
        buf.extend_from_slice(&min_seq_hi.to_be_bytes());
        buf.extend_from_slice(&max_seq_hi.to_be_bytes());
        buf.resize(shape.block_size, 0);
        for nodes in bottom_up.iter().rev() {
            for node in nodes {
                let start = buf.len();
                for slot in node {
                    encode_slot(&mut buf, slot, shape.key_width);
                }
                buf.resize(start + node_width, 0);
            }
        }
        debug_assert_eq!(buf.len() as u64, offset);

        let len = buf.len();
        let file = device.write_file(name, &buf, &[(0..len, IoClass::Index)])?;
        Ok(DrTree {
            file: Some(file),
            shape,
            levels,
            leaf_count: areas.len() as u64,
            min_seq_hi,
            max_seq_hi,
        })
    }

    /// Open a tree previously written by [`DrTree::build`].
    pub fn open(device: &BlockDevice, name: &str, shape: TreeShape) -> Result<Self> {
        let file = device.open(name)?;
        let header = file.read(0, shape.block_size.min(file.len() as usize), IoClass::Index)?;
        if header.len() < 24 || read_u64(&header, 0) != MAGIC {
            return Err(corrupt(name, "bad DR-tree magic"));
        }
        let height = read_u64(&header, 8) as usize;
        let leaf_count = read_u64(&header, 16);
        if 8 * (3 + 2 * height + 2) > header.len() {
            return Err(corrupt(name, "truncated header"));
        }
        let mut levels = Vec::with_capacity(height);
        for i in 0..height {
            levels.push(Level {
                node_count: read_u64(&header, 24 + 16 * i),
                byte_offset: read_u64(&header, 32 + 16 * i),
                child_count: 0,
            });
        }
        for i in 0..height {
            levels[i].child_count = if i + 1 == height {
                leaf_count
            } else {
                levels[i + 1].node_count
            };
        }
        let tail = 24 + 16 * height;
        let expected_end = levels
            .last()
            .map(|l| l.byte_offset + l.node_count * shape.node_width() as u64)
            .unwrap_or(0);
        if expected_end != file.len() {
            return Err(corrupt(name, "level table does not match file length"));
        }
        Ok(DrTree {
            file: Some(file),
            shape,
            levels,
            leaf_count,
            min_seq_hi: read_u64(&header, tail),
            max_seq_hi: read_u64(&header, tail + 8),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_count == 0
    }

    pub fn leaf_count(&self) -> u64 {
        self.leaf_count
    }

    /// Node levels; 0 for an empty tree.
    pub fn height(&self) -> usize {
        self.levels.len()
    }

    pub fn node_count(&self) -> u64 {
        self.levels.iter().map(|l| l.node_count).sum()
    }

    /// Node counts per level, root first.
    pub fn nodes_per_level(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.node_count).collect()
    }

    pub fn min_seq_hi(&self) -> SeqNo {
        self.min_seq_hi
    }

    pub fn max_seq_hi(&self) -> SeqNo {
        self.max_seq_hi
    }

    pub fn file_name(&self) -> Option<&str> {
        self.file.as_ref().map(BlockFile::name)
    }

    pub fn file_bytes(&self) -> u64 {
        self.file.as_ref().map_or(0, BlockFile::len)
    }

    fn read_node(&self, depth: usize, index: u64) -> Result<Vec<Slot>> {
        let file = self.file.as_ref().expect("non-empty tree has a file");
        let level = &self.levels[depth];
        let used = (level.child_count - index * self.shape.fanout as u64)
            .min(self.shape.fanout as u64) as usize;
        let off = level.byte_offset + index * self.shape.node_width() as u64;
        let bytes = file.read(off, used * self.shape.slot_width(), IoClass::Index)?;
        Ok(decode_slots(&bytes, used, self.shape.key_width))
    }

    /// Descend from the root through the single child containing `key`.
    pub fn query_point(&self, key: Key, seq: SeqNo) -> Result<PointQuery> {
        let mut accesses = 0;
        // Entries newer than every record here cannot be covered; the header
        // is held in memory, so this costs no node reads.
        if self.is_empty() || seq >= self.max_seq_hi {
            return Ok(PointQuery {
                covering: None,
                node_accesses: 0,
            });
        }
        let mut node = 0u64;
        for depth in 0..self.height() {
            let slots = self.read_node(depth, node)?;
            accesses += 1;
            let idx = slots.partition_point(|s| s.area.key_lo <= key);
            let hit = idx
                .checked_sub(1)
                .map(|i| slots[i])
                .filter(|s| s.area.contains_key(key));
            let Some(slot) = hit else { break };
            if seq < slot.area.seq_lo || seq >= slot.area.seq_hi {
                break;
            }
            if depth + 1 == self.height() {
                return Ok(PointQuery {
                    covering: Some(slot.area),
                    node_accesses: accesses,
                });
            }
            node = slot.child;
        }
        Ok(PointQuery {
            covering: None,
            node_accesses: accesses,
        })
    }

    /// Stream the leaf areas intersecting `[key_lo, key_hi)` in key order.
    pub fn iterate(&self, key_lo: Key, key_hi: Key) -> Result<LeafCursor<'_>> {
        let mut cursor = LeafCursor {
            tree: self,
            next_node: 0,
            pending: Vec::new(),
            pos: 0,
            buf: Vec::new(),
            buf_start: 0,
            key_hi,
            done: self.is_empty() || key_lo >= key_hi,
        };
        if cursor.done {
            return Ok(cursor);
        }
        // Locate the first leaf node whose range ends after key_lo.
        let mut node = 0u64;
        for depth in 0..self.height() - 1 {
            let slots = self.read_node(depth, node)?;
            let idx = slots.partition_point(|s| s.area.key_hi <= key_lo);
            match slots.get(idx) {
                Some(s) => node = s.child,
                None => {
                    cursor.done = true;
                    return Ok(cursor);
                }
            }
        }
        cursor.next_node = node;
        cursor.load_next_node()?;
        let skip = cursor.pending.partition_point(|a| a.key_hi <= key_lo);
        cursor.pos = skip;
        Ok(cursor)
    }

    /// Every leaf area in key order, read sequentially.
    pub fn all_leaves(&self) -> Result<Vec<EffectiveArea>> {
        let mut cursor = LeafCursor {
            tree: self,
            next_node: 0,
            pending: Vec::new(),
            pos: 0,
            buf: Vec::new(),
            buf_start: 0,
            key_hi: Key::MAX,
            done: self.is_empty(),
        };
        let mut out = Vec::with_capacity(self.leaf_count as usize);
        while let Some(a) = cursor.next_area()? {
            out.push(a);
        }
        Ok(out)
    }

    /// Drop the backing file.
    pub fn destroy(self, device: &BlockDevice) -> Result<()> {
        if let Some(f) = &self.file {
            device.remove(f.name())?;
        }
        Ok(())
    }
}

/// Sequential reader over the leaf level. Blocks are fetched one at a time
/// and each block is charged once.
pub struct LeafCursor<'a> {
    tree: &'a DrTree,
    next_node: u64,
    pending: Vec<EffectiveArea>,
    pos: usize,
    buf: Vec<u8>,
    buf_start: u64,
    key_hi: Key,
    done: bool,
}

impl LeafCursor<'_> {
    fn load_next_node(&mut self) -> Result<bool> {
        let tree = self.tree;
        let leaf_depth = tree.height() - 1;
        let level = tree.levels[leaf_depth];
        if self.next_node >= level.node_count {
            return Ok(false);
        }
        let d = tree.shape.fanout as u64;
        let used = (level.child_count - self.next_node * d).min(d) as usize;
        let node_off = level.byte_offset + self.next_node * tree.shape.node_width() as u64;
        let need_end = node_off + (used * tree.shape.slot_width()) as u64;
        let bs = tree.shape.block_size as u64;
        let file = tree.file.as_ref().expect("non-empty tree has a file");

        if self.buf.is_empty() || node_off < self.buf_start {
            self.buf_start = node_off / bs * bs;
            self.buf.clear();
        }
        // Discard bytes before this node, keeping block alignment.
        let keep_from = node_off / bs * bs;
        if keep_from > self.buf_start {
            let cut = ((keep_from - self.buf_start) as usize).min(self.buf.len());
            self.buf.drain(..cut);
            self.buf_start = keep_from;
        }
        while self.buf_start + (self.buf.len() as u64) < need_end {
            let block = (self.buf_start + self.buf.len() as u64) / bs;
            let bytes = file.read_blocks(block, 1, IoClass::Index)?;
            if bytes.is_empty() {
                return Err(corrupt(file.name(), "leaf level truncated"));
            }
            self.buf.extend_from_slice(&bytes);
        }
        let rel = (node_off - self.buf_start) as usize;
        let slots = decode_slots(&self.buf[rel..], used, tree.shape.key_width);
        self.pending = slots.into_iter().map(|s| s.area).collect();
        self.pos = 0;
        self.next_node += 1;
        Ok(true)
    }

    pub fn next_area(&mut self) -> Result<Option<EffectiveArea>> {
        if self.done {
            return Ok(None);
        }
        if self.pos >= self.pending.len() && !self.load_next_node()? {
            self.done = true;
            return Ok(None);
        }
        let a = self.pending[self.pos];
        if a.key_lo >= self.key_hi {
            self.done = true;
            return Ok(None);
        }
        self.pos += 1;
        Ok(Some(a))
    }
}

impl Iterator for LeafCursor<'_> {
    type Item = Result<EffectiveArea>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_area().transpose()
    }
}

fn mbr(node: &[Slot]) -> EffectiveArea {
    EffectiveArea {
        key_lo: node.first().unwrap().area.key_lo,
        key_hi: node.last().unwrap().area.key_hi,
        seq_lo: node.iter().map(|s| s.area.seq_lo).min().unwrap(),
        seq_hi: node.iter().map(|s| s.area.seq_hi).max().unwrap(),
    }
}

fn encode_slot(buf: &mut Vec<u8>, slot: &Slot, k: usize) {
    encode_key(buf, slot.area.key_lo, k);
    encode_key(buf, slot.area.key_hi, k);
    buf.extend_from_slice(&slot.area.seq_lo.to_be_bytes());
    buf.extend_from_slice(&slot.area.seq_hi.to_be_bytes());
    buf.extend_from_slice(&slot.child.to_be_bytes());
}

fn decode_slots(bytes: &[u8], used: usize, k: usize) -> Vec<Slot> {
    let w = 2 * k + 24;
    (0..used)
        .map(|i| {
            let s = &bytes[i * w..(i + 1) * w];
            Slot {
                area: EffectiveArea {
                    key_lo: decode_key(s, k),
                    key_hi: decode_key(&s[k..], k),
                    seq_lo: read_u64(s, 2 * k),
                    seq_hi: read_u64(s, 2 * k + 8),
                },
                child: read_u64(s, 2 * k + 16),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(d: usize) -> TreeShape {
        TreeShape {
            fanout: d,
            key_width: 8,
            block_size: 4096,
        }
    }

    fn areas(n: u64, width: u64) -> Vec<EffectiveArea> {
        (0..n)
            .map(|i| EffectiveArea::new(i * width, i * width + width - 1, 0, 100 + i))
            .collect()
    }

    #[test]
    fn single_area() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        let t = DrTree::build(&dev, "t", &areas(1, 4), shape(4)).unwrap();
        assert_eq!(t.height(), 1);
        assert_eq!(t.node_count(), 1);
        let reopened = DrTree::open(&dev, "t", shape(4)).unwrap();
        assert_eq!(reopened.leaf_count(), 1);
        assert_eq!(reopened.height(), 1);
    }

    #[test]
    fn sixteen_areas_fanout_four() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        let t = DrTree::build(&dev, "t", &areas(16, 4), shape(4)).unwrap();
        // 16 areas are packed into 4 leaf nodes under one root.
        assert_eq!(t.nodes_per_level(), vec![1, 4]);
        assert_eq!(t.height(), 2);
        assert_eq!(t.height(), tree_height(16, 4));
        let bound = 4.0 / 3.0 * 16.0;
        assert!((t.node_count() as f64) <= bound);
        assert!((t.leaf_count() + t.node_count()) as f64 <= bound);
    }

    #[test]
    fn empty_tree_answers_not_covered() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        let t = DrTree::build(&dev, "t", &[], shape(4)).unwrap();
        assert!(t.is_empty());
        let q = t.query_point(5, 1).unwrap();
        assert_eq!(q.covering, None);
        assert_eq!(q.node_accesses, 0);
        assert_eq!(t.iterate(0, 10).unwrap().count(), 0);
    }

    #[test]
    fn three_level_descent_reads_one_node_per_level() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        // 9 areas at fanout 2 give 5 / 3 / 2 / 1 nodes: pick 4 areas for 3 levels.
        let input: Vec<_> = (0..8u64)
            .map(|i| EffectiveArea::new(i * 2, i * 2 + 2, 0, 10 + i))
            .collect();
        let t = DrTree::build(&dev, "t", &input, shape(2)).unwrap();
        assert_eq!(t.height(), 3);
        let before = dev.stats();
        let q = t.query_point(6, 6).unwrap();
        assert_eq!(q.node_accesses, 3);
        assert_eq!(q.covering, Some(input[3]));
        assert_eq!((dev.stats() - before).index_node_reads, 3);
    }

    #[test]
    fn miss_outside_root_costs_one_access() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        let t = DrTree::build(&dev, "t", &areas(50, 10), shape(4)).unwrap();
        let q = t.query_point(10_000, 1).unwrap();
        assert_eq!(q.covering, None);
        assert_eq!(q.node_accesses, 1);
    }

    #[test]
    fn time_dimension_miss() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        let input = vec![EffectiveArea::new(7, 14, 0, 8)];
        let t = DrTree::build(&dev, "t", &input, shape(4)).unwrap();
        assert!(t.query_point(8, 5).unwrap().covering.is_some());
        assert!(t.query_point(8, 8).unwrap().covering.is_none());
        assert!(t.query_point(8, 9).unwrap().covering.is_none());
    }

    #[test]
    fn iterate_intersections() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        let input = vec![
            EffectiveArea::new(0, 5, 0, 3),
            EffectiveArea::new(5, 9, 0, 4),
            EffectiveArea::new(20, 30, 0, 5),
        ];
        let t = DrTree::build(&dev, "t", &input, shape(2)).unwrap();
        let got: Vec<_> = t.iterate(4, 21).unwrap().map(|r| r.unwrap()).collect();
        assert_eq!(got, input);
        let got: Vec<_> = t.iterate(9, 20).unwrap().map(|r| r.unwrap()).collect();
        assert!(got.is_empty());
        let got: Vec<_> = t
            .iterate(0, Key::MAX)
            .unwrap()
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(got, input);
        assert_eq!(t.all_leaves().unwrap(), input);
    }

    #[test]
    fn rejects_overlapping_input() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        let bad = vec![
            EffectiveArea::new(0, 5, 0, 3),
            EffectiveArea::new(4, 9, 0, 4),
        ];
        assert!(DrTree::build(&dev, "t", &bad, shape(4)).is_err());
        let unsorted = vec![
            EffectiveArea::new(10, 15, 0, 3),
            EffectiveArea::new(0, 9, 0, 4),
        ];
        assert!(DrTree::build(&dev, "t", &unsorted, shape(4)).is_err());
    }

    #[test]
    fn gaps_between_siblings_answer_not_covered() {
        let dir = tempfile::tempdir().unwrap();
        let dev = BlockDevice::new(dir.path(), 4096).unwrap();
        let t = DrTree::build(&dev, "t", &areas(40, 10), shape(3)).unwrap();
        // areas are [10i, 10i+9); key 10i+9 falls in a gap.
        for i in 0..40 {
            assert!(t.query_point(i * 10 + 9, 0).unwrap().covering.is_none());
            assert!(t.query_point(i * 10 + 3, 0).unwrap().covering.is_some());
        }
    }

    #[test]
    fn height_formula() {
        assert_eq!(tree_height(0, 10), 1);
        assert_eq!(tree_height(1, 10), 1);
        assert_eq!(tree_height(10, 10), 1);
        assert_eq!(tree_height(11, 10), 2);
        assert_eq!(tree_height(100, 10), 2);
        assert_eq!(tree_height(101, 10), 3);
    }
}
