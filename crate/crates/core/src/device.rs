//! File-backed block device that counts every transfer in units of blocks.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::ops::{Add, Range, Sub};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{corrupt, Result};

/// Which counter a transfer is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoClass {
    Data,
    Tombstone,
    Index,
}

#[derive(Debug, Default)]
struct IoCounters {
    data_block_reads: AtomicU64,
    data_block_writes: AtomicU64,
    tombstone_block_reads: AtomicU64,
    tombstone_block_writes: AtomicU64,
    index_node_reads: AtomicU64,
    index_node_writes: AtomicU64,
}

/// Point-in-time copy of the device counters, in blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoSnapshot {
    pub data_block_reads: u64,
    pub data_block_writes: u64,
    pub tombstone_block_reads: u64,
    pub tombstone_block_writes: u64,
    pub index_node_reads: u64,
    pub index_node_writes: u64,
}

impl IoSnapshot {
    pub fn total_reads(&self) -> u64 {
        self.data_block_reads + self.tombstone_block_reads + self.index_node_reads
    }

    pub fn total_writes(&self) -> u64 {
        self.data_block_writes + self.tombstone_block_writes + self.index_node_writes
    }
}

impl Add for IoSnapshot {
    type Output = IoSnapshot;

    fn add(self, rhs: IoSnapshot) -> IoSnapshot {
        IoSnapshot {
            data_block_reads: self.data_block_reads + rhs.data_block_reads,
            data_block_writes: self.data_block_writes + rhs.data_block_writes,
            tombstone_block_reads: self.tombstone_block_reads + rhs.tombstone_block_reads,
            tombstone_block_writes: self.tombstone_block_writes + rhs.tombstone_block_writes,
            index_node_reads: self.index_node_reads + rhs.index_node_reads,
            index_node_writes: self.index_node_writes + rhs.index_node_writes,
        }
    }
}

impl Sub for IoSnapshot {
    type Output = IoSnapshot;

    fn sub(self, rhs: IoSnapshot) -> IoSnapshot {
        IoSnapshot {
            data_block_reads: self.data_block_reads - rhs.data_block_reads,
            data_block_writes: self.data_block_writes - rhs.data_block_writes,
            tombstone_block_reads: self.tombstone_block_reads - rhs.tombstone_block_reads,
            tombstone_block_writes: self.tombstone_block_writes - rhs.tombstone_block_writes,
            index_node_reads: self.index_node_reads - rhs.index_node_reads,
            index_node_writes: self.index_node_writes - rhs.index_node_writes,
        }
    }
}

impl IoCounters {
    fn charge(&self, class: IoClass, write: bool, blocks: u64) {
        let counter = match (class, write) {
            (IoClass::Data, false) => &self.data_block_reads,
            (IoClass::Data, true) => &self.data_block_writes,
            (IoClass::Tombstone, false) => &self.tombstone_block_reads,
            (IoClass::Tombstone, true) => &self.tombstone_block_writes,
            (IoClass::Index, false) => &self.index_node_reads,
            (IoClass::Index, true) => &self.index_node_writes,
        };
        counter.fetch_add(blocks, Ordering::Relaxed);
    }

    fn snapshot(&self) -> IoSnapshot {
        IoSnapshot {
            data_block_reads: self.data_block_reads.load(Ordering::Relaxed),
            data_block_writes: self.data_block_writes.load(Ordering::Relaxed),
            tombstone_block_reads: self.tombstone_block_reads.load(Ordering::Relaxed),
            tombstone_block_writes: self.tombstone_block_writes.load(Ordering::Relaxed),
            index_node_reads: self.index_node_reads.load(Ordering::Relaxed),
            index_node_writes: self.index_node_writes.load(Ordering::Relaxed),
        }
    }
}

/// Number of `block_size` blocks touched by the byte range.
pub fn blocks_spanned(range: &Range<u64>, block_size: u64) -> u64 {
    if range.is_empty() {
        return 0;
    }
    (range.end - 1) / block_size - range.start / block_size + 1
}

/// A directory of store files sharing one set of counters.
#[derive(Debug, Clone)]
pub struct BlockDevice {
    root: PathBuf,
    block_size: u64,
    counters: Arc<IoCounters>,
}

impl BlockDevice {
    pub fn new(root: impl Into<PathBuf>, block_size: usize) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(BlockDevice {
            root,
            block_size: block_size as u64,
            counters: Arc::new(IoCounters::default()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn block_size(&self) -> usize {
        self.block_size as usize
    }

    pub fn stats(&self) -> IoSnapshot {
        self.counters.snapshot()
    }

    /// Write `bytes` as a new file, replacing any existing file of that name.
    /// Each `(range, class)` region is charged as sequential block writes;
    /// bytes outside every region are not charged.
    pub fn write_file(
        &self,
        name: &str,
        bytes: &[u8],
        regions: &[(Range<usize>, IoClass)],
    ) -> Result<BlockFile> {
        let tmp = self.root.join(format!("{name}.tmp"));
        {
            let mut f = OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(true)
                .open(&tmp)?;
            f.write_all(bytes)?;
        }
        let path = self.root.join(name);
        fs::rename(&tmp, &path)?;
        for (range, class) in regions {
            let r = range.start as u64..range.end as u64;
            self.counters
                .charge(*class, true, blocks_spanned(&r, self.block_size));
        }
        self.open(name)
    }

    pub fn open(&self, name: &str) -> Result<BlockFile> {
        let file = File::open(self.root.join(name))?;
        let len = file.metadata()?.len();
        Ok(BlockFile {
            file,
            name: name.to_string(),
            len,
            block_size: self.block_size,
            counters: self.counters.clone(),
        })
    }

    pub fn remove(&self, name: &str) -> Result<()> {
        match fs::remove_file(self.root.join(name)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    /// Plain-text metadata (manifests, config); never charged.
    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let tmp = self.root.join(format!("{name}.tmp"));
        fs::write(&tmp, text)?;
        fs::rename(tmp, self.root.join(name))?;
        Ok(())
    }

    pub fn read_text(&self, name: &str) -> Result<String> {
        Ok(fs::read_to_string(self.root.join(name))?)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.root.join(name).exists()
    }

    /// Total bytes of all files in the store directory.
    pub fn disk_bytes(&self) -> Result<u64> {
        let mut total = 0;
        for entry in fs::read_dir(&self.root)? {
            let meta = entry?.metadata()?;
            if meta.is_file() {
                total += meta.len();
            }
        }
        Ok(total)
    }
}

/// Read handle on an immutable store file.
#[derive(Debug)]
pub struct BlockFile {
    file: File,
    name: String,
    len: u64,
    block_size: u64,
    counters: Arc<IoCounters>,
}

impl BlockFile {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Read `len` bytes at `offset`, charging every block the range touches.
    pub fn read(&self, offset: u64, len: usize, class: IoClass) -> Result<Vec<u8>> {
        if offset + len as u64 > self.len {
            return Err(corrupt(
                &self.name,
                format!("read of {len} bytes at {offset} past end ({})", self.len),
            ));
        }
        let mut buf = vec![0u8; len];
        self.file.read_exact_at(&mut buf, offset)?;
        let r = offset..offset + len as u64;
        self.counters
            .charge(class, false, blocks_spanned(&r, self.block_size));
        Ok(buf)
    }

    /// Read whole blocks `[first, first + count)`, clipped to the file end.
    pub fn read_blocks(&self, first: u64, count: u64, class: IoClass) -> Result<Vec<u8>> {
        let start = first * self.block_size;
        let end = ((first + count) * self.block_size).min(self.len);
        self.read(start, end.saturating_sub(start) as usize, class)
    }
}
