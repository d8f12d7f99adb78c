//! Domain types shared by every layer of the store.

/// A key drawn from the integer universe `[0, U)`.
pub type Key = u64;

/// Sequence number of a mutating operation. `0` is reserved as the
/// beginning of time and is never handed out.
pub type SeqNo = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryKind {
    Value,
    Tombstone,
}

impl EntryKind {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            EntryKind::Value => 0,
            EntryKind::Tombstone => 1,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(EntryKind::Value),
            1 => Some(EntryKind::Tombstone),
            _ => None,
        }
    }
}

/// A versioned record inside the LSM-tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: Key,
    pub seq: SeqNo,
    pub kind: EntryKind,
    pub value: Vec<u8>,
}

impl Entry {
    pub fn value(key: Key, seq: SeqNo, value: Vec<u8>) -> Self {
        Entry {
            key,
            seq,
            kind: EntryKind::Value,
            value,
        }
    }

    pub fn tombstone(key: Key, seq: SeqNo) -> Self {
        Entry {
            key,
            seq,
            kind: EntryKind::Tombstone,
            value: Vec::new(),
        }
    }

    pub fn is_tombstone(&self) -> bool {
        self.kind == EntryKind::Tombstone
    }
}

/// A range tombstone as stored by the local-range-record baseline:
/// deletes every key in `[start, end)` written before `seq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeTombstone {
    pub start: Key,
    pub end: Key,
    pub seq: SeqNo,
}

impl RangeTombstone {
    pub fn covers(&self, key: Key, seq: SeqNo) -> bool {
        self.start <= key && key < self.end && seq < self.seq
    }
}

/// Monotone sequence-number source.
#[derive(Debug, Clone)]
pub struct SeqCounter {
    last: SeqNo,
}

impl SeqCounter {
    pub fn new() -> Self {
        SeqCounter { last: 0 }
    }

    /// Resume after `last` has already been handed out.
    pub fn resume(last: SeqNo) -> Self {
        SeqCounter { last }
    }

    pub fn next_sequence(&mut self) -> SeqNo {
        self.last += 1;
        self.last
    }

    /// The most recently assigned number (0 if none).
    pub fn last(&self) -> SeqNo {
        self.last
    }
}

impl Default for SeqCounter {
    fn default() -> Self {
        Self::new()
    }
}

/// Big-endian key encoding left-padded with zeros to `width` bytes.
pub(crate) fn encode_key(buf: &mut Vec<u8>, key: Key, width: usize) {
    debug_assert!(width >= 8);
    buf.extend(std::iter::repeat_n(0u8, width - 8));
    buf.extend_from_slice(&key.to_be_bytes());
}

pub(crate) fn decode_key(bytes: &[u8], width: usize) -> Key {
    let tail = &bytes[width - 8..width];
    u64::from_be_bytes(tail.try_into().unwrap())
}

pub(crate) fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_be_bytes(bytes[at..at + 8].try_into().unwrap())
}
