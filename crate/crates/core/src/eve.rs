//! Entry validity estimator: a chain of range-aware Bloom filters, one per
//! sequence-number epoch, with doubling capacities.
//!
//! A key range is mapped onto a coarse "virtual bit array" by dividing by the
//! segment width; every segment position the range touches is inserted.

use crate::lsm::bloom::{hash64, BloomFilter};
use crate::types::{Key, SeqNo};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    MaybeDeleted,
    DefinitelyValid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaeState {
    Active,
    Static,
}

/// Segment positions assumed per range when sizing a filter.
const SEGMENTS_PER_RANGE: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct Rae {
    epoch: u64,
    salt: u64,
    bloom: BloomFilter,
    segment_width: u64,
    capacity: usize,
    count: usize,
    positions: u64,
    seq_min: SeqNo,
    seq_max: SeqNo,
    state: RaeState,
}

impl Rae {
    pub fn new(epoch: u64, capacity: usize, bits_per_record: f64, segment_width: u64) -> Self {
        debug_assert!(segment_width.is_power_of_two());
        let m = (capacity as f64 * bits_per_record * SEGMENTS_PER_RANGE).ceil() as u64;
        let hashes = ((bits_per_record * std::f64::consts::LN_2).round() as u32).clamp(1, 16);
        Rae {
            epoch,
            salt: hash64(epoch ^ 0x5241_4500),
            bloom: BloomFilter::with_params(m.max(8), hashes),
            segment_width,
            capacity,
            count: 0,
            positions: 0,
            seq_min: 0,
            seq_max: 0,
            state: RaeState::Active,
        }
    }

    fn item(&self, position: u64) -> u64 {
        self.salt ^ position
    }

    /// Segment positions covered by `[lo, hi)`.
    pub fn positions_for(&self, lo: Key, hi: Key) -> std::ops::RangeInclusive<u64> {
        lo / self.segment_width..=(hi - 1) / self.segment_width
    }

    pub fn insert(&mut self, lo: Key, hi: Key, seq: SeqNo) {
        debug_assert!(lo < hi);
        for p in self.positions_for(lo, hi) {
            let it = self.item(p);
            self.bloom.insert(it);
            self.positions += 1;
        }
        if self.count == 0 {
            self.seq_min = seq;
        }
        self.seq_min = self.seq_min.min(seq);
        self.seq_max = self.seq_max.max(seq);
        self.count += 1;
    }

    pub fn query(&self, key: Key) -> Validity {
        if self.count > 0 && self.bloom.may_contain(self.item(key / self.segment_width)) {
            Validity::MaybeDeleted
        } else {
            Validity::DefinitelyValid
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_full(&self) -> bool {
        self.count >= self.capacity
    }

    /// Bloom insertions performed so far.
    pub fn positions_inserted(&self) -> u64 {
        self.positions
    }

    pub fn seq_min(&self) -> SeqNo {
        self.seq_min
    }

    pub fn seq_max(&self) -> SeqNo {
        self.seq_max
    }

    pub fn state(&self) -> RaeState {
        self.state
    }

    pub fn bloom_bits(&self) -> u64 {
        self.bloom.num_bits()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EveStats {
    pub queries: u64,
    pub definitely_valid: u64,
    pub maybe_deleted: u64,
    pub probes: u64,
}

#[derive(Debug, Clone)]
pub struct Eve {
    chain: Vec<Rae>,
    first_capacity: usize,
    bits_per_record: f64,
    segment_width: u64,
    next_epoch: u64,
    stats: EveStats,
}

impl Eve {
    pub fn new(first_capacity: usize, bits_per_record: f64, segment_width: u64) -> Self {
        Eve {
            chain: vec![Rae::new(
                0,
                first_capacity.max(1),
                bits_per_record,
                segment_width,
            )],
            first_capacity: first_capacity.max(1),
            bits_per_record,
            segment_width,
            next_epoch: 1,
            stats: EveStats::default(),
        }
    }

    pub fn chain(&self) -> &[Rae] {
        &self.chain
    }

    pub fn stats(&self) -> EveStats {
        self.stats
    }

    pub fn segment_width(&self) -> u64 {
        self.segment_width
    }

    /// Record a range delete issued at `seq`.
    pub fn insert(&mut self, lo: Key, hi: Key, seq: SeqNo) {
        let active = self.chain.last_mut().expect("chain never empty");
        debug_assert!(active.count == 0 || seq >= active.seq_max);
        if active.is_full() {
            active.state = RaeState::Static;
            let cap = active.capacity * 2;
            let rae = Rae::new(
                self.next_epoch,
                cap,
                self.bits_per_record,
                self.segment_width,
            );
            self.next_epoch += 1;
            self.chain.push(rae);
        }
        self.chain.last_mut().unwrap().insert(lo, hi, seq);
    }

    /// Newest epoch first; epochs whose newest record is not newer than the
    /// entry cannot have deleted it.
    pub fn query(&mut self, key: Key, entry_seq: SeqNo) -> Validity {
        self.stats.queries += 1;
        let mut verdict = Validity::DefinitelyValid;
        for rae in self.chain.iter().rev() {
            if rae.count == 0 {
                continue;
            }
            if rae.seq_max <= entry_seq {
                break;
            }
            self.stats.probes += 1;
            if rae.query(key) == Validity::MaybeDeleted {
                verdict = Validity::MaybeDeleted;
                break;
            }
        }
        match verdict {
            Validity::MaybeDeleted => self.stats.maybe_deleted += 1,
            Validity::DefinitelyValid => self.stats.definitely_valid += 1,
        }
        verdict
    }

    /// Remove static epochs whose records all have seq at or below `w`.
    pub fn drop_outdated(&mut self, w: SeqNo) -> usize {
        let before = self.chain.len();
        self.chain
            .retain(|r| r.state == RaeState::Active || r.seq_max > w);
        before - self.chain.len()
    }

    /// Forget everything and restart with a fresh first epoch.
    pub fn reset(&mut self) {
        *self = Eve::new(
            self.first_capacity,
            self.bits_per_record,
            self.segment_width,
        );
    }
}
