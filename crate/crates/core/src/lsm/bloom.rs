//! Plain Bloom filter with double hashing from one 64-bit hash.

/// splitmix64 finalizer; good avalanche for integer keys.
pub fn hash64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Hash count that minimizes the false-positive rate at `bits_per_entry`.
pub fn optimal_hashes(bits_per_entry: f64) -> u32 {
    ((bits_per_entry * std::f64::consts::LN_2).round() as u32).clamp(1, 30)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    bits: Vec<u8>,
    num_bits: u64,
    hashes: u32,
}

impl BloomFilter {
    /// Filter sized for `expected` keys at `bits_per_entry`.
    pub fn new(expected: usize, bits_per_entry: f64) -> Self {
        let num_bits = ((expected as f64 * bits_per_entry).ceil() as u64).max(8);
        Self::with_params(num_bits, optimal_hashes(bits_per_entry))
    }

    pub fn with_params(num_bits: u64, hashes: u32) -> Self {
        let bytes = num_bits.div_ceil(8) as usize;
        BloomFilter {
            bits: vec![0; bytes],
            num_bits: bytes as u64 * 8,
            hashes: hashes.max(1),
        }
    }

    pub fn from_bytes(bits: Vec<u8>, hashes: u32) -> Self {
        let num_bits = bits.len() as u64 * 8;
        BloomFilter {
            bits,
            num_bits: num_bits.max(1),
            hashes: hashes.max(1),
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn num_bits(&self) -> u64 {
        self.num_bits
    }

    pub fn hashes(&self) -> u32 {
        self.hashes
    }

    fn probes(&self, item: u64) -> impl Iterator<Item = u64> + '_ {
        let h = hash64(item);
        let h1 = h as u32 as u64;
        let h2 = (h >> 32) | 1;
        (0..self.hashes as u64).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % self.num_bits)
    }

    pub fn insert(&mut self, item: u64) {
        let positions: Vec<u64> = self.probes(item).collect();
        for p in positions {
            self.bits[(p / 8) as usize] |= 1 << (p % 8);
        }
    }

    pub fn may_contain(&self, item: u64) -> bool {
        if self.bits.is_empty() {
            return false;
        }
        self.probes(item)
            .all(|p| self.bits[(p / 8) as usize] & (1 << (p % 8)) != 0)
    }
}
