//! Trace replay with latency and I/O capture, optionally checked against
//! the shadow oracle.

use std::time::Instant;

use gloran::device::IoSnapshot;
use gloran::engine::{ReadOutcome, Store};
use gloran::error::Result;
use gloran::oracle::{OracleValue, ShadowOracle};
use gloran::trace::Operation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Update,
    PointLookup,
    PointDelete,
    RangeDelete,
    RangeLookup,
}

impl OpKind {
    pub const ALL: [OpKind; 5] = [
        OpKind::Update,
        OpKind::PointLookup,
        OpKind::PointDelete,
        OpKind::RangeDelete,
        OpKind::RangeLookup,
    ];

    pub fn of(op: &Operation) -> OpKind {
        match op {
            Operation::Put { .. } => OpKind::Update,
            Operation::Get { .. } => OpKind::PointLookup,
            Operation::Delete { .. } => OpKind::PointDelete,
            Operation::RangeDelete { .. } => OpKind::RangeDelete,
            Operation::Scan { .. } => OpKind::RangeLookup,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Update => "update",
            OpKind::PointLookup => "point_lookup",
            OpKind::PointDelete => "point_delete",
            OpKind::RangeDelete => "range_delete",
            OpKind::RangeLookup => "range_lookup",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LatencySummary {
    pub count: u64,
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p95_ns: u64,
    pub p99_ns: u64,
}

impl LatencySummary {
    pub fn from_samples(samples: &mut [u64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        samples.sort_unstable();
        let pct = |p: f64| samples[((samples.len() - 1) as f64 * p).round() as usize];
        LatencySummary {
            count: samples.len() as u64,
            mean_ns: samples.iter().sum::<u64>() as f64 / samples.len() as f64,
            p50_ns: pct(0.50),
            p95_ns: pct(0.95),
            p99_ns: pct(0.99),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KindMetrics {
    pub latency: LatencySummary,
    /// I/O charged while operations of this kind ran, compactions included.
    pub io: IoSnapshot,
}

impl KindMetrics {
    pub fn per_op(&self, count: u64) -> f64 {
        if self.latency.count == 0 {
            0.0
        } else {
            count as f64 / self.latency.count as f64
        }
    }
}

/// Global-index counters, present for GLORAN stores only.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IndexMetrics {
    pub levels: u64,
    pub leaf_count: u64,
    pub node_count: u64,
    pub records_inserted: u64,
    pub trees_built: u64,
    pub checks: u64,
    pub check_hits: u64,
    pub check_node_accesses: u64,
    pub max_check_node_accesses: u64,
    pub check_bound: u64,
    pub height_violations: u64,
    pub check_bound_violations: u64,
    pub node_bound_violations: u64,
    pub gc_purged_leaves: u64,
    pub purged_entries: u64,
    pub eve_queries: u64,
    pub eve_short_circuits: u64,
    pub eve_epochs: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub strategy: String,
    pub ops: u64,
    pub elapsed_ns: u64,
    pub kinds: [KindMetrics; 5],
    pub io: IoSnapshot,
    /// Measured Bloom false positive rate φ, if any filter said "maybe" or "no".
    pub phi: Option<f64>,
    /// Measured estimator false positive rate ε over valid entries.
    pub epsilon: Option<f64>,
    pub rt_probes: u64,
    pub rt_records_examined: u64,
    pub flushes: u64,
    pub compactions: u64,
    pub disk_bytes: u64,
    /// Entries resident in the LSM-tree at the end of the run.
    pub entries: u64,
    pub levels: u64,
    pub index: Option<IndexMetrics>,
    /// Keys spanned by all range deletes, for the mean length ℓ.
    pub range_delete_keys: u64,
    /// Reads whose result disagreed with the oracle; `None` without verify.
    pub mismatches: Option<u64>,
}

impl Metrics {
    pub fn kind(&self, k: OpKind) -> &KindMetrics {
        &self.kinds[k.index()]
    }

    pub fn count(&self, k: OpKind) -> u64 {
        self.kind(k).latency.count
    }

    pub fn throughput(&self) -> f64 {
        if self.elapsed_ns == 0 {
            0.0
        } else {
            self.ops as f64 * 1e9 / self.elapsed_ns as f64
        }
    }
}

/// Counter values captured before a run so metrics cover only the run.
struct Baseline {
    io: IoSnapshot,
    bloom_neg: u64,
    bloom_fp: u64,
    rt_probes: u64,
    rt_records: u64,
    flushes: u64,
    compactions: u64,
    checks: u64,
    hits: u64,
    node_accesses: u64,
    eve_queries: u64,
    short_circuits: u64,
}

impl Baseline {
    fn take(store: &Store) -> Self {
        let s = store.lsm().stats();
        let (checks, hits, node_accesses, eve_queries, short_circuits) =
            store.gloran().map_or((0, 0, 0, 0, 0), |g| {
                let i = g.index().stats();
                (
                    i.checks,
                    i.check_hits,
                    i.check_node_accesses,
                    g.eve().stats().queries,
                    g.stats().short_circuits,
                )
            });
        Baseline {
            io: store.io(),
            bloom_neg: s.bloom.negatives,
            bloom_fp: s.bloom.false_positives,
            rt_probes: s.rt_probes,
            rt_records: s.rt_records_examined,
            flushes: s.flushes,
            compactions: s.compactions,
            checks,
            hits,
            node_accesses,
            eve_queries,
            short_circuits,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Replays operations against a store, accumulating [`Metrics`].
pub struct Runner<'a> {
    store: &'a mut Store,
    oracle: Option<ShadowOracle>,
    samples: [Vec<u64>; 5],
    io: [IoSnapshot; 5],
    mismatches: u64,
    range_delete_keys: u64,
    ops: u64,
    elapsed_ns: u64,
    base: Baseline,
}

impl<'a> Runner<'a> {
    /// With `oracle`, every read is checked; the oracle must already reflect
    /// the store's contents.
    pub fn new(store: &'a mut Store, oracle: Option<ShadowOracle>) -> Self {
        let base = Baseline::take(store);
        Runner {
            store,
            oracle,
            samples: Default::default(),
            io: Default::default(),
            mismatches: 0,
            range_delete_keys: 0,
            ops: 0,
            elapsed_ns: 0,
            base,
        }
    }

    pub fn store(&mut self) -> &mut Store {
        self.store
    }

    pub fn oracle(&self) -> Option<&ShadowOracle> {
        self.oracle.as_ref()
    }

    pub fn apply(&mut self, op: &Operation) -> Result<()> {
        let kind = OpKind::of(op).index();
        if let Operation::RangeDelete { lo, hi } = op {
            self.range_delete_keys += hi.saturating_sub(*lo);
        }
        let before = self.store.io();
        let start = Instant::now();
        let outcome = self.store.apply(op)?;
        let ns = start.elapsed().as_nanos() as u64;
        self.io[kind] = self.io[kind] + (self.store.io() - before);
        self.samples[kind].push(ns);
        self.elapsed_ns += ns;
        self.ops += 1;

        let Some(oracle) = &mut self.oracle else {
            return Ok(());
        };
        if op.is_mutation() {
            oracle.apply(op);
            return Ok(());
        }
        let width = self.store.config().value_width();
        let pad = |mut v: Vec<u8>| {
            v.resize(width, 0);
            v
        };
        let ok = match (outcome, op) {
            (Some(ReadOutcome::Get(got)), Operation::Get { key }) => {
                let want = match oracle.get(*key) {
                    OracleValue::Value(v) => Some(pad(v)),
                    OracleValue::NotFound => None,
                };
                got == want
            }
            (Some(ReadOutcome::Scan(got)), Operation::Scan { lo, hi }) => {
                let want = oracle.scan(*lo, *hi);
                got.len() == want.len()
                    && got
                        .into_iter()
                        .zip(want)
                        .all(|(g, (k, v))| g.0 == k && g.1 == pad(v))
            }
            _ => false,
        };
        if !ok {
            self.mismatches += 1;
        }
        Ok(())
    }

    pub fn run(&mut self, ops: &[Operation]) -> Result<()> {
        ops.iter().try_for_each(|op| self.apply(op))
    }

    /// Metrics for everything applied since construction.
    pub fn metrics(&mut self) -> Result<Metrics> {
        let store = &*self.store;
        let lsm = store.lsm();
        let s = lsm.stats();
        let b = &self.base;
        let mut kinds = [KindMetrics::default(); 5];
        for (i, k) in kinds.iter_mut().enumerate() {
            k.latency = LatencySummary::from_samples(&mut self.samples[i]);
            k.io = self.io[i];
        }
        let neg = s.bloom.negatives - b.bloom_neg;
        let fp = s.bloom.false_positives - b.bloom_fp;

        let (epsilon, index) = match store.gloran() {
            None => (None, None),
            Some(g) => {
                let i = g.index().stats();
                let gs = g.stats();
                let checks = i.checks - b.checks;
                let false_alarms = checks - (i.check_hits - b.hits);
                let valid_probes = (gs.short_circuits - b.short_circuits) + false_alarms;
                let m = IndexMetrics {
                    levels: g.index().depth() as u64,
                    leaf_count: g.index().leaf_count(),
                    node_count: g.index().node_count(),
                    records_inserted: i.records_inserted,
                    trees_built: i.trees_built,
                    checks,
                    check_hits: i.check_hits - b.hits,
                    check_node_accesses: i.check_node_accesses - b.node_accesses,
                    max_check_node_accesses: i.max_check_node_accesses,
                    check_bound: g.index().check_bound(),
                    height_violations: i.height_violations,
                    check_bound_violations: i.check_bound_violations,
                    node_bound_violations: i.node_bound_violations,
                    gc_purged_leaves: gs.gc_purged_leaves,
                    purged_entries: gs.purged_entries,
                    eve_queries: g.eve().stats().queries - b.eve_queries,
                    eve_short_circuits: gs.short_circuits - b.short_circuits,
                    eve_epochs: g.eve().chain().len() as u64,
                };
                (ratio(false_alarms, valid_probes), Some(m))
            }
        };
        let entries =
            lsm.memtable().entry_count() as u64 + lsm.runs().map(|r| r.entry_count()).sum::<u64>();
        Ok(Metrics {
            strategy: store.strategy().to_string(),
            ops: self.ops,
            elapsed_ns: self.elapsed_ns,
            kinds,
            io: store.io() - b.io,
            phi: ratio(fp, fp + neg),
            epsilon,
            rt_probes: s.rt_probes - b.rt_probes,
            rt_records_examined: s.rt_records_examined - b.rt_records,
            flushes: s.flushes - b.flushes,
            compactions: s.compactions - b.compactions,
            disk_bytes: store.device().disk_bytes()?,
            entries,
            levels: lsm.depth() as u64,
            index,
            range_delete_keys: self.range_delete_keys,
            mismatches: self.oracle.as_ref().map(|_| self.mismatches),
        })
    }
}

/// Replay `ops` on `store` from its current state.
pub fn run_trace(store: &mut Store, ops: &[Operation], verify: bool) -> Result<Metrics> {
    let mut runner = Runner::new(store, verify.then(ShadowOracle::new));
    runner.run(ops)?;
    runner.metrics()
}
