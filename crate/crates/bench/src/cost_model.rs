//! Closed-form I/O costs per operation and strategy, without big-O
//! constants. Each cost is a sum of named terms so callers can inspect
//! which components a formula contains.
//!
//! All logarithms without an explicit base are taken base T.

use gloran::config::{parse_kv, Strategy};
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams<F> {
    /// N: entries in the LSM-tree.
    pub n: F,
    /// F: memtable capacity in entries.
    pub f: F,
    /// T: LSM size ratio.
    pub t: F,
    /// B: block size in bytes.
    pub b: F,
    /// k: key size in bytes.
    pub k: F,
    /// e: entry size in bytes.
    pub e: F,
    /// λ: entries per range delete; infinite when there are none.
    pub lambda: F,
    pub phi: F,
    pub eps: F,
    /// D: DR-tree fanout.
    pub d: F,
    /// F′: index write buffer capacity in records.
    pub f_idx: F,
    /// T′: index size ratio.
    pub t_idx: F,
    /// ℓ: keys per range delete, used by the per-key strategies.
    pub ell: F,
}

impl CostParams<f64> {
    pub fn baseline() -> Self {
        CostParams {
            n: 1e6,
            f: 4096.0,
            t: 10.0,
            b: 4096.0,
            k: 32.0,
            e: 64.0,
            lambda: 100.0,
            phi: 0.6185f64.powi(10),
            eps: 0.01,
            d: 10.0,
            f_idx: 256.0,
            t_idx: 10.0,
            ell: 128.0,
        }
    }

    /// Parse `key = value` lines; omitted keys keep [`Self::baseline`].
    /// `t_idx` follows `t` unless given.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut p = Self::baseline();
        let mut t_idx = None;
        for (line, key, value) in parse_kv(text).map_err(|e| e.to_string())? {
            let v: f64 = value
                .parse()
                .map_err(|e| format!("line {line}: `{key}`: {e}"))?;
            let slot = match key.as_str() {
                "n" | "N" => &mut p.n,
                "f" | "F" => &mut p.f,
                "t" | "T" => &mut p.t,
                "b" | "B" => &mut p.b,
                "k" => &mut p.k,
                "e" => &mut p.e,
                "lambda" => &mut p.lambda,
                "phi" => &mut p.phi,
                "eps" | "epsilon" => &mut p.eps,
                "d" | "D" => &mut p.d,
                "f_idx" => &mut p.f_idx,
                "t_idx" => {
                    t_idx = Some(v);
                    continue;
                }
                "ell" => &mut p.ell,
                _ => return Err(format!("line {line}: unknown parameter `{key}`")),
            };
            *slot = v;
        }
        p.t_idx = t_idx.unwrap_or(p.t);
        let positive = [
            p.n, p.f, p.t, p.b, p.k, p.e, p.lambda, p.d, p.f_idx, p.t_idx, p.ell,
        ];
        if positive.iter().any(|v| v.is_nan() || *v <= 0.0) || p.phi < 0.0 || p.eps < 0.0 {
            return Err("parameters must be positive (phi and eps non-negative)".into());
        }
        if p.t <= 1.0 || p.t_idx <= 1.0 || p.d <= 1.0 {
            return Err("T, T′ and D must exceed 1".into());
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostOp {
    Update,
    RangeDelete,
    /// Lookup of a key with a valid entry.
    LookupValid,
    /// Lookup of a key absent from the tree.
    LookupAbsent,
    /// Lookup of a key whose entry is range-deleted but not yet purged.
    LookupObsolete,
}

impl CostOp {
    pub const ALL: [CostOp; 5] = [
        CostOp::Update,
        CostOp::RangeDelete,
        CostOp::LookupValid,
        CostOp::LookupAbsent,
        CostOp::LookupObsolete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostOp::Update => "update",
            CostOp::RangeDelete => "range_delete",
            CostOp::LookupValid => "lookup_v",
            CostOp::LookupAbsent => "lookup_n",
            CostOp::LookupObsolete => "lookup_o",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term<F> {
    pub name: &'static str,
    pub value: F,
}

/// A cost as a sum of named terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Cost<F> {
    pub terms: Vec<Term<F>>,
}

impl<F: Float> Cost<F> {
    fn of(terms: &[(&'static str, F)]) -> Self {
        Cost {
            terms: terms
                .iter()
                .map(|&(name, value)| Term { name, value })
                .collect(),
        }
    }

    pub fn total(&self) -> F {
        self.terms.iter().fold(F::zero(), |acc, t| acc + t.value)
    }

    pub fn term(&self, name: &str) -> Option<F> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn has(&self, name: &str) -> bool {
        self.term(name).is_some()
    }
}

/// Term names used in [`Cost`] breakdowns.
pub mod terms {
    /// Compaction rewrites of entries or keys: T·L·(size/B).
    pub const COMPACTION: &str = "compaction";
    /// Sequential tombstone block scan: (N/λ)·(k/B).
    pub const TOMBSTONE_SCAN: &str = "tombstone_scan";
    /// One tombstone block access per level: L.
    pub const TOMBSTONE_PROBE: &str = "tombstone_probe";
    /// Data blocks fetched on Bloom false positives: φ·L.
    pub const BLOOM: &str = "bloom";
    /// ⌈φ·L⌉: data block fetches when the key exists.
    pub const DATA: &str = "data";
    /// Final data block of a valid key.
    pub const FETCH: &str = "fetch";
    /// Global index node accesses.
    pub const INDEX: &str = "index";
    /// Per-key work of decomposed range deletes.
    pub const PER_KEY: &str = "per_key";
}

pub struct CostModel<F> {
    pub p: CostParams<F>,
}

pub type CostModelF64 = CostModel<f64>;

impl<F: Float> CostModel<F> {
    pub fn new(p: CostParams<F>) -> Self {
        CostModel { p }
    }

    fn c(v: f64) -> F {
        F::from(v).unwrap()
    }

    /// L = log_T(N/F), at least one level.
    pub fn levels(&self) -> F {
        (self.p.n / self.p.f).log(self.p.t).max(F::one())
    }

    /// Q = N/λ range records.
    pub fn records(&self) -> F {
        self.p.n / self.p.lambda
    }

    /// L′: index levels needed for Q records, zero when there are none.
    pub fn index_levels(&self) -> usize {
        let q = self.records();
        if q < F::one() {
            return 0;
        }
        let l = (q / self.p.f_idx).log(self.p.t_idx).ceil();
        l.to_usize().unwrap_or(0).max(1)
    }

    /// Q_i = F′·T′^i, capped at Q.
    pub fn level_records(&self, i: usize) -> F {
        (self.p.f_idx * self.p.t_idx.powi(i as i32)).min(self.records())
    }

    /// Σ_{i≤L′} (log_D Q_i + 1): node accesses of one index check.
    pub fn index_check(&self) -> F {
        (1..=self.index_levels()).fold(F::zero(), |acc, i| {
            acc + self.level_records(i).log(self.p.d).max(F::zero()) + F::one()
        })
    }

    /// (D/(D−1))·2Q_i: node bound for a DR-tree over Q_i records.
    pub fn node_bound(&self, q_i: F) -> F {
        let d = self.p.d;
        d / (d - F::one()) * Self::c(2.0) * q_i
    }

    /// (k/B)·T′·log_T′(Q/F′): amortized index write blocks per range delete,
    /// with at least one level.
    pub fn index_write_per_record(&self) -> F {
        let p = &self.p;
        let levels = (self.records() / p.f_idx).log(p.t_idx).max(F::one());
        p.k / p.b * p.t_idx * levels
    }

    pub fn cost(&self, strategy: Strategy, op: CostOp) -> Cost<F> {
        use terms::*;
        let p = &self.p;
        let l = self.levels();
        let phi_l = p.phi * l;
        let tombstone = p.k / p.b * p.t * l;
        match (strategy, op) {
            (_, CostOp::Update) => Cost::of(&[(COMPACTION, p.t * l * p.e / p.b)]),

            (Strategy::Lrr, CostOp::RangeDelete) => Cost::of(&[(COMPACTION, tombstone)]),
            (Strategy::Lrr, lookup) => {
                let mut c = Cost::of(&[
                    (TOMBSTONE_SCAN, self.records() * p.k / p.b),
                    (TOMBSTONE_PROBE, l),
                    (BLOOM, phi_l),
                ]);
                if lookup == CostOp::LookupValid {
                    c.terms.push(Term {
                        name: FETCH,
                        value: F::one(),
                    });
                }
                c
            }

            (Strategy::Gloran, CostOp::RangeDelete) => {
                Cost::of(&[(COMPACTION, self.index_write_per_record())])
            }
            (Strategy::Gloran, CostOp::LookupAbsent) => Cost::of(&[(BLOOM, phi_l)]),
            (Strategy::Gloran, CostOp::LookupValid) => {
                Cost::of(&[(INDEX, p.eps * self.index_check()), (DATA, phi_l.ceil())])
            }
            (Strategy::Gloran, CostOp::LookupObsolete) => {
                Cost::of(&[(INDEX, self.index_check()), (DATA, phi_l.ceil())])
            }

            // Per-key strategies hold only point tombstones.
            (_, CostOp::LookupAbsent) => Cost::of(&[(BLOOM, phi_l)]),
            (_, CostOp::LookupValid | CostOp::LookupObsolete) => {
                Cost::of(&[(DATA, phi_l.ceil().max(F::one()))])
            }
            (Strategy::Decomp, CostOp::RangeDelete) => Cost::of(&[(COMPACTION, p.ell * tombstone)]),
            (Strategy::LookupDelete, CostOp::RangeDelete) => Cost::of(&[
                (PER_KEY, p.ell * phi_l.ceil()),
                (COMPACTION, p.ell * tombstone),
            ]),
            (Strategy::ScanDelete, CostOp::RangeDelete) => Cost::of(&[
                (PER_KEY, l + p.ell * p.e / p.b),
                (COMPACTION, p.ell * tombstone),
            ]),
        }
    }
}

/// Least-squares scale `c` minimizing Σ (measured − c·predicted)²; the
/// big-O constant fitted to observations.
pub fn fit_scale<F: Float>(measured: &[F], predicted: &[F]) -> F {
    let (num, den) = measured
        .iter()
        .zip(predicted)
        .fold((F::zero(), F::zero()), |(n, d), (&m, &p)| {
            (n + m * p, d + p * p)
        });
    if den == F::zero() {
        F::zero()
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<F> {
    pub slope: F,
    pub intercept: F,
    pub r2: F,
}

impl<F: Float> LinearFit<F> {
    pub fn predict(&self, x: F) -> F {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares `y = slope·x + intercept` with its R².
pub fn linear_fit<F: Float>(xs: &[F], ys: &[F]) -> LinearFit<F> {
    let n = F::from(xs.len()).unwrap();
    let mean = |v: &[F]| v.iter().fold(F::zero(), |a, &b| a + b) / n;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
        syy = syy + (y - my) * (y - my);
    }
    let slope = if sxx == F::zero() {
        F::zero()
    } else {
        sxy / sxx
    };
    let intercept = my - slope * mx;
    let r2 = if syy == F::zero() {
        F::one()
    } else {
        sxy * sxy / (sxx * syy)
    };
    LinearFit {
        slope,
        intercept,
        r2,
    }
}
