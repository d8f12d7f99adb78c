//! Workload specs and the deterministic trace generator.
//!
//! Spec files use the same `key = value` layout as store configs:
//!
//! ```text
//! op_count = 100000
//! update = 0.5
//! point_lookup = 0.4
//! range_delete = 0.1
//! range_delete_length = 128
//! distribution = zipfian
//! universe = 1048576
//! seed = 7
//! ```

use std::fmt;
use std::str::FromStr;

use gloran::config::parse_kv;
use gloran::trace::Operation;
use gloran::types::Key;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Format(#[from] gloran::error::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeyDistribution {
    Uniform,
    Zipfian { theta: f64 },
}

impl fmt::Display for KeyDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyDistribution::Uniform => f.write_str("uniform"),
            KeyDistribution::Zipfian { .. } => f.write_str("zipfian"),
        }
    }
}

/// Operation mix as fractions of `op_count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mix {
    pub update: f64,
    pub point_lookup: f64,
    pub range_delete: f64,
    pub range_lookup: f64,
    pub point_delete: f64,
}

impl Mix {
    pub fn new(update: f64, point_lookup: f64, range_delete: f64, range_lookup: f64) -> Self {
        Mix {
            update,
            point_lookup,
            range_delete,
            range_lookup,
            point_delete: 0.0,
        }
    }

    fn fractions(&self) -> [f64; 5] {
        [
            self.update,
            self.point_lookup,
            self.range_delete,
            self.range_lookup,
            self.point_delete,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub op_count: u64,
    pub mix: Mix,
    /// ℓ: keys covered by each range delete.
    pub range_delete_length: u64,
    pub range_lookup_length: u64,
    pub distribution: KeyDistribution,
    pub universe: u64,
    pub seed: u64,
    pub value_size: usize,
    /// Distinct keys written before the mixed phase, drawn uniformly.
    pub preload: u64,
}

pub const DEFAULT_THETA: f64 = 0.99;

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            op_count: 100_000,
            mix: Mix::new(0.5, 0.4, 0.1, 0.0),
            range_delete_length: 128,
            range_lookup_length: 64,
            distribution: KeyDistribution::Uniform,
            universe: 1 << 20,
            seed: 1,
            value_size: 8,
            preload: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let fr = self.mix.fractions();
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(SpecError::Invalid("fractions must lie in [0, 1]".into()));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SpecError::Invalid(format!("fractions sum to {sum}, not 1")));
        }
        if self.range_delete_length < 1 || self.range_lookup_length < 1 {
            return Err(SpecError::Invalid("range lengths must be >= 1".into()));
        }
        if self.universe < 2 || !self.universe.is_power_of_two() {
            return Err(SpecError::Invalid("universe must be a power of two".into()));
        }
        if self.range_delete_length > self.universe || self.range_lookup_length > self.universe {
            return Err(SpecError::Invalid(
                "range length exceeds the universe".into(),
            ));
        }
        if self.preload > self.universe {
            return Err(SpecError::Invalid("preload exceeds the universe".into()));
        }
        if let KeyDistribution::Zipfian { theta } = self.distribution {
            if theta.is_nan() || theta <= 0.0 {
                return Err(SpecError::Invalid("zipf theta must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let mut spec = WorkloadSpec::default();
        let mut theta = DEFAULT_THETA;
        let mut zipf = false;
        for (line, key, value) in parse_kv(text)? {
            let bad = |r: String| SpecError::Line { line, reason: r };
            macro_rules! num {
                () => {
                    value.parse().map_err(|e| bad(format!("`{key}`: {e}")))?
                };
            }
            match key.as_str() {
                "op_count" => spec.op_count = num!(),
                "update" => spec.mix.update = num!(),
                "point_lookup" => spec.mix.point_lookup = num!(),
                "range_delete" => spec.mix.range_delete = num!(),
                "range_lookup" => spec.mix.range_lookup = num!(),
                "point_delete" => spec.mix.point_delete = num!(),
                "range_delete_length" => spec.range_delete_length = num!(),
                "range_lookup_length" => spec.range_lookup_length = num!(),
                "universe" => spec.universe = num!(),
                "seed" => spec.seed = num!(),
                "value_size" => spec.value_size = num!(),
                "preload" => spec.preload = num!(),
                "zipf_theta" => theta = num!(),
                "distribution" => {
                    zipf = match value.to_ascii_lowercase().as_str() {
                        "uniform" => false,
                        "zipfian" | "zipf" => true,
                        _ => return Err(bad(format!("unknown distribution `{value}`"))),
                    }
                }
                _ => return Err(bad(format!("unknown setting `{key}`"))),
            }
        }
        if zipf {
            spec.distribution = KeyDistribution::Zipfian { theta };
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let m = &self.mix;
        let mut s = format!(
            "op_count = {}\nupdate = {}\npoint_lookup = {}\nrange_delete = {}\n\
             range_lookup = {}\npoint_delete = {}\nrange_delete_length = {}\n\
             range_lookup_length = {}\ndistribution = {}\nuniverse = {}\nseed = {}\n\
             value_size = {}\npreload = {}\n",
            self.op_count,
            m.update,
            m.point_lookup,
            m.range_delete,
            m.range_lookup,
            m.point_delete,
            self.range_delete_length,
            self.range_lookup_length,
            self.distribution,
            self.universe,
            self.seed,
            self.value_size,
            self.preload,
        );
        if let KeyDistribution::Zipfian { theta } = self.distribution {
            s += &format!("zipf_theta = {theta}\n");
        }
        s
    }
}

impl FromStr for WorkloadSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        WorkloadSpec::parse(s)
    }
}

/// Bijection on `[0, universe)` that scatters zipf ranks so hot keys are
/// not clustered at the low end.
#[derive(Debug, Clone, Copy)]
struct Scatter {
    mask: u64,
}

impl Scatter {
    const MUL: u64 = 0x9E37_79B9_7F4A_7C15;

    fn apply(&self, rank: u64) -> Key {
        rank.wrapping_mul(Self::MUL)
            .wrapping_add(0x632B_E59B_D9B4_E019)
            & self.mask
    }
}

enum KeySampler {
    Uniform(u64),
    Zipf(Zipf<f64>, Scatter),
}

impl KeySampler {
    fn new(spec: &WorkloadSpec) -> Self {
        match spec.distribution {
            KeyDistribution::Uniform => KeySampler::Uniform(spec.universe),
            KeyDistribution::Zipfian { theta } => KeySampler::Zipf(
                Zipf::new(spec.universe as f64, theta).expect("validated parameters"),
                Scatter {
                    mask: spec.universe - 1,
                },
            ),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Key {
        match self {
            KeySampler::Uniform(u) => rng.random_range(0..*u),
            KeySampler::Zipf(z, s) => s.apply(z.sample(rng) as u64 - 1),
        }
    }
}

/// Deterministic trace for `spec`: preload puts, then the mixed phase.
pub fn generate(spec: &WorkloadSpec) -> Result<Vec<Operation>, SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sampler = KeySampler::new(spec);
    let mut ops = Vec::with_capacity((spec.preload + spec.op_count) as usize);

    let mut seq = 0u64;
    let mut value = |rng: &mut ChaCha8Rng| {
        seq += 1;
        let mut v = seq.to_be_bytes().to_vec();
        v.resize(spec.value_size, 0);
        if spec.value_size > 8 {
            rng.fill(&mut v[8..]);
        }
        v
    };

    if let Some(step) = spec.universe.checked_div(spec.preload) {
        let pre = Scatter {
            mask: spec.universe - 1,
        };
        for i in 0..spec.preload {
            // Evenly spaced ranks scattered by an odd-multiplier bijection.
            let key = pre.apply(i * step + rng.random_range(0..step));
            ops.push(Operation::Put {
                key,
                value: value(&mut rng),
            });
        }
    }

    let cumulative: Vec<f64> = spec
        .mix
        .fractions()
        .iter()
        .scan(0.0, |acc, f| {
            *acc += f;
            Some(*acc)
        })
        .collect();
    let clamp_lo = |lo: Key, len: u64| lo.min(spec.universe - len);
    for _ in 0..spec.op_count {
        let r: f64 = rng.random();
        // Rounding slack past the final sum falls back to the last kind in use.
        let kind = cumulative.iter().position(|c| r < *c).unwrap_or(4);
        let kind = last_nonzero(&spec.mix.fractions(), kind);
        let op = match kind {
            0 => Operation::Put {
                key: sampler.sample(&mut rng),
                value: value(&mut rng),
            },
            1 => Operation::Get {
                key: sampler.sample(&mut rng),
            },
            2 => {
                let lo = clamp_lo(sampler.sample(&mut rng), spec.range_delete_length);
                Operation::RangeDelete {
                    lo,
                    hi: lo + spec.range_delete_length,
                }
            }
            3 => {
                let lo = clamp_lo(sampler.sample(&mut rng), spec.range_lookup_length);
                Operation::Scan {
                    lo,
                    hi: lo + spec.range_lookup_length,
                }
            }
            _ => Operation::Delete {
                key: sampler.sample(&mut rng),
            },
        };
        ops.push(op);
    }
    Ok(ops)
}

/// Step back from `kind` to the nearest kind with a nonzero fraction.
fn last_nonzero(fractions: &[f64; 5], kind: usize) -> usize {
    (0..=kind)
        .rev()
        .find(|&i| fractions[i] > 0.0)
        .unwrap_or(kind)
}
