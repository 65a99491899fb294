//! Sharded, seeded Monte Carlo estimation of small-integer statistics.
//!
//! Samples are grouped into fixed blocks of [`BLOCK_SIZE`]. Block `k` of lane
//! `ℓ` draws from `RngStream::derived(seed, (ℓ << 40) | k)`: the ChaCha8 key
//! comes from `seed` and the stream id from the lane and block index. Shards
//! are contiguous runs of blocks. Per-sample values are small integers
//! (`±1` outcomes, `0/1` verdicts), accumulated exactly in integer tallies,
//! so the merged result is the same bit pattern for every shard count and
//! thread schedule.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_direction, Direction, RngStream};
use crate::models::{sign_model_outputs, tb_round};

pub const BLOCK_SIZE: u64 = 1 << 14;
const LANE_SHIFT: u32 = 40;

/// Monte Carlo mean with its standard error.
///
/// `stderr` is the standard deviation of the sample (normalized by `n`)
/// divided by `√n`; at most `1/√n` for `±1` statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
}

impl Estimate {
    /// A known value carried through the same reporting path.
    pub fn exact(value: f64) -> Self {
        Self { mean: value, stderr: 0.0, n: 1, seed: 0 }
    }
}

/// Exact running sums for one statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub n: u64,
    pub sum: i128,
    pub sum_sq: u128,
}

impl Tally {
    #[inline]
    pub fn push(&mut self, v: i64) {
        self.n += 1;
        self.sum += v as i128;
        self.sum_sq += (v as i128 * v as i128) as u128;
    }

    pub fn merge(&mut self, other: &Tally) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn estimate(&self, seed: u64) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum as f64 / n;
        // n²·variance as an exact integer
        let scaled = self.n as i128 * self.sum_sq as i128 - self.sum * self.sum;
        let var = scaled.max(0) as f64 / (n * n);
        Estimate { mean, stderr: (var / n).sqrt(), n: self.n, seed }
    }
}

/// Sample count, seed and shard count for one estimation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOptions {
    pub n: u64,
    pub seed: u64,
    pub shards: usize,
}

impl McOptions {
    pub fn new(n: u64, seed: u64) -> Self {
        Self { n, seed, shards: 1 }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if self.shards == 0 || self.shards as u64 > self.n {
            return Err(Error::InvalidArgument(format!("shard count must be in 1..={}, got {}", self.n, self.shards)));
        }
        if self.n.div_ceil(BLOCK_SIZE) >= 1 << LANE_SHIFT {
            return Err(Error::InvalidArgument("sample count too large".into()));
        }
        Ok(())
    }
}

/// Stream id of block `block` on lane `lane`.
pub fn block_stream(lane: u32, block: u64) -> u64 {
    ((lane as u64) << LANE_SHIFT) | block
}

/// Runs `kernel` once per sample, writing `dim` integer values per call.
pub fn run_tallies<F>(opts: McOptions, lane: u32, dim: usize, kernel: F) -> Result<Vec<Tally>>
where
    F: Fn(&mut RngStream, &mut [i64]) + Sync,
{
    opts.validate()?;
    let blocks = opts.n.div_ceil(BLOCK_SIZE);
    let shards = opts.shards as u64;
    let per_shard: Vec<Vec<Tally>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let first = blocks * s / shards;
            let last = blocks * (s + 1) / shards;
            let mut tallies = vec![Tally::default(); dim];
            let mut out = vec![0i64; dim];
            for block in first..last {
                let mut rng = RngStream::derived(opts.seed, block_stream(lane, block));
                let start = block * BLOCK_SIZE;
                let end = (start + BLOCK_SIZE).min(opts.n);
                for _ in start..end {
                    kernel(&mut rng, &mut out);
                    for (t, &v) in tallies.iter_mut().zip(&out) {
                        t.push(v);
                    }
                }
            }
            tallies
        })
        .collect();
    let mut merged = vec![Tally::default(); dim];
    for shard in &per_shard {
        for (m, t) in merged.iter_mut().zip(shard) {
            m.merge(t);
        }
    }
    Ok(merged)
}

/// Single-statistic convenience wrapper around [`run_tallies`].
pub fn estimate_with<F>(opts: McOptions, lane: u32, kernel: F) -> Result<Estimate>
where
    F: Fn(&mut RngStream) -> i64 + Sync,
{
    let tallies = run_tallies(opts, lane, 1, |rng, out| out[0] = kernel(rng))?;
    Ok(tallies[0].estimate(opts.seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// One-bit communication protocol.
    Tb,
    /// Local sign model on the sphere.
    Lhv,
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tb" => Ok(ModelKind::Tb),
            "lhv" => Ok(ModelKind::Lhv),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// `α·β`
    Product,
    Alice,
    Bob,
    /// The communicated bit (protocol model only).
    CommBit,
    /// Constant 1.
    One,
}

impl FromStr for StatisticKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(StatisticKind::Product),
            "alice" => Ok(StatisticKind::Alice),
            "bob" => Ok(StatisticKind::Bob),
            "comm_bit" => Ok(StatisticKind::CommBit),
            "one" => Ok(StatisticKind::One),
            other => Err(Error::Config(format!("unknown statistic {other:?}"))),
        }
    }
}

/// Everything needed to reproduce an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: ModelKind,
    pub statistic: StatisticKind,
    pub a: Direction<f64>,
    pub b: Direction<f64>,
    pub n: u64,
    pub seed: u64,
    pub shards: usize,
}

impl ExperimentSpec {
    /// Builds a spec from textual identifiers.
    pub fn parse(model: &str, statistic: &str, a: Direction<f64>, b: Direction<f64>, opts: McOptions) -> Result<Self> {
        Ok(Self {
            model: model.parse()?,
            statistic: statistic.parse()?,
            a,
            b,
            n: opts.n,
            seed: opts.seed,
            shards: opts.shards,
        })
    }

    pub fn options(&self) -> McOptions {
        McOptions { n: self.n, seed: self.seed, shards: self.shards }
    }
}

pub fn estimate(spec: &ExperimentSpec) -> Result<Estimate> {
    let (a, b) = (spec.a, spec.b);
    let opts = spec.options();
    let stat = spec.statistic;
    match spec.model {
        ModelKind::Tb => estimate_with(opts, 0, move |rng| {
            let t = tb_round(&a, &b, rng);
            match stat {
                StatisticKind::Product => t.product().as_i8() as i64,
                StatisticKind::Alice => t.alice_out.as_i8() as i64,
                StatisticKind::Bob => t.bob_out.as_i8() as i64,
                StatisticKind::CommBit => t.comm_bit.as_i8() as i64,
                StatisticKind::One => 1,
            }
        }),
        ModelKind::Lhv => {
            if stat == StatisticKind::CommBit {
                return Err(Error::Config("the lhv model has no communicated bit".into()));
            }
            estimate_with(opts, 0, move |rng| {
                let lambda: Direction<f64> = sample_direction(rng);
                let (x, y) = sign_model_outputs(&a, &b, &lambda);
                match stat {
                    StatisticKind::Product => (x * y).as_i8() as i64,
                    StatisticKind::Alice => x.as_i8() as i64,
                    StatisticKind::Bob => y.as_i8() as i64,
                    StatisticKind::One => 1,
                    StatisticKind::CommBit => unreachable!(),
                }
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    Sum,
    Difference,
}

/// Combines estimates of independent statistics; errors add in quadrature.
///
/// The result carries the smaller sample count and the left operand's seed.
pub fn combine(e1: &Estimate, e2: &Estimate, op: CombineOp) -> Estimate {
    let mean = match op {
        CombineOp::Sum => e1.mean + e2.mean,
        CombineOp::Difference => e1.mean - e2.mean,
    };
    Estimate { mean, stderr: e1.stderr.hypot(e2.stderr), n: e1.n.min(e2.n), seed: e1.seed }
}

/// Floor on the standard error used by [`pass_fail`] so zero-variance
/// statistics still get a tolerance.
pub const STDERR_FLOOR: f64 = 1e-12;

pub fn pass_fail(e: &Estimate, target: f64, k_sigma: f64) -> bool {
    (e.mean - target).abs() <= k_sigma * e.stderr.max(STDERR_FLOOR)
}
