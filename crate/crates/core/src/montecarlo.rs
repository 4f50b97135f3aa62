//! Seeded simulation of the standardized sum and its Kolmogorov–Smirnov
//! distance to the standard normal.
//!
//! Randomness is counter-based: replicate `r` of a run seeded with `s` reads
//! ChaCha8 stream `r` of key `s`, and step `k` of the path consumes the
//! `k`-th 64-bit word of that stream. A path is therefore a pure function of
//! `(seed, replicate)` and the schedule of the worker pool does not matter.

use std::io::{Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::gordin::DEGENERATE_VAR;
use crate::markov::ChainSpec;
use crate::scheme::{expected_sum, variance_of_sum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Sorted `(S_n − E S_n) / √D(S_n)` values.
    pub samples: Vec<f64>,
    pub ks_distance: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Cumulative rows of the initial law and every kernel, for inverse-CDF draws.
struct Sampler {
    size: usize,
    initial: Vec<f64>,
    // kernel i (0-based), row x at [(i * size + x) * size ..][.. size]
    kernels: Vec<f64>,
}

fn cumulative(row: &[f64]) -> impl Iterator<Item = f64> + '_ {
    row.iter().scan(0.0, |acc, p| {
        *acc += p;
        Some(*acc)
    })
}

/// Smallest index whose cumulative mass exceeds `u`; the last state absorbs
/// rounding in the final cumulative entry.
fn invert(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Top 53 bits of a word as a uniform in `[0, 1)`.
fn unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl Sampler {
    fn new(chain: &ChainSpec) -> Self {
        let size = chain.size();
        let initial = cumulative(chain.initial().probs()).collect();
        let kernels = chain
            .kernels()
            .iter()
            .flat_map(|k| k.rows().flat_map(cumulative).collect::<Vec<_>>())
            .collect();
        Self {
            size,
            initial,
            kernels,
        }
    }

    fn stream(seed: u64, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replicate);
        rng
    }

    /// Walks one path, handing each visited `(step, state)` to `visit`.
    fn walk(&self, n: usize, seed: u64, replicate: u64, mut visit: impl FnMut(usize, usize)) {
        let mut rng = Self::stream(seed, replicate);
        let s = self.size;
        let mut x = invert(&self.initial, unit(rng.next_u64()));
        visit(0, x);
        for k in 1..n {
            let base = ((k - 1) * s + x) * s;
            x = invert(&self.kernels[base..base + s], unit(rng.next_u64()));
            visit(k, x);
        }
    }
}

/// Path `X_1, …, X_n` (0-based states) of replicate 0.
pub fn sample_path(chain: &ChainSpec, seed: u64) -> Vec<usize> {
    sample_path_replicate(chain, seed, 0)
}

pub fn sample_path_replicate(chain: &ChainSpec, seed: u64, replicate: u64) -> Vec<usize> {
    let mut path = Vec::with_capacity(chain.n());
    Sampler::new(chain).walk(chain.n(), seed, replicate, |_, x| path.push(x));
    path
}

/// Draws `replicates` independent standardized sums, standardizing with the
/// exact mean and variance of `S_n`.
pub fn sample_statistic(
    chain: &ChainSpec,
    replicates: usize,
    seed: u64,
) -> Result<SimulationResult> {
    if replicates == 0 {
        return Err(Error::input("replicates must be at least 1"));
    }
    let var = variance_of_sum(&chain.centered())?;
    if var <= DEGENERATE_VAR {
        return Err(Error::Degenerate(format!(
            "D(S_n) = {var:e} is too small to standardize"
        )));
    }
    let mean = expected_sum(chain);
    let scale = var.sqrt().recip();
    let sampler = Sampler::new(chain);
    let values: Vec<&[f64]> = chain.observables().iter().map(|f| f.values()).collect();
    let mut samples: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut sum = 0.0;
            sampler.walk(chain.n(), seed, r, |k, x| sum += values[k][x]);
            (sum - mean) * scale
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    let ks = ks_distance(&samples)?;
    let count = samples.len() as f64;
    let sample_mean = samples.iter().sum::<f64>() / count;
    let variance = if samples.len() > 1 {
        samples
            .iter()
            .map(|v| (v - sample_mean).powi(2))
            .sum::<f64>()
            / (count - 1.0)
    } else {
        0.0
    };
    Ok(SimulationResult {
        n: chain.n(),
        replicates,
        seed,
        samples,
        ks_distance: ks,
        mean: sample_mean,
        variance,
    })
}

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup_x |F_N(x) − Φ(x)|` for the empirical CDF of `samples`. Unsorted input
/// is sorted first.
pub fn ks_distance(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::input("KS distance of an empty sample"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::input("KS distance of a sample containing NaN"));
    }
    let sorted;
    let samples = if samples.is_sorted() {
        samples
    } else {
        let mut copy = samples.to_vec();
        copy.sort_by(f64::total_cmp);
        sorted = copy;
        &sorted
    };
    let total = samples.len() as f64;
    let d = samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let phi = normal_cdf(s);
            let above = (i + 1) as f64 / total - phi;
            let below = phi - i as f64 / total;
            above.abs().max(below.abs())
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// Raw dump: little-endian `u64` count followed by that many `f64`.
pub fn write_samples<W: Write>(samples: &[f64], mut w: W) -> Result<()> {
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    for s in samples {
        w.write_all(&s.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let count = u64::from_le_bytes(word);
    let mut out = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        r.read_exact(&mut word)?;
        out.push(f64::from_le_bytes(word));
    }
    Ok(out)
}
