//! Reproducible random streams and the small set of statistical tests the
//! verification suites need.
//!
//! Every random quantity in the crate is drawn from a stream keyed by
//! (seed, replicate index, stream name). Stream derivation is counter based:
//! the key material is mixed into a ChaCha8 seed with splitmix64 steps, so
//! the same triple yields the same stream on every platform and regardless of
//! how replicates are scheduled across worker threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Significance level used throughout unless a caller overrides it.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Confidence level for Wilson intervals in reports.
pub const DEFAULT_CI_LEVEL: f64 = 0.99;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies one random stream. Distinct triples give unrelated streams;
/// equal triples give bit-identical ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub replicate: u64,
    pub name: &'static str,
}

impl StreamKey {
    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed, self.replicate, self.name)
    }
}

/// Derives the ChaCha8 stream for (seed, replicate, name).
pub fn stream_rng(seed: u64, replicate: u64, name: &str) -> ChaCha8Rng {
    let mut state = 0x243f_6a88_85a3_08d3u64;
    let absorb = |s: u64, x: u64| mix(s ^ x).wrapping_add(GOLDEN);
    state = absorb(state, seed);
    state = absorb(state, replicate);
    state = absorb(state, name.len() as u64);
    for chunk in name.as_bytes().chunks(8) {
        let mut block = [0u8; 8];
        block[..chunk.len()].copy_from_slice(chunk);
        state = absorb(state, u64::from_le_bytes(block));
    }
    let mut key = [0u8; 32];
    for i in 0..4 {
        state = state.wrapping_add(GOLDEN);
        key[i * 8..(i + 1) * 8].copy_from_slice(&mix(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Outcome of a hypothesis test. A rejection is a result, not an error.
#[derive(Clone, Debug)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub samples: u64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadLevel { level: alpha });
    }
    Ok(())
}

/// Pearson goodness-of-fit test of observed counts against cell
/// probabilities. All expected counts must reach 5; callers with sparse cells
/// merge them first.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if observed.len() < 2 || observed.len() != probs.len() {
        return Err(Error::TooFewCells {
            cells: observed.len().min(probs.len()),
        });
    }
    let total: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    for (i, (&o, &p)) in observed.iter().zip(probs).enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadProbability { p });
        }
        let e = total as f64 * p;
        if e < 5.0 {
            return Err(Error::LowExpectedCount {
                cell: i.to_string(),
                expected: e,
            });
        }
        statistic += (o as f64 - e) * (o as f64 - e) / e;
    }
    let df = (observed.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).expect("df >= 1").cdf(statistic);
    Ok(TestResult {
        statistic,
        df,
        p_value,
        alpha,
        reject: p_value < alpha,
        samples: total,
    })
}

/// Two-sample homogeneity test: do two sets of counts over the same cells
/// come from one distribution? Expected counts are taken from the pooled
/// proportions and must reach 5 in both rows.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if a.len() < 2 || a.len() != b.len() {
        return Err(Error::TooFewCells {
            cells: a.len().min(b.len()),
        });
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let total = na + nb;
    if total == 0 {
        return Err(Error::NoTrials);
    }
    let mut statistic = 0.0;
    for (i, (&oa, &ob)) in a.iter().zip(b).enumerate() {
        let pooled = (oa + ob) as f64 / total as f64;
        for (o, n) in [(oa, na), (ob, nb)] {
            let e = n as f64 * pooled;
            if e < 5.0 {
                return Err(Error::LowExpectedCount {
                    cell: i.to_string(),
                    expected: e,
                });
            }
            statistic += (o as f64 - e) * (o as f64 - e) / e;
        }
    }
    let df = (a.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).expect("df >= 1").cdf(statistic);
    Ok(TestResult {
        statistic,
        df,
        p_value,
        alpha,
        reject: p_value < alpha,
        samples: total,
    })
}

/// Two-sided normal quantile for a given confidence level.
pub fn z_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::BadLevel { level });
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_ci(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    if successes > trials {
        return Err(Error::BadCounts { successes, trials });
    }
    let z = z_for_level(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Per-replicate jobs are folded in replicate order inside fixed-size chunks,
/// so the aggregate is identical for every worker count. Chunks are computed
/// in parallel; the fold itself is sequential.
pub fn run_replicated<T, A, J, F>(
    replicates: u64,
    workers: Option<usize>,
    job: J,
    init: A,
    fold: F,
) -> A
where
    T: Send,
    A: Send,
    J: Fn(u64) -> T + Sync + Send,
    F: FnMut(A, T) -> A + Send,
{
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .expect("thread pool");
            pool.install(|| run_in_current_pool(replicates, job, init, fold))
        }
        None => run_in_current_pool(replicates, job, init, fold),
    }
}

fn run_in_current_pool<T, A, J, F>(replicates: u64, job: J, init: A, mut fold: F) -> A
where
    T: Send,
    J: Fn(u64) -> T + Sync,
    F: FnMut(A, T) -> A,
{
    const CHUNK: u64 = 1024;
    let chunk_count = replicates.div_ceil(CHUNK);
    let chunks: Vec<Vec<T>> = (0..chunk_count)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(replicates);
            (lo..hi).map(&job).collect()
        })
        .collect();
    let mut acc = init;
    for chunk in chunks {
        for t in chunk {
            acc = fold(acc, t);
        }
    }
    acc
}
