//! List-length experiment on random inputs.
//!
//! Each trial draws `n` values uniformly from `[1, 2^b - 1]` and repeatedly
//! aligns (optionally), sorts, removes duplicates and takes first differences.
//! The lengths after each deduplication are the columns A, B, C, D of the
//! result; from them the additions per multiplication are estimated as
//! `(A + B + C + (b/2) D) / n`, charging one addition per accumulated element
//! on the first three levels and an expected `b/2` Russian Peasants additions
//! per element at the last.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`), seeded with
//! `seed_from_u64(seed)` and switched to stream `trial` for each trial, so a
//! trial's input depends only on `(seed, trial)` and trials can run in any
//! order or in parallel.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::chain::{check_bits, max_diff_count};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub bits: u32,
    pub align: bool,
    pub trials: u32,
    pub seed: u64,
    pub levels: usize,
}

impl ExperimentConfig {
    pub fn new(n: usize, align: bool) -> Self {
        ExperimentConfig { n, bits: 24, align, trials: 100, seed: 0, levels: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        check_bits(self.bits)?;
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1"));
        }
        if self.levels == 0 {
            return Err(Error::InvalidParameter("levels must be at least 1"));
        }
        Ok(())
    }
}

/// Post-deduplication list lengths of one trial, one per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialCounts {
    pub lengths: Vec<usize>,
}

impl TrialCounts {
    pub fn duplicates(&self, n: usize) -> usize {
        n - self.lengths.first().copied().unwrap_or(0)
    }
}

/// Averages over all trials of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRow {
    pub config: ExperimentConfig,
    /// Mean length per level.
    pub lengths: Vec<f64>,
    pub ratio: f64,
    /// Mean of `n - A`.
    pub duplicates: f64,
}

impl CountRow {
    /// Reduce trial results, in the order given.
    pub fn from_trials(config: ExperimentConfig, trials: &[TrialCounts]) -> Result<Self> {
        config.validate()?;
        if trials.len() != config.trials as usize {
            return Err(Error::LengthMismatch { expected: config.trials as usize, actual: trials.len() });
        }
        let t = trials.len() as f64;
        let mut lengths = alloc::vec![0.0; config.levels];
        for trial in trials {
            if trial.lengths.len() != config.levels {
                return Err(Error::LengthMismatch { expected: config.levels, actual: trial.lengths.len() });
            }
            for (m, &l) in lengths.iter_mut().zip(&trial.lengths) {
                *m += l as f64;
            }
        }
        for m in &mut lengths {
            *m /= t;
        }
        let (last, rest) = lengths.split_last().expect("levels >= 1");
        let ratio = (rest.iter().sum::<f64>() + f64::from(config.bits) / 2.0 * last) / config.n as f64;
        let duplicates = config.n as f64 - lengths[0];
        Ok(CountRow { config, lengths, ratio, duplicates })
    }

    fn column(&self, i: usize) -> f64 {
        self.lengths.get(i).copied().unwrap_or(0.0)
    }

    pub fn a(&self) -> f64 {
        self.column(0)
    }

    pub fn b(&self) -> f64 {
        self.column(1)
    }

    pub fn c(&self) -> f64 {
        self.column(2)
    }

    pub fn d(&self) -> f64 {
        self.column(3)
    }
}

/// The `n` input values of trial `trial`.
pub fn trial_input(config: &ExperimentConfig, trial: u32) -> Result<Vec<u32>> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::from(trial));
    let max = if config.bits == 32 { u32::MAX } else { (1u32 << config.bits) - 1 };
    Ok((0..config.n).map(|_| rng.random_range(1..=max)).collect())
}

pub fn run_trial(config: &ExperimentConfig, trial: u32) -> Result<TrialCounts> {
    let mut list = trial_input(config, trial)?;
    let cap = max_diff_count(1u64 << config.bits, config.align) as usize;
    let mut lengths = Vec::with_capacity(config.levels);
    for level in 0..config.levels {
        if config.align {
            for v in &mut list {
                *v >>= v.trailing_zeros();
            }
        }
        list.sort_unstable();
        list.dedup();
        if level >= 1 && list.len() > cap {
            return Err(Error::InvalidParameter("difference list exceeds its combinatorial cap"));
        }
        lengths.push(list.len());
        let mut prev = 0;
        for v in &mut list {
            (*v, prev) = (*v - prev, *v);
        }
    }
    Ok(TrialCounts { lengths })
}

/// Run every trial in order and average.
pub fn run_experiment(config: &ExperimentConfig) -> Result<CountRow> {
    config.validate()?;
    let trials = (0..config.trials).map(|t| run_trial(config, t)).collect::<Result<Vec<_>>>()?;
    CountRow::from_trials(*config, &trials)
}

/// Expected number of distinct values among `n` uniform draws from `k`
/// possibilities: `k (1 - (1 - 1/k)^n)`.
pub fn expected_distinct(n: u64, k: u64) -> f64 {
    if n == 0 || k == 0 {
        return 0.0;
    }
    if k == 1 {
        return 1.0;
    }
    let kf = k as f64;
    -kf * libm::expm1(n as f64 * libm::log1p(-1.0 / kf))
}
