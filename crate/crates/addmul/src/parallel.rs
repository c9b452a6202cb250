//! Multi-threaded drivers.
//!
//! Work is split into independent pieces, each with its own [`OpCounter`],
//! and the pieces are reduced in index order, so results and counts are the
//! same for any thread count.

use addmul_core::experiments::{run_trial, CountRow, ExperimentConfig};
use addmul_core::matmul::{dense_partial, product_bits, Product};
use addmul_core::{DenseMatrix, MatmulConfig, MatmulStats, OpCounter};
use rayon::prelude::*;

use crate::error::Result;

/// Dense product with the outer products spread over the rayon pool.
pub fn par_matmul_dense(a: &DenseMatrix, b: &DenseMatrix, config: &MatmulConfig) -> Result<Product<DenseMatrix>> {
    let inner = a.cols();
    let pieces = (rayon::current_num_threads() * 4).clamp(1, inner.max(1));
    let bounds: Vec<usize> = (0..=pieces).map(|p| p * inner / pieces).collect();
    let partials =
        bounds.par_windows(2).map(|w| dense_partial(a, b, w[0]..w[1], config)).collect::<Result<Vec<_>, _>>()?;

    let mut data = vec![0i128; a.rows() * b.cols()];
    let mut counter = OpCounter::new();
    let mut stats = MatmulStats::default();
    for (acc, c, s) in partials {
        for (d, x) in data.iter_mut().zip(acc) {
            *d += x;
        }
        counter = counter.merge(c);
        stats = stats.merge(s);
    }
    let bits = product_bits(a.bits(), b.bits(), &data);
    let matrix = DenseMatrix::new(a.rows(), b.cols(), bits, data)?;
    Ok(Product { matrix, counter, stats })
}

/// [`addmul_core::experiments::run_experiment`] with trials in parallel.
pub fn par_run_experiment(config: &ExperimentConfig) -> Result<CountRow> {
    config.validate()?;
    let trials = (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect::<Result<Vec<_>, _>>()?;
    Ok(CountRow::from_trials(*config, &trials)?)
}
