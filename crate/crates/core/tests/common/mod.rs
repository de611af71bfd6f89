#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use osir_core::linalg::sample_mean;
use osir_core::slicing::{assign_slices, slice_stats, SliceStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Predictors plus a nonlinear response with continuous noise, so responses
/// are distinct with probability one.
pub fn random_regression(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (DMatrix<f64>, DVector<f64>) {
    let x = gaussian(rng, n, p);
    let y = DVector::from_fn(n, |i, _| {
        let e: f64 = StandardNormal.sample(rng);
        x[(i, 0)] + 0.5 * x[(i, p - 1)].powi(2) + 0.3 * e
    });
    (x, y)
}

pub fn stats_for(x: &DMatrix<f64>, y: &DVector<f64>, h: usize) -> (SliceStats, DVector<f64>) {
    let a = assign_slices(y.as_slice(), h).unwrap();
    (slice_stats(x, &a).unwrap(), sample_mean(x).unwrap())
}

pub fn pick(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}
