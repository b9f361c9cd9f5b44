//! Synthetic data for the benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` rows of `d` features drawn uniformly from `[-1, 1)`.
pub fn uniform(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
}

/// A Gaussian Gram matrix over `uniform(n, d, seed)`.
pub fn gaussian_gram(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let x = uniform(n, d, seed);
    let sigma_sq = lmkad::kernels::gaussian_bandwidth(x.view()).expect("n >= 2");
    lmkad::kernels::gram_sym(&lmkad::KernelSpec::Gaussian { sigma_sq }, x.view())
}
