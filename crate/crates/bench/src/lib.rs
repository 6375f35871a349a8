//! Fixtures shared by the benchmarks.

use mip_core::{covariance_from_samples, gen_block_correlated, gen_random_gaussian, BlockParams, GaussianSystem};

/// Sample covariance of `n` iid standard normals over 10 000 draws.
pub fn iid_system(n: usize, seed: u64) -> GaussianSystem {
    covariance_from_samples(&gen_random_gaussian(n, 10_000, seed).expect("valid size")).expect("full rank")
}

/// Two correlated blocks of `block_size` variables each.
pub fn block_system(block_size: usize, seed: u64) -> GaussianSystem {
    let p = BlockParams { block_size, seed, ..BlockParams::default() };
    covariance_from_samples(&gen_block_correlated(&p).expect("valid parameters")).expect("full rank")
}
