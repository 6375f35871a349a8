//! Synthetic data: iid Gaussian samples, SVD-mixed correlated blocks and a
//! coupled map lattice with one weakened link.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MipError, Result};
use crate::fastpath::minimize_bipartition_gaussian;
use crate::loss::covariance_from_samples;
use crate::subset::Subset;

/// `T x n` matrix of samples; rows are time steps.
pub type TimeSeries = DMatrix<f64>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Mix a master seed with stream coordinates (SplitMix64 finalizer).
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    let mut z = master;
    for &c in coords {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(c);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// `samples x n` iid standard normal entries.
pub fn gen_random_gaussian(n: usize, samples: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(MipError::GroundSetTooSmall { n, min: 2 });
    }
    if samples < 2 {
        return Err(MipError::TooFewSamples(samples));
    }
    // row-major fill so a given seed yields the same samples regardless of n
    let mut r = rng(seed);
    let mut m = DMatrix::zeros(samples, n);
    for t in 0..samples {
        for i in 0..n {
            m[(t, i)] = r.sample(StandardNormal);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub block_size: usize,
    pub n_blocks: usize,
    pub samples: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for BlockParams {
    fn default() -> Self {
        Self { block_size: 20, n_blocks: 2, samples: 1000, lambda: 0.1, seed: 0 }
    }
}

/// Block-correlated samples: per block, `Y = U S (λ𝟙 + (1−λ)E)` where
/// `X = U S Vᵀ` is the thin SVD of iid normal `X` and `E` is iid normal.
pub fn gen_block_correlated(p: &BlockParams) -> Result<DMatrix<f64>> {
    if p.block_size < 2 {
        return Err(MipError::InvalidParameter(format!("block_size must be at least 2, got {}", p.block_size)));
    }
    if p.n_blocks < 1 {
        return Err(MipError::InvalidParameter("n_blocks must be at least 1".into()));
    }
    if p.samples < 2 {
        return Err(MipError::TooFewSamples(p.samples));
    }
    if !(0.0..=1.0).contains(&p.lambda) {
        return Err(MipError::InvalidParameter(format!("lambda must lie in [0, 1], got {}", p.lambda)));
    }
    let b = p.block_size;
    let mut r = rng(p.seed);
    let mut out = DMatrix::zeros(p.samples, b * p.n_blocks);
    for k in 0..p.n_blocks {
        let x = normal_matrix(&mut r, p.samples, b);
        let svd = x.svd(true, false);
        let u = svd.u.expect("requested U");
        let us = u * DMatrix::from_diagonal(&svd.singular_values);
        let e = normal_matrix(&mut r, b, b);
        let mix = DMatrix::from_element(b, b, p.lambda) + e * (1.0 - p.lambda);
        out.columns_mut(k * b, b).copy_from(&(us * mix));
    }
    Ok(out)
}

/// Coupled map lattice parameters. Sites are zero-based; the weakened link
/// joins `weak_link_site` and `weak_link_site + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmlParams {
    pub n: usize,
    pub a: f64,
    pub eps: f64,
    pub delta: f64,
    pub t_total: usize,
    pub t_transient: usize,
    pub seed: u64,
    pub weak_link_site: usize,
}

impl Default for CmlParams {
    fn default() -> Self {
        Self { n: 30, a: 1.8950, eps: 0.1, delta: 0.5, t_total: 20_000, t_transient: 1000, seed: 0, weak_link_site: 19 }
    }
}

impl CmlParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MipError::InvalidParameter(m));
        if !(0.0..=0.5).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 1/2], got {}", self.delta));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return bad(format!("eps must lie in [0, 1], got {}", self.eps));
        }
        if !self.a.is_finite() {
            return bad(format!("a must be finite, got {}", self.a));
        }
        // the four modified sites j-1..=j+2 each need both neighbours
        if self.n < 6 || self.weak_link_site < 2 || self.weak_link_site + 4 > self.n {
            return bad(format!(
                "weak_link_site must lie in [2, n-4] with n >= 6, got {} for n = {}",
                self.weak_link_site, self.n
            ));
        }
        if self.t_total < 2 {
            return Err(MipError::TooFewSamples(self.t_total));
        }
        Ok(())
    }

    /// Per-site `(self, left, right)` coefficients on `f_a` of the previous
    /// state.
    pub fn coefficients(&self) -> Vec<[f64; 3]> {
        let (n, e, d, j) = (self.n, self.eps, self.delta, self.weak_link_site);
        let mut c = vec![[1.0 - e, e / 2.0, e / 2.0]; n];
        c[0] = [1.0 - e, 0.0, e];
        c[n - 1] = [1.0 - e, e, 0.0];
        c[j - 1] = [1.0 - e, e / 2.0, (1.0 - d) * e];
        c[j] = [1.0 - e, e / 2.0, d * e];
        c[j + 1] = [1.0 - e, d * e, e / 2.0];
        c[j + 2] = [1.0 - e, (1.0 - d) * e, e / 2.0];
        c
    }
}

/// Above this magnitude the lattice is considered divergent.
pub const DIVERGENCE_BOUND: f64 = 1e10;

/// Iterate the lattice from `x ~ U[0,1]`, discard `t_transient` steps and
/// return the next `t_total` states.
pub fn simulate_cml(p: &CmlParams) -> Result<TimeSeries> {
    p.validate()?;
    let mut r = rng(p.seed);
    let initial: Vec<f64> = (0..p.n).map(|_| r.random::<f64>()).collect();
    simulate_cml_from(p, &initial)
}

/// [`simulate_cml`] from a given initial state.
pub fn simulate_cml_from(p: &CmlParams, initial: &[f64]) -> Result<TimeSeries> {
    p.validate()?;
    if initial.len() != p.n {
        return Err(MipError::GroundSizeMismatch { expected: p.n, got: initial.len() });
    }
    let coef = p.coefficients();
    let n = p.n;
    let mut x = initial.to_vec();
    let mut f = vec![0.0; n];
    let mut out = DMatrix::zeros(p.t_total, n);
    for step in 0..p.t_transient + p.t_total {
        for (fi, &xi) in f.iter_mut().zip(&x) {
            *fi = 1.0 - p.a * xi * xi;
        }
        for i in 0..n {
            let [cs, cl, cr] = coef[i];
            let mut v = cs * f[i];
            let mut side = 0.0;
            if cl != 0.0 {
                side += cl * f[i - 1];
            }
            if cr != 0.0 {
                side += cr * f[i + 1];
            }
            v += side;
            if !v.is_finite() || v.abs() > DIVERGENCE_BOUND {
                return Err(MipError::Divergence { step, site: i, value: v });
            }
            x[i] = v;
        }
        if step >= p.t_transient {
            let t = step - p.t_transient;
            for i in 0..n {
                out[(t, i)] = x[i];
            }
        }
    }
    Ok(out)
}

/// Outcome of one lattice simulation followed by a bipartition search.
#[derive(Debug, Clone, PartialEq)]
pub struct CmlRun {
    /// Seed of the accepted (non-divergent) simulation.
    pub seed: u64,
    pub smaller_side: Subset,
    pub loss: f64,
    pub oracle_calls: u64,
    /// Whether the smaller side is everything right of the weak link.
    pub hit: bool,
    /// Divergent simulations redrawn before this one.
    pub redraws: u32,
}

/// Maximum number of redraws for a divergent run.
pub const MAX_REDRAWS: u32 = 100;

/// Simulate with seeds `derive_seed(seed, [attempt])` until one run stays
/// bounded, then locate its minimum information bipartition.
pub fn cml_run(p: &CmlParams) -> Result<CmlRun> {
    p.validate()?;
    let mut redraws = 0;
    loop {
        let seed = if redraws == 0 { p.seed } else { derive_seed(p.seed, &[redraws as u64]) };
        let q = CmlParams { seed, ..p.clone() };
        match simulate_cml(&q) {
            Ok(series) => {
                let sys = covariance_from_samples(&series)?;
                let r = minimize_bipartition_gaussian(&sys)?;
                let right = Subset::from_indices(p.n, p.weak_link_site + 1..p.n)?;
                let hit = r.subset == right;
                return Ok(CmlRun {
                    seed,
                    smaller_side: r.subset,
                    loss: r.loss,
                    oracle_calls: r.oracle_calls,
                    hit,
                    redraws,
                });
            }
            Err(e @ MipError::Divergence { .. }) => {
                redraws += 1;
                if redraws > MAX_REDRAWS {
                    return Err(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Fraction of `runs` independent simulations whose MIP isolates the sites
/// right of the weak link.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub delta: f64,
    pub runs: usize,
    pub hits: usize,
    pub redraws: u32,
    pub p_hat: f64,
}

/// Seed of run `run` at sweep position `delta_index`.
pub fn sweep_seed(master: u64, delta_index: usize, run: usize) -> u64 {
    derive_seed(master, &[delta_index as u64, run as u64])
}

pub fn summarize(delta: f64, runs: &[CmlRun]) -> SweepPoint {
    let hits = runs.iter().filter(|r| r.hit).count();
    let redraws = runs.iter().map(|r| r.redraws).sum();
    let p_hat = if runs.is_empty() { 0.0 } else { hits as f64 / runs.len() as f64 };
    SweepPoint { delta, runs: runs.len(), hits, redraws, p_hat }
}

/// Serial sweep over `deltas` with `runs` simulations each.
pub fn cml_sweep(base: &CmlParams, deltas: &[f64], runs: usize, master_seed: u64) -> Result<Vec<SweepPoint>> {
    deltas
        .iter()
        .enumerate()
        .map(|(di, &delta)| {
            let results = (0..runs)
                .map(|r| cml_run(&CmlParams { delta, seed: sweep_seed(master_seed, di, r), ..base.clone() }))
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(delta, &results))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::sample_covariance;

    #[test]
    fn gaussian_is_deterministic_and_near_identity() {
        let a = gen_random_gaussian(3, 10_000, 4).unwrap();
        let b = gen_random_gaussian(3, 10_000, 4).unwrap();
        assert_eq!(a, b);
        let cov = sample_covariance(&a).unwrap();
        assert!((cov - DMatrix::<f64>::identity(3, 3)).abs().max() < 0.05);
        assert_ne!(a, gen_random_gaussian(3, 10_000, 5).unwrap());
    }

    #[test]
    fn gaussian_shape_and_errors() {
        assert_eq!(gen_random_gaussian(400, 10_000, 0).unwrap().shape(), (10_000, 400));
        assert!(gen_random_gaussian(1, 10, 0).is_err());
        assert!(gen_random_gaussian(3, 1, 0).is_err());
    }

    fn mean_abs_corr(cov: &DMatrix<f64>, within: bool, b: usize) -> f64 {
        let n = cov.nrows();
        let (mut sum, mut count) = (0.0, 0);
        for i in 0..n {
            for j in 0..i {
                if (i / b == j / b) == within {
                    sum += (cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt()).abs();
                    count += 1;
                }
            }
        }
        sum / count as f64
    }

    #[test]
    fn blocks_are_correlated_within() {
        let y = gen_block_correlated(&BlockParams::default()).unwrap();
        assert_eq!(y.shape(), (1000, 40));
        let cov = sample_covariance(&y).unwrap();
        let within = mean_abs_corr(&cov, true, 20);
        let across = mean_abs_corr(&cov, false, 20);
        assert!(within > 2.0 * across, "{within} vs {across}");
        assert_eq!(y, gen_block_correlated(&BlockParams::default()).unwrap());
    }

    fn mean_signed_corr_within(cov: &DMatrix<f64>, b: usize) -> f64 {
        let n = cov.nrows();
        let (mut sum, mut count) = (0.0, 0);
        for i in 0..n {
            for j in 0..i {
                if i / b == j / b {
                    sum += cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
                    count += 1;
                }
            }
        }
        sum / count as f64
    }

    #[test]
    fn lambda_zero_injects_no_common_component() {
        // Y = X V E still mixes columns within a block through E, so blocks
        // stay internally correlated; only the shared positive part vanishes.
        let p = BlockParams { lambda: 0.0, samples: 4000, ..BlockParams::default() };
        let cov = sample_covariance(&gen_block_correlated(&p).unwrap()).unwrap();
        assert!(mean_signed_corr_within(&cov, 20).abs() < 0.05);
        assert!(mean_abs_corr(&cov, true, 20) > 2.0 * mean_abs_corr(&cov, false, 20));
    }

    #[test]
    fn block_params_validated() {
        assert!(gen_block_correlated(&BlockParams { block_size: 1, ..Default::default() }).is_err());
        assert!(gen_block_correlated(&BlockParams { lambda: 1.5, ..Default::default() }).is_err());
    }

    #[test]
    fn coefficient_table_at_half_is_unmodified_stencil() {
        let p = CmlParams::default();
        let c = p.coefficients();
        let e = p.eps;
        for (i, row) in c.iter().enumerate() {
            let want = match i {
                0 => [1.0 - e, 0.0, e],
                29 => [1.0 - e, e, 0.0],
                _ => [1.0 - e, e / 2.0, e / 2.0],
            };
            assert_eq!(*row, want, "site {i}");
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn coefficient_rows_as_printed() {
        let p = CmlParams { delta: 0.125, ..CmlParams::default() };
        let c = p.coefficients();
        let e = p.eps;
        // sites 19..22 one-based
        assert_eq!(c[18], [1.0 - e, e / 2.0, 0.875 * e]);
        assert_eq!(c[19], [1.0 - e, e / 2.0, 0.125 * e]);
        assert_eq!(c[20], [1.0 - e, 0.125 * e, e / 2.0]);
        assert_eq!(c[21], [1.0 - e, 0.875 * e, e / 2.0]);
        // printed row sums are not normalized away from delta = 1/2
        assert!((c[18].iter().sum::<f64>() - (1.0 + e / 2.0 - 0.125 * e)).abs() < 1e-15);
        assert!((c[19].iter().sum::<f64>() - (1.0 - e / 2.0 + 0.125 * e)).abs() < 1e-15);
    }

    #[test]
    fn coefficients_affine_in_delta() {
        let at = |d: f64| CmlParams { delta: d, ..CmlParams::default() }.coefficients();
        let (c0, c1, c2) = (at(0.0), at(0.25), at(0.5));
        for i in 0..30 {
            for k in 0..3 {
                assert!((c1[i][k] - 0.5 * (c0[i][k] + c2[i][k])).abs() < 1e-15);
            }
        }
    }

    /// The lattice written directly from its unmodified update equations.
    fn reference_lattice(p: &CmlParams, initial: &[f64]) -> DMatrix<f64> {
        let (n, a, e) = (p.n, p.a, p.eps);
        let f = |x: f64| 1.0 - a * x * x;
        let mut x = initial.to_vec();
        let mut out = DMatrix::zeros(p.t_total, n);
        for step in 0..p.t_transient + p.t_total {
            let prev = x.clone();
            x[0] = (1.0 - e) * f(prev[0]) + e * f(prev[1]);
            x[n - 1] = (1.0 - e) * f(prev[n - 1]) + e * f(prev[n - 2]);
            for i in 1..n - 1 {
                x[i] = (1.0 - e) * f(prev[i]) + (e / 2.0 * f(prev[i - 1]) + e / 2.0 * f(prev[i + 1]));
            }
            if step >= p.t_transient {
                for i in 0..n {
                    out[(step - p.t_transient, i)] = x[i];
                }
            }
        }
        out
    }

    #[test]
    fn half_delta_matches_unmodified_lattice_bitwise() {
        let p = CmlParams { t_total: 2000, t_transient: 100, seed: 3, ..CmlParams::default() };
        let mut r = rng(p.seed);
        let init: Vec<f64> = (0..p.n).map(|_| r.random::<f64>()).collect();
        let ours = simulate_cml(&p).unwrap();
        let reference = reference_lattice(&p, &init);
        assert!(ours.iter().zip(reference.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn zero_delta_decouples_halves() {
        let p = CmlParams { delta: 0.0, t_total: 500, t_transient: 0, ..CmlParams::default() };
        let mut init: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).fract()).collect();
        let a = simulate_cml_from(&p, &init).unwrap();
        init[0] = 0.123;
        let b = simulate_cml_from(&p, &init).unwrap();
        for t in 0..500 {
            for i in 20..30 {
                assert_eq!(a[(t, i)].to_bits(), b[(t, i)].to_bits());
            }
        }
        assert_ne!(a[(10, 0)], b[(10, 0)]);
    }

    #[test]
    fn cml_params_validated() {
        for bad in [
            CmlParams { delta: 0.6, ..CmlParams::default() },
            CmlParams { eps: -0.1, ..CmlParams::default() },
            CmlParams { weak_link_site: 1, ..CmlParams::default() },
            CmlParams { weak_link_site: 27, ..CmlParams::default() },
        ] {
            assert!(matches!(simulate_cml(&bad), Err(MipError::InvalidParameter(_))));
        }
        assert!(CmlParams { weak_link_site: 26, ..CmlParams::default() }.validate().is_ok());
    }

    #[test]
    fn divergence_reported() {
        let p = CmlParams { a: 4.0, t_total: 100, ..CmlParams::default() };
        assert!(matches!(simulate_cml_from(&p, &[2.0; 30]), Err(MipError::Divergence { .. })));
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(sweep_seed(0, 0, 1), sweep_seed(0, 1, 0));
    }
}
