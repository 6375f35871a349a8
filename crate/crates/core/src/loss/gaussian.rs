use std::cell::RefCell;
use std::f64::consts::LOG2_E;

use nalgebra::DMatrix;

use super::{EntropySource, MutualInformation};
use crate::error::{MipError, Result};
use crate::linalg::{self, JitterPolicy};
use crate::subset::Subset;

/// A multivariate Gaussian described by its covariance matrix.
///
/// Entropies are `log2 |Σ_S|`, without the `(|S|/2) log2(2πe)` offset and
/// without the conventional factor ½. Both cancel or rescale uniformly in
/// every partition loss, so reported mutual information is twice the usual
/// value in bits and argmins are unaffected.
///
/// If the covariance is not numerically positive definite, a single jitter
/// `ε · trace / n` is added to the whole diagonal at construction, so every
/// principal submatrix sees the same regularization.
#[derive(Debug, Clone)]
pub struct GaussianSystem {
    sigma: DMatrix<f64>,
    effective: Vec<f64>,
    n: usize,
    jitter: f64,
    logdet_full: f64,
}

thread_local! {
    static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

impl GaussianSystem {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        Self::with_policy(sigma, &JitterPolicy::default())
    }

    pub fn with_policy(sigma: DMatrix<f64>, policy: &JitterPolicy) -> Result<Self> {
        linalg::check_symmetric(&sigma)?;
        let n = sigma.nrows();
        if n == 0 {
            return Err(MipError::EmptyGroundSet);
        }
        let mut effective = linalg::to_row_major(&sigma);
        let (ln_det, jitter) = linalg::factor_with_jitter(&effective, n, policy)?;
        for i in 0..n {
            effective[i * n + i] += jitter;
        }
        Ok(Self { sigma, effective, n, jitter, logdet_full: ln_det * LOG2_E })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The covariance as supplied (before jitter).
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Diagonal regularizer applied at construction (0 if none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `log2 |Σ_X|` of the (jittered) covariance.
    pub fn logdet_full(&self) -> f64 {
        self.logdet_full
    }

    pub(crate) fn effective(&self) -> &[f64] {
        &self.effective
    }

    /// `log2 |Σ_S|` of the jittered covariance; 0 for the empty set.
    ///
    /// Returns NaN only if a principal submatrix fails to factor even after
    /// further local jitter, which cannot happen in exact arithmetic.
    pub fn logdet(&self, s: &Subset) -> f64 {
        let idx = s.to_vec();
        self.logdet_indices(&idx)
    }

    pub(crate) fn logdet_indices(&self, idx: &[usize]) -> f64 {
        SCRATCH.with(|scratch| {
            let mut scratch = scratch.borrow_mut();
            if let Some(ln) = linalg::ln_det_principal(&self.effective, self.n, idx, &mut scratch) {
                return ln * LOG2_E;
            }
            self.logdet_fallback(idx)
        })
    }

    #[cold]
    fn logdet_fallback(&self, idx: &[usize]) -> f64 {
        let k = idx.len();
        let mut sub = vec![0.0; k * k];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                sub[r * k + c] = self.effective[i * self.n + j];
            }
        }
        match linalg::factor_with_jitter(&sub, k, &JitterPolicy::default()) {
            Ok((ln, _)) => ln * LOG2_E,
            Err(_) => f64::NAN,
        }
    }

    /// The mutual-information loss oracle over this system.
    pub fn mi_oracle(&self) -> MutualInformation<&Self> {
        MutualInformation(self)
    }

    /// Scale every variable by `c`: `Σ ↦ c² Σ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.sigma * (c * c))
    }
}

impl EntropySource for GaussianSystem {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn entropy(&self, s: &Subset) -> f64 {
        if s.is_empty() {
            0.0
        } else {
            self.logdet(s)
        }
    }
}

fn check_ground(sys: &GaussianSystem, m: &Subset) -> Result<()> {
    if m.ground_size() != sys.n {
        return Err(MipError::GroundSizeMismatch { expected: sys.n, got: m.ground_size() });
    }
    Ok(())
}

/// `I(M; M̄) = log2|Σ_M| + log2|Σ_M̄| − log2|Σ_X|`.
pub fn gaussian_mi(sys: &GaussianSystem, m: &Subset) -> Result<f64> {
    check_ground(sys, m)?;
    if !m.is_proper() {
        return Err(MipError::EmptyOrFullSubset);
    }
    Ok(sys.logdet(m) + sys.logdet(&m.complement()) - sys.logdet_full)
}

/// `log2 |Σ_M|`, the Gaussian entropy up to an additive constant.
pub fn gaussian_entropy(sys: &GaussianSystem, m: &Subset) -> Result<f64> {
    check_ground(sys, m)?;
    if m.is_empty() {
        return Err(MipError::EmptySubset);
    }
    Ok(sys.logdet(m))
}

/// Unbiased sample covariance (divisor `T − 1`) of a `T x n` data matrix
/// whose rows are samples.
pub fn sample_covariance(data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (t, n) = data.shape();
    if t < 2 {
        return Err(MipError::TooFewSamples(t));
    }
    if n == 0 {
        return Err(MipError::EmptyGroundSet);
    }
    let means = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let mut cov = centered.transpose() * &centered / (t as f64 - 1.0);
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            let v = cov[(i, j)];
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

pub fn covariance_from_samples(data: &DMatrix<f64>) -> Result<GaussianSystem> {
    GaussianSystem::new(sample_covariance(data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::EntropySource;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn set(n: usize, idx: &[usize]) -> Subset {
        Subset::from_indices(n, idx.iter().copied()).unwrap()
    }

    fn random_cov(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.05
    }

    #[test]
    fn identity_has_no_loss() {
        let sys = GaussianSystem::new(DMatrix::identity(5, 5)).unwrap();
        for mask in 1..31u64 {
            assert_eq!(gaussian_mi(&sys, &Subset::from_mask(5, mask)).unwrap(), 0.0);
        }
    }

    #[test]
    fn bivariate_closed_form() {
        let sys = GaussianSystem::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap();
        let mi = gaussian_mi(&sys, &set(2, &[0])).unwrap();
        let expected = -(1.0f64 - 0.25).log2();
        assert!((mi - expected).abs() < 1e-14);
        assert!((mi - 0.41504).abs() < 1e-5);
    }

    #[test]
    fn bivariate_matches_simulated_draws() {
        // 10^6 correlated draws, sample covariance, same closed form
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho: f64 = 0.5;
        let t = 1_000_000;
        let data = DMatrix::from_fn(t, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut mixed = data.clone();
        for r in 0..t {
            mixed[(r, 1)] = rho * data[(r, 0)] + (1.0 - rho * rho).sqrt() * data[(r, 1)];
        }
        let sys = covariance_from_samples(&mixed).unwrap();
        let mi = gaussian_mi(&sys, &set(2, &[0])).unwrap();
        assert!((mi - 0.41504).abs() < 5e-3, "{mi}");
    }

    #[test]
    fn entropy_examples() {
        let sys = GaussianSystem::new(DMatrix::identity(4, 4)).unwrap();
        assert_eq!(gaussian_entropy(&sys, &set(4, &[0, 2, 3])).unwrap(), 0.0);
        let d = GaussianSystem::new(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(gaussian_entropy(&d, &set(2, &[0])).unwrap(), 2.0);
        assert_eq!(gaussian_entropy(&d, &Subset::empty(2)), Err(MipError::EmptySubset));
    }

    #[test]
    fn subadditivity() {
        for seed in 0..10 {
            let sys = GaussianSystem::new(random_cov(6, seed)).unwrap();
            let joint = gaussian_entropy(&sys, &Subset::full(6)).unwrap();
            let sum: f64 = (0..6).map(|i| gaussian_entropy(&sys, &set(6, &[i])).unwrap()).sum();
            assert!(joint <= sum + 1e-12);
        }
    }

    #[test]
    fn mi_errors() {
        let sys = GaussianSystem::new(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(gaussian_mi(&sys, &Subset::empty(3)), Err(MipError::EmptyOrFullSubset));
        assert_eq!(gaussian_mi(&sys, &Subset::full(3)), Err(MipError::EmptyOrFullSubset));
        assert!(matches!(gaussian_mi(&sys, &Subset::empty(4)), Err(MipError::GroundSizeMismatch { .. })));
    }

    #[test]
    fn covariance_examples() {
        let data = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 2.0]);
        let cov = sample_covariance(&data).unwrap();
        assert_eq!(cov, DMatrix::from_element(2, 2, 2.0));
        assert_eq!(sample_covariance(&DMatrix::zeros(1, 3)), Err(MipError::TooFewSamples(1)));
    }

    #[test]
    fn iid_covariance_is_near_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = DMatrix::from_fn(10_000, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = sample_covariance(&data).unwrap();
        assert!((cov - DMatrix::<f64>::identity(3, 3)).abs().max() < 0.05);
    }

    #[test]
    fn constant_column_triggers_jitter() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut data = DMatrix::from_fn(200, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        data.column_mut(1).fill(4.0);
        let cov = sample_covariance(&data).unwrap();
        assert!(cov.row(1).iter().all(|&v| v == 0.0));
        let sys = GaussianSystem::new(cov).unwrap();
        assert!(sys.jitter() > 0.0);
        let mi = gaussian_mi(&sys, &set(3, &[1])).unwrap();
        assert!(mi.is_finite() && mi.abs() < 1e-6, "{mi}");
    }

    #[test]
    fn whole_dataset_rescaling_leaves_values_unchanged() {
        let sys = GaussianSystem::new(random_cov(7, 3)).unwrap();
        let scaled = sys.scaled(3.7).unwrap();
        for mask in 1..127u64 {
            let s = Subset::from_mask(7, mask);
            let a = gaussian_mi(&sys, &s).unwrap();
            let b = gaussian_mi(&scaled, &s).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_source_is_zero_on_empty() {
        let sys = GaussianSystem::new(random_cov(3, 1)).unwrap();
        assert_eq!(sys.entropy(&Subset::empty(3)), 0.0);
    }
}
