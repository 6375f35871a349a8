use super::EntropySource;
use crate::error::{MipError, Result};
use crate::subset::Subset;

/// Joint tables larger than this are rejected.
pub const MAX_DISCRETE_CELLS: usize = 1 << 20;

const SUM_TOL: f64 = 1e-12;

/// A joint probability table over categorical variables.
///
/// Cells are laid out row-major with variable 0 most significant.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    alphabet: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<f64>,
}

impl DiscreteSystem {
    pub fn new(alphabet: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(MipError::EmptyGroundSet);
        }
        if alphabet.contains(&0) {
            return Err(MipError::InvalidDistribution("alphabet sizes must be positive".into()));
        }
        let cells = alphabet
            .iter()
            .try_fold(1usize, |acc, &a| acc.checked_mul(a).filter(|&c| c <= MAX_DISCRETE_CELLS))
            .ok_or_else(|| MipError::InvalidDistribution(format!("more than {MAX_DISCRETE_CELLS} cells")))?;
        if probs.len() != cells {
            return Err(MipError::InvalidDistribution(format!("expected {cells} cells, got {}", probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| **p < 0.0 || !p.is_finite()) {
            return Err(MipError::InvalidDistribution(format!("negative or non-finite probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(MipError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        let mut strides = vec![1; alphabet.len()];
        for i in (0..alphabet.len() - 1).rev() {
            strides[i] = strides[i + 1] * alphabet[i + 1];
        }
        Ok(Self { alphabet, strides, probs })
    }

    pub fn n(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &[usize] {
        &self.alphabet
    }

    /// Marginal distribution of the variables in `s`, row-major over `s` in
    /// increasing index order.
    pub fn marginal(&self, s: &Subset) -> Vec<f64> {
        let vars = s.to_vec();
        let mut mstride = vec![1usize; vars.len()];
        for k in (0..vars.len().saturating_sub(1)).rev() {
            mstride[k] = mstride[k + 1] * self.alphabet[vars[k + 1]];
        }
        let size: usize = vars.iter().map(|&v| self.alphabet[v]).product();
        let mut out = vec![0.0; size];
        for (cell, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let idx: usize =
                vars.iter().zip(&mstride).map(|(&v, &ms)| (cell / self.strides[v]) % self.alphabet[v] * ms).sum();
            out[idx] += p;
        }
        out
    }
}

fn shannon_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

impl EntropySource for DiscreteSystem {
    fn ground_size(&self) -> usize {
        self.n()
    }

    fn entropy(&self, s: &Subset) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        shannon_bits(&self.marginal(s))
    }
}

fn check_ground(sys: &DiscreteSystem, m: &Subset) -> Result<()> {
    if m.ground_size() != sys.n() {
        return Err(MipError::GroundSizeMismatch { expected: sys.n(), got: m.ground_size() });
    }
    Ok(())
}

/// Shannon entropy of the marginal over `m`, in bits (`0 log 0 = 0`).
pub fn discrete_entropy(sys: &DiscreteSystem, m: &Subset) -> Result<f64> {
    check_ground(sys, m)?;
    if m.is_empty() {
        return Err(MipError::EmptySubset);
    }
    Ok(sys.entropy(m))
}

/// `I(M; M̄) = H(M) + H(M̄) − H(V)` in bits.
pub fn discrete_mi(sys: &DiscreteSystem, m: &Subset) -> Result<f64> {
    check_ground(sys, m)?;
    if !m.is_proper() {
        return Err(MipError::EmptyOrFullSubset);
    }
    let full = Subset::full(sys.n());
    Ok(sys.entropy(m) + sys.entropy(&m.complement()) - sys.entropy(&full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(n: usize, idx: &[usize]) -> Subset {
        Subset::from_indices(n, idx.iter().copied()).unwrap()
    }

    #[test]
    fn independent_uniform_bits() {
        let sys = DiscreteSystem::new(vec![2, 2], vec![0.25; 4]).unwrap();
        assert!((discrete_entropy(&sys, &set(2, &[0])).unwrap() - 1.0).abs() < 1e-15);
        assert!(discrete_mi(&sys, &set(2, &[0])).unwrap().abs() < 1e-15);
    }

    #[test]
    fn copied_bit() {
        let sys = DiscreteSystem::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((discrete_mi(&sys, &set(2, &[0])).unwrap() - 1.0).abs() < 1e-15);
    }

    /// MI as `Σ p(a,b) log p(a,b) / (p(a) p(b))` over an explicit double loop.
    fn brute_mi(alphabet: &[usize], probs: &[f64], side: &[usize]) -> f64 {
        let n = alphabet.len();
        let cells = probs.len();
        let digits = |c: usize| {
            let mut d = vec![0; n];
            let mut rest = c;
            for v in (0..n).rev() {
                d[v] = rest % alphabet[v];
                rest /= alphabet[v];
            }
            d
        };
        let key = |d: &[usize], inside: bool| -> Vec<usize> {
            (0..n).filter(|v| side.contains(v) == inside).map(|v| d[v]).collect()
        };
        let mut mi = 0.0;
        for a in 0..cells {
            let pa = probs[a];
            if pa == 0.0 {
                continue;
            }
            let da = digits(a);
            let (ka, kb) = (key(&da, true), key(&da, false));
            let mut p_left = 0.0;
            let mut p_right = 0.0;
            for (b, &pb) in probs.iter().enumerate().take(cells) {
                let db = digits(b);
                if key(&db, true) == ka {
                    p_left += pb;
                }
                if key(&db, false) == kb {
                    p_right += pb;
                }
            }
            mi += pa * (pa / (p_left * p_right)).log2();
        }
        mi
    }

    #[test]
    fn matches_brute_force_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let alphabet = vec![2, 3, 2];
        let raw: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let sys = DiscreteSystem::new(alphabet.clone(), probs.clone()).unwrap();
        for side in [vec![0], vec![1], vec![2]] {
            let got = discrete_mi(&sys, &set(3, &side)).unwrap();
            let want = brute_mi(&alphabet, &probs, &side);
            assert!((got - want).abs() < 1e-12, "{side:?}: {got} vs {want}");
            assert!(got >= -1e-12);
        }
    }

    #[test]
    fn validation() {
        assert!(DiscreteSystem::new(vec![2], vec![0.5, 0.6]).is_err());
        assert!(DiscreteSystem::new(vec![2], vec![-0.5, 1.5]).is_err());
        assert!(DiscreteSystem::new(vec![2, 2], vec![1.0]).is_err());
        assert!(DiscreteSystem::new(vec![2; 21], vec![]).is_err());
        let sys = DiscreteSystem::new(vec![2], vec![0.5, 0.5]).unwrap();
        assert_eq!(discrete_entropy(&sys, &Subset::empty(1)), Err(MipError::EmptySubset));
        assert_eq!(discrete_mi(&sys, &Subset::full(1)), Err(MipError::EmptyOrFullSubset));
    }
}
