//! Information-loss functions.
//!
//! Every loss here is built from a subset entropy `H(S)` (in bits, with
//! `H(∅) = 0`). The bipartition loss is the mutual information
//! `I(S; V∖S) = H(S) + H(V∖S) − H(V)` and the k-partition loss is the total
//! correlation `Σ H(Mᵢ) − H(V)`.

mod discrete;
mod gaussian;

pub use discrete::{discrete_entropy, discrete_mi, DiscreteSystem, MAX_DISCRETE_CELLS};
pub use gaussian::{covariance_from_samples, gaussian_entropy, gaussian_mi, sample_covariance, GaussianSystem};

use crate::oracle::LossOracle;
use crate::subset::Subset;

/// A family of subset entropies over a fixed ground set.
pub trait EntropySource {
    fn ground_size(&self) -> usize;
    /// `H(s)` in bits; must return 0 for the empty set.
    fn entropy(&self, s: &Subset) -> f64;
}

impl<E: EntropySource + ?Sized> EntropySource for &E {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }

    fn entropy(&self, s: &Subset) -> f64 {
        (**self).entropy(s)
    }
}

/// Mutual information across the cut `(S, V∖S)` as a loss oracle.
///
/// Total on `2^V`: the empty and full sets evaluate to 0.
#[derive(Debug, Clone, Copy)]
pub struct MutualInformation<E>(pub E);

impl<E: EntropySource> LossOracle for MutualInformation<E> {
    fn ground_size(&self) -> usize {
        self.0.ground_size()
    }

    fn evaluate(&self, s: &Subset) -> f64 {
        if !s.is_proper() {
            return 0.0;
        }
        let full = Subset::full(s.ground_size());
        self.0.entropy(s) + self.0.entropy(&s.complement()) - self.0.entropy(&full)
    }
}

/// The subset entropy itself as an oracle.
#[derive(Debug, Clone, Copy)]
pub struct Entropy<E>(pub E);

impl<E: EntropySource> LossOracle for Entropy<E> {
    fn ground_size(&self) -> usize {
        self.0.ground_size()
    }

    fn evaluate(&self, s: &Subset) -> f64 {
        self.0.entropy(s)
    }
}
