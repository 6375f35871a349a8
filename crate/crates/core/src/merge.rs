//! Contraction bookkeeping for Queyranne's algorithm.

use crate::error::{MipError, Result};
use crate::subset::Subset;

/// Effective elements of a contracted ground set.
///
/// Each effective element is the flattened set of original indices fused
/// into it. Elements are kept sorted by their smallest original index, which
/// for disjoint sets is the same as lexicographic order of the flattenings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeState {
    n: usize,
    elements: Vec<Subset>,
    history: Vec<(Subset, Subset)>,
}

impl MergeState {
    /// All original elements as singletons.
    pub fn singletons(n: usize) -> Self {
        let elements = (0..n).map(|i| Subset::from_indices(n, [i]).unwrap()).collect();
        Self { n, elements, history: Vec::new() }
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Subset] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> Result<&Subset> {
        self.elements.get(i).ok_or(MipError::InvalidIndex { index: i, n: self.elements.len() })
    }

    /// Pairs fused so far, in merge order.
    pub fn history(&self) -> &[(Subset, Subset)] {
        &self.history
    }

    /// Union of the flattenings of a set of effective indices.
    pub fn flatten<I: IntoIterator<Item = usize>>(&self, effective: I) -> Subset {
        let mut s = Subset::empty(self.n);
        for i in effective {
            s.union_with(&self.elements[i]);
        }
        s
    }

    /// Fuse effective elements `t` and `u` into one.
    pub fn merge(&self, t: usize, u: usize) -> Result<MergeState> {
        let m = self.elements.len();
        for i in [t, u] {
            if i >= m {
                return Err(MipError::InvalidIndex { index: i, n: m });
            }
        }
        if t == u {
            return Err(MipError::InvalidParameter(format!("cannot merge element {t} with itself")));
        }
        let fused = self.elements[t].union(&self.elements[u]);
        let mut elements: Vec<Subset> =
            self.elements.iter().enumerate().filter(|&(i, _)| i != t && i != u).map(|(_, e)| e.clone()).collect();
        let key = fused.first();
        let at = elements.partition_point(|e| e.first() < key);
        elements.insert(at, fused);
        let mut history = self.history.clone();
        history.push((self.elements[t].clone(), self.elements[u].clone()));
        Ok(MergeState { n: self.n, elements, history })
    }

    /// Check that the effective elements are nonempty, pairwise disjoint and cover the ground set.
    pub fn is_partition(&self) -> bool {
        let mut seen = Subset::empty(self.n);
        for e in &self.elements {
            if e.is_empty() || !e.is_disjoint(&seen) {
                return false;
            }
            seen.union_with(e);
        }
        seen.is_full()
    }
}
