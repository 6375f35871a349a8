//! Ground sets and dense bit-vector subsets.
//!
//! A [`Subset`] stores membership in 64-bit words, so set algebra costs
//! `O(n / 64)`. The word sequence doubles as the canonical memoization key.
//! Ordering is lexicographic over the sorted element sequence, which is the
//! tie-breaking order used by every search in this crate.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use crate::error::{MipError, Result};

const WORD: usize = 64;

fn word_count(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// The set of variables `{0, .., n-1}`, optionally with display names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(MipError::EmptyGroundSet);
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(MipError::EmptyGroundSet);
        }
        let distinct: HashSet<&str> = labels.iter().map(String::as_str).collect();
        if distinct.len() != n {
            return Err(MipError::InvalidLabels { expected: n, got: distinct.len() });
        }
        Ok(Self { n, labels: Some(labels) })
    }

    /// Attach labels to an existing ground set; the count must match `n`.
    pub fn labelled(self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(MipError::InvalidLabels { expected: self.n, got: labels.len() });
        }
        Self::with_labels(labels)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of element `i`: its label, or the 1-based index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => (i + 1).to_string(),
        }
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.n)
    }

    pub fn empty(&self) -> Subset {
        Subset::empty(self.n)
    }
}

/// A subset of `{0, .., n-1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    n: usize,
    words: Vec<u64>,
}

impl Subset {
    pub fn empty(n: usize) -> Self {
        Self { n, words: vec![0; word_count(n)] }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self { n, words: vec![u64::MAX; word_count(n)] };
        s.clear_tail();
        s
    }

    pub fn singleton(n: usize, i: usize) -> Result<Self> {
        Self::from_indices(n, [i])
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, indices: I) -> Result<Self> {
        let mut s = Self::empty(n);
        for i in indices {
            if i >= n {
                return Err(MipError::InvalidIndex { index: i, n });
            }
            s.insert(i);
        }
        Ok(s)
    }

    /// Build from a membership mask; bit `i` of `mask` is element `i`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 64 || mask >> 63 == 0);
        let mut s = Self::empty(n);
        if n > 0 {
            s.words[0] = mask;
            s.clear_tail();
        }
        s
    }

    fn clear_tail(&mut self) {
        let rem = self.n % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// Size of the ground set this subset lives in.
    pub fn ground_size(&self) -> usize {
        self.n
    }

    /// The canonical word sequence.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    /// Panics if `i` is out of range.
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.n, "index {i} out of range for n = {}", self.n);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.n {
            self.words[i / WORD] &= !(1 << (i % WORD));
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.n
    }

    /// Proper and nonempty: a valid side of a bipartition.
    pub fn is_proper(&self) -> bool {
        let k = self.len();
        k > 0 && k < self.n
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter { words: &self.words, word_idx: 0, current: self.words.first().copied().unwrap_or(0) }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn zip_with(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.n, other.n, "subsets from different ground sets");
        let words = self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect();
        Self { n: self.n, words }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn union_with(&mut self, other: &Self) {
        assert_eq!(self.n, other.n, "subsets from different ground sets");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn complement(&self) -> Self {
        let mut s = Self { n: self.n, words: self.words.iter().map(|w| !w).collect() };
        s.clear_tail();
        s
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(&a, &b)| a & b == 0)
    }

    /// Representative of the bipartition `{self, complement}` used for
    /// reporting: the smaller side, or the lexicographically smaller one at
    /// equal size.
    pub fn smaller_side(&self) -> Self {
        let comp = self.complement();
        match self.len().cmp(&comp.len()) {
            Ordering::Less => self.clone(),
            Ordering::Greater => comp,
            Ordering::Equal => std::cmp::min(self.clone(), comp),
        }
    }

    /// Re-express this subset (of a local ground set) in a larger ground set
    /// through `map[local] = global`.
    pub fn lift(&self, n: usize, map: &[usize]) -> Self {
        let mut s = Self::empty(n);
        for i in self.iter() {
            s.insert(map[i]);
        }
        s
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Subset {
    /// Lexicographic on the sorted element sequence; a proper prefix sorts first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter()).then(self.n.cmp(&other.n))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub struct Iter<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for Iter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_idx * WORD + bit);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(n: usize, idx: &[usize]) -> Subset {
        Subset::from_indices(n, idx.iter().copied()).unwrap()
    }

    #[test]
    fn complement_examples() {
        assert_eq!(set(4, &[0, 1]).complement(), set(4, &[2, 3]));
        assert_eq!(Subset::empty(3).complement(), set(3, &[0, 1, 2]));
        let first_half = Subset::from_indices(40, 0..20).unwrap();
        assert_eq!(first_half.complement(), Subset::from_indices(40, 20..40).unwrap());
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        assert_eq!(Subset::from_indices(3, [0, 3]), Err(MipError::InvalidIndex { index: 3, n: 3 }));
    }

    #[test]
    fn ground_set_validation() {
        assert!(GroundSet::new(0).is_err());
        assert!(GroundSet::with_labels(vec!["a".into(), "a".into()]).is_err());
        let g = GroundSet::with_labels(vec!["x".into(), "y".into()]).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.label(1), "y");
        assert_eq!(GroundSet::new(3).unwrap().label(0), "1");
        assert!(GroundSet::new(3).unwrap().labelled(vec!["a".into()]).is_err());
    }

    #[test]
    fn lexicographic_order() {
        // {0,2} < {0,2,5} < {1}
        assert!(set(8, &[0, 2]) < set(8, &[0, 2, 5]));
        assert!(set(8, &[0, 2, 5]) < set(8, &[1]));
        assert!(Subset::empty(8) < set(8, &[7]));
    }

    #[test]
    fn smaller_side_convention() {
        assert_eq!(set(5, &[0, 1, 2]).smaller_side(), set(5, &[3, 4]));
        assert_eq!(set(4, &[2, 3]).smaller_side(), set(4, &[0, 1]));
        assert_eq!(set(4, &[0, 3]).smaller_side(), set(4, &[0, 3]));
    }

    #[test]
    fn spans_multiple_words() {
        let s = set(130, &[0, 63, 64, 127, 129]);
        assert_eq!(s.len(), 5);
        assert_eq!(s.to_vec(), vec![0, 63, 64, 127, 129]);
        assert_eq!(s.complement().len(), 125);
        assert!(!s.complement().contains(129));
    }

    fn arb_subset() -> impl Strategy<Value = Subset> {
        (1usize..200).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n).prop_map(move |bits| {
                Subset::from_indices(n, bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn complement_laws(s in arb_subset()) {
            let c = s.complement();
            prop_assert_eq!(c.complement(), s.clone());
            prop_assert!(s.union(&c).is_full());
            prop_assert!(s.intersection(&c).is_empty());
            prop_assert_eq!(s.len() + c.len(), s.ground_size());
        }

        #[test]
        fn iteration_matches_membership(s in arb_subset()) {
            let v = s.to_vec();
            prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(Subset::from_indices(s.ground_size(), v).unwrap(), s);
        }
    }
}
