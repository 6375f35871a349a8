//! Exact minimum bipartition of a symmetric submodular loss.
//!
//! Each phase builds a greedy chain `v₁, …, v_m` over the current effective
//! elements, with `v_i` minimizing `g(W_{i−1} ∪ {u}) − g({u})`. The last two
//! elements `(t, u)` form a pendent pair: `{u}` is the cheapest cut separating
//! `u` from `t`. Either `{u}` is optimal or the optimum keeps `t` and `u`
//! together, so `{u}` is recorded as a candidate and the pair is merged.
//! After `n − 1` phases the best candidate is the global minimum.
//!
//! The key function `g` is the loss itself, so the chain needs `O(m²)`
//! evaluations per phase and `O(n³)` overall.

use std::time::{Duration, Instant};

use crate::error::{MipError, Result};
use crate::merge::MergeState;
use crate::oracle::{CountingOracle, LossOracle};
use crate::subset::{GroundSet, Subset};

/// Relative tolerance under which two loss or key values count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn improves(candidate: f64, best: f64) -> bool {
    candidate < best - TIE_TOL * (1.0 + best.abs())
}

#[inline]
pub(crate) fn ties(a: f64, b: f64) -> bool {
    !improves(a, b) && !improves(b, a)
}

/// Source of chain keys for pendent-pair construction.
///
/// All subsets passed in are flattened effective elements over the original
/// ground set.
pub trait ChainEvaluator {
    fn ground_size(&self) -> usize;
    /// The loss of the cut `(e, V∖e)`.
    fn element_loss(&mut self, element: &Subset) -> f64;
    /// Start a chain with `W = first`.
    fn begin_chain(&mut self, first: &Subset);
    /// `g(W ∪ c) − g(c)` for the current chain prefix `W`.
    fn key(&mut self, candidate: &Subset) -> f64;
    /// `W ← W ∪ element`.
    fn absorb(&mut self, element: &Subset);
    /// Distinct loss evaluations performed so far.
    fn evaluations(&self) -> u64;
}

/// Chain keys evaluated directly through a memoizing, counting oracle.
pub struct OracleChain<O> {
    oracle: CountingOracle<O>,
    prefix: Subset,
}

impl<O: LossOracle> OracleChain<O> {
    pub fn new(oracle: O) -> Self {
        let n = oracle.ground_size();
        Self { oracle: CountingOracle::new(oracle), prefix: Subset::empty(n) }
    }

    pub fn oracle(&self) -> &CountingOracle<O> {
        &self.oracle
    }
}

impl<O: LossOracle> ChainEvaluator for OracleChain<O> {
    fn ground_size(&self) -> usize {
        self.oracle.ground_size()
    }

    fn element_loss(&mut self, element: &Subset) -> f64 {
        self.oracle.evaluate(element)
    }

    fn begin_chain(&mut self, first: &Subset) {
        self.prefix = first.clone();
    }

    fn key(&mut self, candidate: &Subset) -> f64 {
        let joined = self.prefix.union(candidate);
        self.oracle.evaluate(&joined) - self.oracle.evaluate(candidate)
    }

    fn absorb(&mut self, element: &Subset) {
        self.prefix.union_with(element);
    }

    fn evaluations(&self) -> u64 {
        self.oracle.calls()
    }
}

/// A pendent pair `(t, u)` of effective indices and the chain that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendentPair {
    pub t: usize,
    pub u: usize,
    pub ordering: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub subset: Subset,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartitionResult {
    /// The reported side of the minimum cut: the smaller one, or the
    /// lexicographically smaller at equal size.
    pub subset: Subset,
    pub loss: f64,
    /// One candidate `{u}` per contraction phase (empty for exhaustive search).
    pub candidates: Vec<Candidate>,
    pub oracle_calls: u64,
    pub wall_time: Duration,
}

impl BipartitionResult {
    pub fn complement(&self) -> Subset {
        self.subset.complement()
    }

    /// True if both results describe the same cut.
    pub fn same_cut(&self, other: &Subset) -> bool {
        self.subset == *other || self.subset == other.complement()
    }
}

/// Build the greedy chain seeded at effective element `start` and return
/// its last two elements.
pub fn pendent_pair<E: ChainEvaluator>(eval: &mut E, state: &MergeState, start: usize) -> Result<PendentPair> {
    let m = state.len();
    if m < 2 {
        return Err(MipError::FewerThanTwoElements);
    }
    let elements = state.elements();
    if start >= m {
        return Err(MipError::InvalidIndex { index: start, n: m });
    }
    eval.begin_chain(&elements[start]);
    let mut ordering = Vec::with_capacity(m);
    ordering.push(start);
    // effective indices are already in lexicographic order of their flattening
    let mut remaining: Vec<usize> = (0..m).filter(|&i| i != start).collect();
    while remaining.len() > 1 {
        let mut best_pos = 0;
        let mut best_key = f64::INFINITY;
        for (pos, &c) in remaining.iter().enumerate() {
            let key = eval.key(&elements[c]);
            if pos == 0 || improves(key, best_key) {
                best_pos = pos;
                best_key = key;
            }
        }
        let v = remaining.remove(best_pos);
        ordering.push(v);
        if remaining.len() > 1 {
            eval.absorb(&elements[v]);
        }
    }
    ordering.push(remaining[0]);
    Ok(PendentPair { t: ordering[m - 2], u: ordering[m - 1], ordering })
}

fn pick_best(candidates: &[Candidate]) -> (Subset, f64) {
    let mut best: Option<(Subset, f64)> = None;
    for c in candidates {
        let side = c.subset.smaller_side();
        best = match best {
            None => Some((side, c.loss)),
            Some((s, l)) => {
                if improves(c.loss, l) || (ties(c.loss, l) && side < s) {
                    Some((side, c.loss))
                } else {
                    Some((s, l))
                }
            }
        };
    }
    best.expect("at least one candidate")
}

/// Run the full contraction recursion with any chain evaluator.
pub fn search<E: ChainEvaluator>(eval: &mut E) -> Result<BipartitionResult> {
    let n = eval.ground_size();
    if n < 2 {
        return Err(MipError::GroundSetTooSmall { n, min: 2 });
    }
    let started = Instant::now();
    let mut state = MergeState::singletons(n);
    let mut candidates = Vec::with_capacity(n - 1);
    while state.len() >= 2 {
        let pair = pendent_pair(eval, &state, 0)?;
        let subset = state.elements()[pair.u].clone();
        let loss = eval.element_loss(&subset);
        candidates.push(Candidate { subset, loss });
        state = state.merge(pair.t, pair.u)?;
    }
    let (subset, loss) = pick_best(&candidates);
    Ok(BipartitionResult { subset, loss, candidates, oracle_calls: eval.evaluations(), wall_time: started.elapsed() })
}

/// Exact minimum of a symmetric submodular oracle over all bipartitions.
///
/// `oracle_calls` counts distinct subsets evaluated (memo misses).
pub fn minimize_bipartition<O: LossOracle>(oracle: &O, ground: &GroundSet) -> Result<BipartitionResult> {
    if oracle.ground_size() != ground.len() {
        return Err(MipError::GroundSizeMismatch { expected: ground.len(), got: oracle.ground_size() });
    }
    search(&mut OracleChain::new(oracle))
}
