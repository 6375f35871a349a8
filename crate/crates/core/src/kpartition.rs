//! Minimum total-correlation k-partitions and recursive bipartition.
//!
//! For `k ≥ 3` the search splits `S` into `(U, S∖U)` by minimizing
//!
//! ```text
//! g_{k,S}(U) = H(U) + H(S∖U) − H(S)
//!            + min_{a+b=k} best(U, a) + best(S∖U, b)
//! ```
//!
//! with the same contraction search used for bipartitions, where
//! `best(T, j)` is the optimal `j`-partition loss of `T` (0 for `j = 1`).
//! Subproblems are memoized per `(T, j)`.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::error::{MipError, Result};
use crate::loss::{EntropySource, MutualInformation};
use crate::oracle::FnOracle;
use crate::queyranne::{improves, minimize_bipartition, search, OracleChain};
use crate::subset::{GroundSet, Subset};

#[derive(Debug, Clone, PartialEq)]
pub struct KPartition {
    /// Blocks sorted by their smallest element.
    pub blocks: Vec<Subset>,
    /// `Σ H(Mᵢ) − H(V)` in bits.
    pub loss: f64,
    /// Distinct entropy evaluations.
    pub oracle_calls: u64,
    pub wall_time: Duration,
}

impl KPartition {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }
}

/// True if `blocks` are nonempty, pairwise disjoint and cover `{0..n}`.
pub fn is_partition(blocks: &[Subset], n: usize) -> bool {
    let mut seen = Subset::empty(n);
    for b in blocks {
        if b.ground_size() != n || b.is_empty() || !b.is_disjoint(&seen) {
            return false;
        }
        seen.union_with(b);
    }
    seen.is_full()
}

/// `Σ H(Mᵢ) − H(V)`, the information lost by cutting along every block.
pub fn total_correlation_loss<E: EntropySource>(src: &E, blocks: &[Subset]) -> Result<f64> {
    let n = src.ground_size();
    if !is_partition(blocks, n) {
        return Err(MipError::NotAPartition);
    }
    let sum: f64 = blocks.iter().map(|b| src.entropy(b)).sum();
    Ok(sum - src.entropy(&Subset::full(n)))
}

fn sort_blocks(blocks: &mut [Subset]) {
    blocks.sort_by_key(|b| b.first());
}

/// Exact minimum-loss partition into `k` blocks.
///
/// `k = 2` is the bipartition search on mutual information. Larger `k` uses
/// the recursive split above, which is exact when the restricted loss is
/// symmetric submodular; that is verified empirically for Gaussian systems.
pub fn minimize_kpartition<E: EntropySource>(src: &E, k: usize) -> Result<KPartition> {
    let n = src.ground_size();
    if n == 0 {
        return Err(MipError::EmptyGroundSet);
    }
    if k < 2 || k > n {
        return Err(MipError::KOutOfRange { k, n });
    }
    let started = Instant::now();
    if k == 2 {
        let r = minimize_bipartition(&MutualInformation(src), &GroundSet::new(n)?)?;
        let mut blocks = vec![r.subset.clone(), r.subset.complement()];
        sort_blocks(&mut blocks);
        let loss = total_correlation_loss(src, &blocks)?;
        return Ok(KPartition { blocks, loss, oracle_calls: r.oracle_calls, wall_time: started.elapsed() });
    }
    let solver = Solver::new(src);
    let best = solver.best(&Subset::full(n), k).expect("k <= n");
    let mut blocks = best.blocks.clone();
    sort_blocks(&mut blocks);
    let loss = total_correlation_loss(src, &blocks)?;
    Ok(KPartition { blocks, loss, oracle_calls: solver.calls.get(), wall_time: started.elapsed() })
}

struct Best {
    loss: f64,
    blocks: Vec<Subset>,
}

struct Solver<'a, E> {
    src: &'a E,
    entropy: RefCell<HashMap<Subset, f64>>,
    memo: RefCell<HashMap<(Subset, usize), Rc<Best>>>,
    calls: Cell<u64>,
}

impl<'a, E: EntropySource> Solver<'a, E> {
    fn new(src: &'a E) -> Self {
        Self { src, entropy: RefCell::default(), memo: RefCell::default(), calls: Cell::new(0) }
    }

    fn h(&self, s: &Subset) -> f64 {
        if let Some(&v) = self.entropy.borrow().get(s) {
            return v;
        }
        let v = self.src.entropy(s);
        self.calls.set(self.calls.get() + 1);
        self.entropy.borrow_mut().insert(s.clone(), v);
        v
    }

    /// Best split of `(u, rest)` into `a + b = k` blocks: `(loss, a)`.
    fn best_split(&self, u: &Subset, rest: &Subset, k: usize) -> Option<(f64, usize)> {
        let mut out: Option<(f64, usize)> = None;
        for a in 1..k {
            let b = k - a;
            if a > u.len() || b > rest.len() {
                continue;
            }
            let (Some(x), Some(y)) = (self.best(u, a), self.best(rest, b)) else { continue };
            let loss = x.loss + y.loss;
            if out.is_none_or(|(l, _)| improves(loss, l)) {
                out = Some((loss, a));
            }
        }
        out
    }

    /// `g_{k,s}(u)` for `u` a proper subset of `s`.
    fn split_objective(&self, s: &Subset, u: &Subset, k: usize) -> f64 {
        let rest = s.difference(u);
        let cut = self.h(u) + self.h(&rest) - self.h(s);
        let inner = self.best_split(u, &rest, k).map_or(f64::INFINITY, |(l, _)| l);
        cut + inner
    }

    fn best(&self, s: &Subset, k: usize) -> Option<Rc<Best>> {
        let m = s.len();
        if k == 0 || m < k {
            return None;
        }
        if k == 1 {
            return Some(Rc::new(Best { loss: 0.0, blocks: vec![s.clone()] }));
        }
        if let Some(b) = self.memo.borrow().get(&(s.clone(), k)) {
            return Some(b.clone());
        }
        let result = if m == k {
            let blocks: Vec<Subset> =
                s.iter().map(|i| Subset::singleton(s.ground_size(), i).expect("member")).collect();
            let loss = blocks.iter().map(|b| self.h(b)).sum::<f64>() - self.h(s);
            Best { loss, blocks }
        } else {
            let members = s.to_vec();
            let n = s.ground_size();
            let lift = |local: &Subset| local.lift(n, &members);
            let objective = FnOracle::new(m, |local: &Subset| {
                if !local.is_proper() {
                    return 0.0;
                }
                self.split_objective(s, &lift(local), k)
            });
            let r = search(&mut OracleChain::new(&objective)).expect("m >= 2");
            let u = lift(&r.subset);
            let rest = s.difference(&u);
            let (_, a) = self.best_split(&u, &rest, k).expect("feasible split");
            let left = self.best(&u, a).expect("feasible");
            let right = self.best(&rest, k - a).expect("feasible");
            let cut = self.h(&u) + self.h(&rest) - self.h(s);
            let mut blocks = left.blocks.clone();
            blocks.extend(right.blocks.iter().cloned());
            Best { loss: cut + left.loss + right.loss, blocks }
        };
        let rc = Rc::new(result);
        self.memo.borrow_mut().insert((s.clone(), k), rc.clone());
        Some(rc)
    }
}

/// A node of a recursive bipartition tree.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyNode {
    pub subset: Subset,
    /// Loss of the split below this node; `None` for leaves.
    pub cut_loss: Option<f64>,
    pub children: Vec<HierarchyNode>,
}

impl HierarchyNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Leaf subsets in left-to-right order.
    pub fn leaves(&self) -> Vec<Subset> {
        if self.is_leaf() {
            return vec![self.subset.clone()];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }
}

/// Recursively split each block along its own minimum-information cut
/// `I(U; S∖U)` until `stop(block, depth)` holds or the block is a singleton.
pub fn hierarchical_bipartition<E, F>(src: &E, stop: F) -> Result<HierarchyNode>
where
    E: EntropySource,
    F: Fn(&Subset, usize) -> bool,
{
    let n = src.ground_size();
    if n < 2 {
        return Err(MipError::GroundSetTooSmall { n, min: 2 });
    }
    split_node(src, Subset::full(n), 0, &stop)
}

fn split_node<E, F>(src: &E, s: Subset, depth: usize, stop: &F) -> Result<HierarchyNode>
where
    E: EntropySource,
    F: Fn(&Subset, usize) -> bool,
{
    if s.len() < 2 || stop(&s, depth) {
        return Ok(HierarchyNode { subset: s, cut_loss: None, children: Vec::new() });
    }
    let members = s.to_vec();
    let n = s.ground_size();
    let lift = |local: &Subset| local.lift(n, &members);
    let h_s = src.entropy(&s);
    let local = FnOracle::new(members.len(), |u: &Subset| {
        if !u.is_proper() {
            return 0.0;
        }
        let g = lift(u);
        src.entropy(&g) + src.entropy(&s.difference(&g)) - h_s
    });
    let r = minimize_bipartition(&local, &GroundSet::new(members.len())?)?;
    let mut parts = [lift(&r.subset), lift(&r.subset.complement())];
    parts.sort_by_key(|b| b.first());
    let [left, right] = parts;
    let children = vec![split_node(src, left, depth + 1, stop)?, split_node(src, right, depth + 1, stop)?];
    Ok(HierarchyNode { subset: s, cut_loss: Some(r.loss), children })
}

/// Greedy `k` blocks: repeatedly split the block whose own minimum cut is
/// cheapest. Not optimal in general.
pub fn greedy_kpartition<E: EntropySource>(src: &E, k: usize) -> Result<KPartition> {
    let n = src.ground_size();
    if n == 0 {
        return Err(MipError::EmptyGroundSet);
    }
    if k < 2 || k > n {
        return Err(MipError::KOutOfRange { k, n });
    }
    let started = Instant::now();
    let mut calls = 0;
    let mut split = |s: &Subset| -> Result<(f64, Subset, Subset)> {
        let members = s.to_vec();
        let n = s.ground_size();
        let h_s = src.entropy(s);
        let local = FnOracle::new(members.len(), |u: &Subset| {
            if !u.is_proper() {
                return 0.0;
            }
            let g = u.lift(n, &members);
            src.entropy(&g) + src.entropy(&s.difference(&g)) - h_s
        });
        let r = minimize_bipartition(&local, &GroundSet::new(members.len())?)?;
        calls += r.oracle_calls;
        let left = r.subset.lift(n, &members);
        let right = s.difference(&left);
        Ok((r.loss, left, right))
    };
    let full = Subset::full(n);
    let mut blocks = vec![(full.clone(), Some(split(&full)?))];
    while blocks.len() < k {
        let (pos, _) = blocks
            .iter()
            .enumerate()
            .filter_map(|(i, (_, c))| c.as_ref().map(|c| (i, c.0)))
            .fold(None, |best: Option<(usize, f64)>, (i, l)| match best {
                Some((_, bl)) if !improves(l, bl) => best,
                _ => Some((i, l)),
            })
            .expect("k <= n leaves a splittable block");
        let (_, cut) = blocks.remove(pos);
        let (_, left, right) = cut.expect("splittable");
        for part in [left, right] {
            let next = if part.len() >= 2 { Some(split(&part)?) } else { None };
            blocks.push((part, next));
        }
    }
    let mut blocks: Vec<Subset> = blocks.into_iter().map(|(b, _)| b).collect();
    sort_blocks(&mut blocks);
    let loss = total_correlation_loss(src, &blocks)?;
    Ok(KPartition { blocks, loss, oracle_calls: calls, wall_time: started.elapsed() })
}

/// Stop predicate that splits down to pairs.
pub fn stop_at_pairs(s: &Subset, _depth: usize) -> bool {
    s.len() <= 2
}

/// Stop predicate limiting the tree to `max_depth` levels of splits.
pub fn stop_at_depth(max_depth: usize) -> impl Fn(&Subset, usize) -> bool {
    move |_, depth| depth >= max_depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exhaustive::exhaustive_kpartition;
    use crate::loss::GaussianSystem;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_system(n: usize, seed: u64) -> GaussianSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        GaussianSystem::new(&a * a.transpose() + DMatrix::identity(n, n) * 0.1).unwrap()
    }

    fn block_diagonal(sizes: &[usize], rho: f64) -> GaussianSystem {
        let n: usize = sizes.iter().sum();
        let mut s = DMatrix::identity(n, n);
        let mut start = 0;
        for &b in sizes {
            for i in start..start + b {
                for j in start..start + b {
                    if i != j {
                        s[(i, j)] = rho;
                    }
                }
            }
            start += b;
        }
        GaussianSystem::new(s).unwrap()
    }

    #[test]
    fn three_blocks_recovered() {
        let sys = block_diagonal(&[2, 3, 2], 0.5);
        let r = minimize_kpartition(&sys, 3).unwrap();
        let want: Vec<Vec<usize>> = vec![vec![0, 1], vec![2, 3, 4], vec![5, 6]];
        assert_eq!(r.blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>(), want);
        assert!(r.loss.abs() < 1e-12);
    }

    #[test]
    fn matches_exhaustive_on_random_systems() {
        for seed in 0..10 {
            let n = 4 + (seed as usize % 4);
            let sys = random_system(n, 100 + seed);
            let fast = minimize_kpartition(&sys, 3).unwrap();
            let slow = exhaustive_kpartition(&sys, 3).unwrap();
            assert!((fast.loss - slow.loss).abs() < 1e-9, "seed {seed}: {} vs {}", fast.loss, slow.loss);
        }
    }

    #[test]
    fn k_equal_n_is_singletons() {
        let sys = random_system(4, 1);
        let r = minimize_kpartition(&sys, 4).unwrap();
        assert_eq!(r.blocks, (0..4).map(|i| Subset::singleton(4, i).unwrap()).collect::<Vec<_>>());
    }

    #[test]
    fn k_two_is_bipartition() {
        let sys = random_system(6, 2);
        let r = minimize_kpartition(&sys, 2).unwrap();
        let b = minimize_bipartition(&sys.mi_oracle(), &GroundSet::new(6).unwrap()).unwrap();
        assert!((r.loss - b.loss).abs() < 1e-12);
        assert!(r.blocks.contains(&b.subset));
    }

    #[test]
    fn invalid_k() {
        let sys = random_system(4, 3);
        assert_eq!(minimize_kpartition(&sys, 1).unwrap_err(), MipError::KOutOfRange { k: 1, n: 4 });
        assert_eq!(minimize_kpartition(&sys, 5).unwrap_err(), MipError::KOutOfRange { k: 5, n: 4 });
    }

    #[test]
    fn total_correlation_examples() {
        let sys = GaussianSystem::new(DMatrix::identity(3, 3)).unwrap();
        let blocks: Vec<Subset> = (0..3).map(|i| Subset::singleton(3, i).unwrap()).collect();
        assert_eq!(total_correlation_loss(&sys, &blocks).unwrap(), 0.0);
        let overlap = vec![Subset::from_indices(3, [0, 1]).unwrap(), Subset::from_indices(3, [1, 2]).unwrap()];
        assert_eq!(total_correlation_loss(&sys, &overlap), Err(MipError::NotAPartition));
        let short = vec![Subset::singleton(3, 0).unwrap()];
        assert_eq!(total_correlation_loss(&sys, &short), Err(MipError::NotAPartition));
    }

    #[test]
    fn call_count_bound() {
        for n in [5, 7, 9] {
            let sys = random_system(n, n as u64);
            let r = minimize_kpartition(&sys, 3).unwrap();
            assert!(r.oracle_calls <= (n as u64).pow(6));
        }
    }

    #[test]
    fn greedy_finds_separable_blocks() {
        let sys = block_diagonal(&[3, 2, 3], 0.4);
        let g = greedy_kpartition(&sys, 3).unwrap();
        assert_eq!(
            g.blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>(),
            vec![vec![0, 1, 2], vec![3, 4], vec![5, 6, 7]]
        );
        let r = random_system(7, 5);
        let greedy = greedy_kpartition(&r, 3).unwrap();
        let exact = minimize_kpartition(&r, 3).unwrap();
        assert!(greedy.loss >= exact.loss - 1e-9);
    }

    #[test]
    fn hierarchy_of_blocks() {
        let sys = block_diagonal(&[2, 2, 2, 2], 0.6);
        let tree = hierarchical_bipartition(&sys, stop_at_pairs).unwrap();
        let leaves: Vec<Vec<usize>> = tree.leaves().iter().map(|s| s.to_vec()).collect();
        let mut sorted = leaves.clone();
        sorted.sort();
        assert_eq!(sorted, vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
        assert!(tree.cut_loss.unwrap().abs() < 1e-12);
        let shallow = hierarchical_bipartition(&sys, stop_at_depth(1)).unwrap();
        assert_eq!(shallow.leaves().len(), 2);
        assert_eq!(shallow.depth(), 2);
    }
}
