//! Brute-force baselines: every bipartition, every k-partition.

use std::f64::consts::LOG2_E;
use std::time::Instant;

use crate::error::{MipError, Result};
use crate::kpartition::KPartition;
use crate::linalg::spd_inverse;
use crate::loss::{EntropySource, GaussianSystem};
use crate::oracle::LossOracle;
use crate::queyranne::{improves, ties, BipartitionResult};
use crate::subset::{GroundSet, Subset};

/// Default size cap for exhaustive bipartition search.
pub const MAX_EXHAUSTIVE_BIPARTITION: usize = 24;
/// Default size cap for exhaustive k-partition search.
pub const MAX_EXHAUSTIVE_KPARTITION: usize = 12;

struct Best {
    subset: Option<Subset>,
    loss: f64,
}

impl Best {
    fn new() -> Self {
        Self { subset: None, loss: f64::INFINITY }
    }

    fn offer(&mut self, s: &Subset, loss: f64) {
        match &self.subset {
            None => {
                self.subset = Some(s.smaller_side());
                self.loss = loss;
            }
            Some(cur) => {
                if improves(loss, self.loss) {
                    self.subset = Some(s.smaller_side());
                    self.loss = loss;
                } else if ties(loss, self.loss) {
                    let side = s.smaller_side();
                    if side < *cur {
                        self.subset = Some(side);
                        self.loss = loss;
                    }
                }
            }
        }
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n < 2 {
        return Err(MipError::GroundSetTooSmall { n, min: 2 });
    }
    if n > cap {
        return Err(MipError::TooLarge { n, cap });
    }
    Ok(())
}

/// Evaluate every bipartition, in Gray-code order over subsets not
/// containing element 0. Uses `2^{n−1} − 1` evaluations, without a memo.
pub fn exhaustive_bipartition<O: LossOracle>(oracle: &O, ground: &GroundSet) -> Result<BipartitionResult> {
    exhaustive_bipartition_capped(oracle, ground, MAX_EXHAUSTIVE_BIPARTITION)
}

pub fn exhaustive_bipartition_capped<O: LossOracle>(
    oracle: &O,
    ground: &GroundSet,
    cap: usize,
) -> Result<BipartitionResult> {
    let n = ground.len();
    if oracle.ground_size() != n {
        return Err(MipError::GroundSizeMismatch { expected: n, got: oracle.ground_size() });
    }
    check_cap(n, cap)?;
    let started = Instant::now();
    let mut best = Best::new();
    let mut current = Subset::empty(n);
    let total: u64 = 1 << (n - 1);
    for i in 1..total {
        // Gray code i ^ (i >> 1) differs from its predecessor in bit trailing_zeros(i)
        let element = i.trailing_zeros() as usize + 1;
        if current.contains(element) {
            current.remove(element);
        } else {
            current.insert(element);
        }
        best.offer(&current, oracle.evaluate(&current));
    }
    Ok(BipartitionResult {
        subset: best.subset.expect("n >= 2"),
        loss: best.loss,
        candidates: Vec::new(),
        oracle_calls: total - 1,
        wall_time: started.elapsed(),
    })
}

/// Exhaustive bipartition of a Gaussian system in amortized constant time
/// per cut.
///
/// A depth-first search decides elements `1..n` in turn. Including an
/// element conditions the remaining covariance and precision on it, so a
/// leaf's loss `log|Σ_S| + log|(Σ⁻¹)_S|` is the running sum of pivots.
/// Leaves are visited in reflected Gray order.
pub fn exhaustive_bipartition_gaussian(sys: &GaussianSystem) -> Result<BipartitionResult> {
    exhaustive_bipartition_gaussian_capped(sys, MAX_EXHAUSTIVE_BIPARTITION)
}

pub fn exhaustive_bipartition_gaussian_capped(sys: &GaussianSystem, cap: usize) -> Result<BipartitionResult> {
    let n = sys.n();
    check_cap(n, cap)?;
    let started = Instant::now();
    let precision = spd_inverse(sys.effective(), n).ok_or(MipError::Singular { jitter: sys.jitter() })?;
    // Level d holds the undecided block {d..n} of both conditioned matrices,
    // packed as two (n−d)² row-major squares.
    let mut levels: Vec<Vec<f64>> = (0..=n).map(|d| vec![0.0; 2 * (n - d) * (n - d)]).collect();
    {
        let m = n - 1;
        let top = &mut levels[1];
        let eff = sys.effective();
        for i in 0..m {
            for j in 0..m {
                top[i * m + j] = eff[(i + 1) * n + j + 1];
                top[m * m + i * m + j] = precision[(i + 1) * n + j + 1];
            }
        }
    }
    let mut dfs = Dfs { sys, n, levels, current: Subset::empty(n), best: Best::new(), leaves: 0 };
    dfs.visit(1, 0.0, false);
    Ok(BipartitionResult {
        subset: dfs.best.subset.expect("n >= 2"),
        loss: dfs.best.loss,
        candidates: Vec::new(),
        oracle_calls: dfs.leaves,
        wall_time: started.elapsed(),
    })
}

struct Dfs<'a> {
    sys: &'a GaussianSystem,
    n: usize,
    levels: Vec<Vec<f64>>,
    current: Subset,
    best: Best,
    leaves: u64,
}

impl Dfs<'_> {
    /// Decide element `d` given the log-determinant sum `ln` so far.
    fn visit(&mut self, d: usize, ln: f64, reflected: bool) {
        if d == self.n {
            if !self.current.is_empty() {
                self.leaves += 1;
                let loss = ln * LOG2_E;
                self.best.offer(&self.current, loss);
            }
            return;
        }
        let order = if reflected { [true, false] } else { [false, true] };
        for (child, include) in order.into_iter().enumerate() {
            let next_reflected = child == 1;
            if include {
                match self.include(d) {
                    Some(step) => {
                        self.current.insert(d);
                        self.visit(d + 1, ln + step, next_reflected);
                        self.current.remove(d);
                    }
                    None => {
                        self.current.insert(d);
                        self.visit_direct(d + 1);
                        self.current.remove(d);
                    }
                }
            } else {
                self.exclude(d);
                self.visit(d + 1, ln, next_reflected);
            }
        }
    }

    /// Copy level `d`'s trailing block to level `d + 1` unchanged.
    fn exclude(&mut self, d: usize) {
        let m = self.n - d;
        let (head, tail) = self.levels.split_at_mut(d + 1);
        let (src, dst) = (&head[d], &mut tail[0]);
        for half in 0..2 {
            let (s0, d0) = (half * m * m, half * (m - 1) * (m - 1));
            for i in 1..m {
                let from = &src[s0 + i * m + 1..s0 + i * m + m];
                dst[d0 + (i - 1) * (m - 1)..d0 + i * (m - 1)].copy_from_slice(from);
            }
        }
    }

    /// Condition level `d` on its first element into level `d + 1`; returns
    /// the sum of the two natural-log pivots.
    fn include(&mut self, d: usize) -> Option<f64> {
        let m = self.n - d;
        let (head, tail) = self.levels.split_at_mut(d + 1);
        let (src, dst) = (&head[d], &mut tail[0]);
        let mut total = 0.0;
        for half in 0..2 {
            let (s0, d0) = (half * m * m, half * (m - 1) * (m - 1));
            let pivot = src[s0];
            if pivot <= 0.0 || !pivot.is_finite() {
                return None;
            }
            total += pivot.ln();
            for i in 1..m {
                let f = src[s0 + i * m] / pivot;
                let from = &src[s0 + i * m + 1..s0 + i * m + m];
                let first = &src[s0 + 1..s0 + m];
                let out = &mut dst[d0 + (i - 1) * (m - 1)..d0 + i * (m - 1)];
                for ((o, &a), &b) in out.iter_mut().zip(from).zip(first) {
                    *o = a - f * b;
                }
            }
        }
        Some(total)
    }

    /// Finish the subtree below a failed pivot by direct evaluation.
    #[cold]
    fn visit_direct(&mut self, d: usize) {
        if d == self.n {
            self.leaves += 1;
            let s = &self.current;
            let loss = self.sys.logdet(s) + self.sys.logdet(&s.complement()) - self.sys.logdet_full();
            self.best.offer(s, loss);
            return;
        }
        self.visit_direct(d + 1);
        self.current.insert(d);
        self.visit_direct(d + 1);
        self.current.remove(d);
    }
}

/// Restricted growth strings of length `n` with exactly `k` distinct values.
///
/// Yields each set partition of `{0..n}` into `k` blocks once; `a[i]` is the
/// block of element `i` and `a[0] = 0`.
pub struct SetPartitions {
    n: usize,
    k: usize,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl SetPartitions {
    pub fn new(n: usize, k: usize) -> Self {
        let done = k == 0 || k > n;
        Self { n, k, current: vec![0; n], started: false, done }
    }

    fn distinct(&self) -> usize {
        self.current.iter().max().map_or(0, |m| m + 1)
    }

    fn advance(&mut self) -> bool {
        // next restricted growth string with values below k
        let mut prefix_max = vec![0usize; self.n];
        for i in 1..self.n {
            prefix_max[i] = prefix_max[i - 1].max(self.current[i - 1]);
        }
        for i in (1..self.n).rev() {
            if self.current[i] < self.k - 1 && self.current[i] <= prefix_max[i] {
                self.current[i] += 1;
                for x in &mut self.current[i + 1..] {
                    *x = 0;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for SetPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        loop {
            if self.started {
                if !self.advance() {
                    self.done = true;
                    return None;
                }
            } else {
                self.started = true;
            }
            if self.distinct() == self.k {
                return Some(self.current.clone());
            }
        }
    }
}

/// Stirling number of the second kind `S(n, k)`.
pub fn stirling2(n: usize, k: usize) -> u128 {
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for _ in 0..n {
        for j in (1..=k).rev() {
            row[j] = j as u128 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[k]
}

/// Minimum total-correlation k-partition by enumerating all `S(n, k)`
/// partitions.
pub fn exhaustive_kpartition<E: EntropySource>(src: &E, k: usize) -> Result<KPartition> {
    exhaustive_kpartition_capped(src, k, MAX_EXHAUSTIVE_KPARTITION)
}

pub fn exhaustive_kpartition_capped<E: EntropySource>(src: &E, k: usize, cap: usize) -> Result<KPartition> {
    let n = src.ground_size();
    if n == 0 {
        return Err(MipError::EmptyGroundSet);
    }
    if k < 2 || k > n {
        return Err(MipError::KOutOfRange { k, n });
    }
    if n > cap || n >= 64 {
        return Err(MipError::TooLarge { n, cap });
    }
    let started = Instant::now();
    let mut table = vec![f64::NAN; 1 << n];
    table[0] = 0.0;
    let mut calls = 0u64;
    let mut entropy = |mask: usize| {
        if table[mask].is_nan() {
            table[mask] = src.entropy(&Subset::from_mask(n, mask as u64));
            calls += 1;
        }
        table[mask]
    };
    let h_full = entropy((1 << n) - 1);
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut masks = vec![0usize; k];
    for rgs in SetPartitions::new(n, k) {
        masks.iter_mut().for_each(|m| *m = 0);
        for (i, &b) in rgs.iter().enumerate() {
            masks[b] |= 1 << i;
        }
        let loss = masks.iter().map(|&m| entropy(m)).sum::<f64>() - h_full;
        // ties keep the first partition in RGS order
        if best.as_ref().is_none_or(|(_, l)| improves(loss, *l)) {
            best = Some((masks.clone(), loss));
        }
    }
    let (masks, loss) = best.expect("k <= n");
    let blocks = masks.iter().map(|&m| Subset::from_mask(n, m as u64)).collect();
    Ok(KPartition { blocks, loss, oracle_calls: calls, wall_time: started.elapsed() })
}
