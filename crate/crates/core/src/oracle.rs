//! The set-function oracle contract.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;

use crate::subset::Subset;

/// A deterministic, side-effect free set function `f: 2^V -> R`.
///
/// Loss oracles report values in bits. Implementations must return
/// bit-identical values for equal subsets.
pub trait LossOracle {
    fn ground_size(&self) -> usize;
    fn evaluate(&self, s: &Subset) -> f64;
}

impl<O: LossOracle + ?Sized> LossOracle for &O {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }

    fn evaluate(&self, s: &Subset) -> f64 {
        (**self).evaluate(s)
    }
}

/// Wraps an oracle with a call counter and an optional memo table.
///
/// Only cache misses are counted. With memoization off every call is a miss.
pub struct CountingOracle<O> {
    inner: O,
    memo: Option<RefCell<HashMap<Subset, f64>>>,
    calls: Cell<u64>,
}

impl<O: LossOracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, memo: Some(RefCell::new(HashMap::new())), calls: Cell::new(0) }
    }

    pub fn without_memo(inner: O) -> Self {
        Self { inner, memo: None, calls: Cell::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }

    pub fn reset(&self) {
        self.calls.set(0);
        if let Some(m) = &self.memo {
            m.borrow_mut().clear();
        }
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: LossOracle> LossOracle for CountingOracle<O> {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }

    fn evaluate(&self, s: &Subset) -> f64 {
        if let Some(memo) = &self.memo {
            if let Some(&v) = memo.borrow().get(s) {
                return v;
            }
        }
        let v = self.inner.evaluate(s);
        self.calls.set(self.calls.get() + 1);
        if let Some(memo) = &self.memo {
            memo.borrow_mut().insert(s.clone(), v);
        }
        v
    }
}

/// Adapts a closure into an oracle.
pub struct FnOracle<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&Subset) -> f64> FnOracle<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&Subset) -> f64> LossOracle for FnOracle<F> {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn evaluate(&self, s: &Subset) -> f64 {
        (self.f)(s)
    }
}

/// `f(S) = |S|`, the canonical modular function.
#[derive(Debug, Clone, Copy)]
pub struct Cardinality(pub usize);

impl LossOracle for Cardinality {
    fn ground_size(&self) -> usize {
        self.0
    }

    fn evaluate(&self, s: &Subset) -> f64 {
        s.len() as f64
    }
}

/// Restricts an oracle over a large ground set to the elements of `map`,
/// which becomes the local ground set `{0, .., map.len()-1}`.
pub struct Restricted<O> {
    inner: O,
    map: Vec<usize>,
}

impl<O: LossOracle> Restricted<O> {
    pub fn new(inner: O, members: &Subset) -> Self {
        Self { map: members.to_vec(), inner }
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn lift(&self, local: &Subset) -> Subset {
        local.lift(self.inner.ground_size(), &self.map)
    }
}

impl<O: LossOracle> LossOracle for Restricted<O> {
    fn ground_size(&self) -> usize {
        self.map.len()
    }

    fn evaluate(&self, s: &Subset) -> f64 {
        self.inner.evaluate(&self.lift(s))
    }
}
