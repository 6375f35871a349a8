//! Randomized checks of submodularity, symmetry and diminishing returns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::LossOracle;
use crate::subset::{GroundSet, Subset};

/// A single failed check: the sets involved and the signed margin.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub sets: Vec<Subset>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub trials: usize,
    pub violations: Vec<Violation>,
    /// Most negative margin seen among violations (0 if none). For the
    /// symmetry check this is the largest deviation instead.
    pub max_violation: f64,
    pub min_margin: f64,
    pub max_margin: f64,
}

impl PropertyReport {
    fn new(trials: usize) -> Self {
        Self {
            trials,
            violations: Vec::new(),
            max_violation: 0.0,
            min_margin: f64::INFINITY,
            max_margin: f64::NEG_INFINITY,
        }
    }

    fn observe(&mut self, margin: f64) {
        self.min_margin = self.min_margin.min(margin);
        self.max_margin = self.max_margin.max(margin);
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn random_subset(rng: &mut impl Rng, n: usize) -> Subset {
    let mut s = Subset::empty(n);
    for i in 0..n {
        if rng.random::<bool>() {
            s.insert(i);
        }
    }
    s
}

/// Checks `f(X) + f(Y) − f(X∪Y) − f(X∩Y) ≥ −tol` on uniformly random pairs.
pub fn check_submodular<O: LossOracle>(
    oracle: &O,
    ground: &GroundSet,
    trials: usize,
    tol: f64,
    seed: u64,
) -> PropertyReport {
    let n = ground.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport::new(trials);
    for _ in 0..trials {
        let x = random_subset(&mut rng, n);
        let y = random_subset(&mut rng, n);
        let margin = oracle.evaluate(&x) + oracle.evaluate(&y)
            - oracle.evaluate(&x.union(&y))
            - oracle.evaluate(&x.intersection(&y));
        report.observe(margin);
        if margin < -tol {
            report.max_violation = report.max_violation.min(margin);
            report.violations.push(Violation { sets: vec![x, y], margin });
        }
    }
    report
}

/// Checks `|f(S) − f(V∖S)| ≤ tol` on uniformly random subsets.
pub fn check_symmetric<O: LossOracle>(
    oracle: &O,
    ground: &GroundSet,
    trials: usize,
    tol: f64,
    seed: u64,
) -> PropertyReport {
    let n = ground.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport::new(trials);
    for _ in 0..trials {
        let s = random_subset(&mut rng, n);
        let margin = oracle.evaluate(&s) - oracle.evaluate(&s.complement());
        report.observe(margin);
        if margin.abs() > tol {
            report.max_violation = report.max_violation.max(margin.abs());
            report.violations.push(Violation { sets: vec![s], margin });
        }
    }
    report
}

/// Checks `f(X∪z) − f(X) ≥ f(Y∪z) − f(Y) − tol` for random nested
/// `X ⊆ Y` and `z ∉ Y`. Trials where `Y` is the full set are redrawn.
pub fn check_diminishing_returns<O: LossOracle>(
    oracle: &O,
    ground: &GroundSet,
    trials: usize,
    tol: f64,
    seed: u64,
) -> PropertyReport {
    let n = ground.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport::new(trials);
    if n < 1 {
        return report;
    }
    let mut done = 0;
    while done < trials {
        let y = random_subset(&mut rng, n);
        let outside: Vec<usize> = y.complement().iter().collect();
        if outside.is_empty() {
            continue;
        }
        let z = outside[rng.random_range(0..outside.len())];
        let mut x = Subset::empty(n);
        for i in y.iter() {
            if rng.random::<bool>() {
                x.insert(i);
            }
        }
        let mut xz = x.clone();
        xz.insert(z);
        let mut yz = y.clone();
        yz.insert(z);
        let margin = (oracle.evaluate(&xz) - oracle.evaluate(&x)) - (oracle.evaluate(&yz) - oracle.evaluate(&y));
        report.observe(margin);
        if margin < -tol {
            report.max_violation = report.max_violation.min(margin);
            report.violations.push(Violation { sets: vec![x, y, Subset::from_indices(n, [z]).unwrap()], margin });
        }
        done += 1;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{Entropy, GaussianSystem, MutualInformation};
    use crate::oracle::{Cardinality, FnOracle};
    use nalgebra::DMatrix;
    use rand_distr::StandardNormal;

    fn random_system(n: usize, seed: u64) -> GaussianSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        GaussianSystem::new(&a * a.transpose() + DMatrix::identity(n, n) * 0.1).unwrap()
    }

    #[test]
    fn gaussian_mi_is_submodular_and_symmetric() {
        let sys = random_system(8, 1);
        let g = GroundSet::new(8).unwrap();
        let sub = check_submodular(&sys.mi_oracle(), &g, 1000, 1e-9, 7);
        assert!(sub.passed(), "{:?}", sub.violations.first());
        assert_eq!(sub.max_violation, 0.0);
        let sym = check_symmetric(&sys.mi_oracle(), &g, 1000, 1e-9, 7);
        assert!(sym.passed());
    }

    #[test]
    fn cardinality_is_modular() {
        let g = GroundSet::new(12).unwrap();
        let r = check_submodular(&Cardinality(12), &g, 100, 0.0, 3);
        assert!(r.passed());
        assert_eq!(r.min_margin, 0.0);
        assert_eq!(r.max_margin, 0.0);
    }

    #[test]
    fn squared_cardinality_is_caught() {
        // Brute force over all pairs of subsets of {0,1,2}: the pair ({0},{1,2})
        // gives 1 + 4 - 9 - 0 = -4.
        let sq = FnOracle::new(3, |s: &Subset| (s.len() * s.len()) as f64);
        let mut worst = 0.0f64;
        for x in 0..8u64 {
            for y in 0..8u64 {
                let (a, b) = (Subset::from_mask(3, x), Subset::from_mask(3, y));
                let m =
                    sq.evaluate(&a) + sq.evaluate(&b) - sq.evaluate(&a.union(&b)) - sq.evaluate(&a.intersection(&b));
                worst = worst.min(m);
            }
        }
        assert_eq!(worst, -4.0);
        let r = check_submodular(&sq, &GroundSet::new(3).unwrap(), 200, 1e-9, 1);
        assert!(!r.passed());
        assert!(r.max_violation <= -2.0 && r.max_violation >= -4.0);
    }

    #[test]
    fn entropy_is_not_symmetric() {
        let sys = random_system(5, 4);
        let e = Entropy(&sys);
        let s = Subset::from_indices(5, [0, 1]).unwrap();
        assert!((e.evaluate(&s) - e.evaluate(&s.complement())).abs() > 1e-6);
        let r = check_symmetric(&e, &GroundSet::new(5).unwrap(), 100, 1e-9, 2);
        assert!(!r.passed());
    }

    #[test]
    fn constant_is_symmetric() {
        let c = FnOracle::new(6, |_: &Subset| 2.5);
        assert!(check_symmetric(&c, &GroundSet::new(6).unwrap(), 50, 0.0, 0).passed());
    }

    #[test]
    fn gaussian_entropy_has_diminishing_returns() {
        let sys = random_system(7, 9);
        let r = check_diminishing_returns(&Entropy(&sys), &GroundSet::new(7).unwrap(), 2000, 1e-9, 5);
        assert!(r.passed());
        let mi = MutualInformation(&sys);
        assert!(check_submodular(&mi, &GroundSet::new(7).unwrap(), 2000, 1e-9, 6).passed());
    }
}
