//! Exact minimum-information partitions of multivariate systems.

pub use nalgebra;

pub mod datagen;
pub mod error;
pub mod exhaustive;
pub mod fastpath;
pub mod kpartition;
pub mod linalg;
pub mod loss;
pub mod merge;
pub mod oracle;
pub mod properties;
pub mod queyranne;
pub mod scaling;
pub mod subset;

pub use datagen::{
    cml_run, cml_sweep, gen_block_correlated, gen_random_gaussian, simulate_cml, simulate_cml_from, BlockParams,
    CmlParams, CmlRun, SweepPoint, TimeSeries,
};
pub use error::{MipError, Result};
pub use exhaustive::{
    exhaustive_bipartition, exhaustive_bipartition_gaussian, exhaustive_kpartition, stirling2, SetPartitions,
};
pub use fastpath::{cross_checked_bipartition, minimize_bipartition_gaussian, CrossCheck, GaussianChain};
pub use kpartition::{
    greedy_kpartition, hierarchical_bipartition, minimize_kpartition, total_correlation_loss, HierarchyNode, KPartition,
};
pub use linalg::{logdet_psd, JitterPolicy, LogDet};
pub use loss::{
    covariance_from_samples, discrete_entropy, discrete_mi, gaussian_entropy, gaussian_mi, sample_covariance,
    DiscreteSystem, Entropy, EntropySource, GaussianSystem, MutualInformation,
};
pub use merge::MergeState;
pub use oracle::{Cardinality, CountingOracle, FnOracle, LossOracle, Restricted};
pub use queyranne::{
    minimize_bipartition, pendent_pair, BipartitionResult, Candidate, ChainEvaluator, OracleChain, PendentPair,
};
pub use subset::{GroundSet, Subset};
