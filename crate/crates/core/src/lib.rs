//! Central-symmetry analysis of continuous-time Markov chains.
//!
//! A chain on `{0, …, N}` (or a symmetric window of the integers) has a
//! central symmetry when `p_{N−k,N−n}(t) = (x_n/x_k) p_{k,n}(t)` for positive
//! weights `x`. Such chains admit first-passage densities through the
//! midpoint as a plain difference of probability currents, and avoiding
//! probabilities directly from free transition probabilities.
//!
//! Modules:
//!
//! * [`chain`]: state spaces, validated generators, time grids
//! * [`transient`]: uniformization, stationary law, deviation matrix, reversal
//! * [`symmetry`]: certificate verification and detection
//! * [`passage`]: currents, first-passage densities, avoiding probabilities
//! * [`bdjump`]: closed forms for the birth-death process with jumps to 0
//! * [`similarity`]: strong-similarity transforms
//! * [`simulate`]: exact-event Monte Carlo

pub mod bdjump;
pub mod chain;
pub mod error;
pub mod passage;
pub mod quad;
pub mod similarity;
pub mod simulate;
pub mod symmetry;
pub mod table;
pub mod transient;

pub use bdjump::BdJumpModel;
pub use chain::{
    generator_from_rows, reflect_index, truncate_bdjump, validate_generator, ChainDefinition, DensityTrace,
    GeneratorMatrix, ModelDefinition, StateSpace, TimeGrid,
};
pub use error::{Error, Result};
pub use passage::{build_passage_problem, PassageProblem};
pub use similarity::SimilarityWeights;
pub use simulate::{PathCollection, PathSample, SimulationConfig};
pub use symmetry::SymmetryCertificate;
pub use transient::{StationaryDistribution, TransitionMatrixSequence};
