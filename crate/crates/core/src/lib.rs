//! Random partial orders for causal set experiments.
//!
//! * [`poset`]: exact finite-poset algorithms and small-n oracles.
//! * [`sprinkle`]: Poisson and binomial point processes in the unit cube and
//!   in Minkowski causal diamonds, with their induced orders.
//! * [`growth`]: classical sequential growth, transitive percolation, and
//!   exact covariance / Bell-causality verifiers.
//! * [`invariance`]: the golden-ratio ladder process, uniform-extension
//!   oracles and finite `ν^k` kernels.
//! * [`uniform`]: random `d`-dimensional orders, swappable pairs, 3-layer
//!   posets, poset counts and the semiorder poson.
//! * [`experiment`]: seeded, replayable experiment records.

pub mod experiment;
pub mod growth;
pub mod invariance;
pub mod poset;
pub mod rng;
pub mod sprinkle;
pub mod stats;
pub mod uniform;

pub use poset::{BigCount, LabelledPoset, Poset, PosetError};
