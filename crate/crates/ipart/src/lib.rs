//! Informed random partition models.
//!
//! A CRP-based prior centered on a user-supplied initial partition with
//! per-unit adherence probabilities, extended to temporally dependent
//! partition sequences, together with exact small-m enumeration, Monte Carlo
//! prior simulation, MCMC posterior inference under Gaussian hierarchical
//! likelihoods, two rival informed priors (CPP, LSP), and partition
//! summarization (co-clustering, VI-loss point estimates, LPML, WAIC).

pub mod config;
pub mod error;
pub mod likelihood;
pub mod mcmc;
pub mod numeric;
pub mod partition;
pub mod priors;
pub mod seed;
pub mod summaries;
pub mod synth;
pub mod temporal;

pub use error::{Error, Result};
pub use partition::{
    adjusted_rand_index, bell, compatible_set, enumerate_partitions, is_compatible,
    variation_of_information, ContingencyTable, GammaVector, Partition, ReducedPartition,
};
