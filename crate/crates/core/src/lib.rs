//! Active k-correlation clustering with size-biased pair queries.
//!
//! Pair labels ("cluster together" / "keep apart") are revealed through a
//! counting [`oracle::PairOracle`]. Around a pivotal clustering,
//! [`srra::draw_samples`] queries pairs with a bias toward small clusters and
//! yields an unbiased estimate of how much any other clustering would change
//! the disagreement cost; [`optimizer::srra_loop`] repeatedly minimizes that
//! estimate and moves the pivot.

pub mod clustering;
pub mod error;
pub mod io;
pub mod optimizer;
pub mod oracle;
pub mod seed;
pub mod srra;

pub use clustering::{clustering_distance, cost, pair_cost, same_cluster, Clustering, FullGraph, PairKey};
pub use error::{Error, Result};
pub use optimizer::{srra_loop, ExperimentTrace, LoopConfig, Sampler};
pub use oracle::{generate_planted, LabelSource, PairLabel, PairOracle, PlantedInstance};
pub use srra::{draw_samples, estimate_regret, exact_regret, SampleSet, SrraParams};
