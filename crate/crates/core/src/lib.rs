//! Density-ratio Bayesian optimization with graph-based semi-supervised classifiers.
//!
//! Observations are split at a quantile threshold into a "good" class and the
//! rest. Labels are propagated over a similarity graph that also contains
//! unlabeled points, and the next query maximizes the resulting class-1
//! probability. Unlabeled points come either from truncated normals around the
//! observations or from a fixed candidate pool.
//!
//! ```
//! use drebo::{bench, optimizer, BetaMode, RunConfig};
//!
//! let branin = bench::branin_benchmark();
//! let config = RunConfig {
//!     iterations: 3,
//!     n_starts: 10,
//!     n_unlabeled: 20,
//!     beta: BetaMode::Fixed(0.5),
//!     ..RunConfig::default()
//! };
//! let record = optimizer::run(&config, branin.space(), &branin, None).unwrap();
//! assert_eq!(record.len(), config.n_init + config.iterations);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod bench;
pub mod config;
pub mod data;
pub mod error;
pub mod graph;
pub mod optimizer;
pub mod pool;
pub mod sampling;
pub mod space;
pub mod ssl;
pub mod study;

pub use config::{make_rng, BetaMode, Classifier, RunConfig, RunConfigPatch, SamplerKind, Scenario};
pub use data::{ClassLabels, History, PoolSet};
pub use error::{Error, Result};
pub use optimizer::{run, run_control_nw, Evaluation, Objective, RunRecord};
pub use space::SearchSpace;
