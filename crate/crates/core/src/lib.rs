//! Fast incremental support vector data description (SVDD) with the
//! Gaussian kernel.
//!
//! The learner keeps only its support vectors and the inverse of their
//! similarity matrix. Each incoming point costs `O(k·d)` to score and, when it
//! lands outside the boundary, `O(k²)` to absorb, where `k` is the number of
//! support vectors.
//!
//! ```
//! use fisvdd::{Bandwidth, HyperParams, Label, SvddModel};
//!
//! let params = HyperParams::new(Bandwidth::new(1.0).unwrap());
//! let mut model = SvddModel::initialize(&[[0.0, 0.0]], params).unwrap();
//! for p in [[2.0, 0.0], [1.0, 3.0], [1.0, 0.3]] {
//!     model.process_point(&p).unwrap();
//! }
//! assert_eq!(model.len(), 3);
//! assert_eq!(model.score(&[1.0, 0.3]).unwrap().label, Label::Inside);
//! assert_eq!(model.score(&[1.0, 40.0]).unwrap().label, Label::FarOutlier);
//! ```
//!
//! The guide under `book/` walks through the math; its code listings are
//! compiled and run as doctests of this crate.

// `!(x > tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inverse;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod params;
pub mod store;

pub use error::{FisvddError, Result};
pub use inverse::{KernelInverse, RowSums, SchurStep};
pub use kernel::{gaussian_similarity, similarity_vector, Bandwidth, KernelVector};
pub use metrics::{Confusion, EvalReport};
pub use model::{
    Action, BackupSet, Expansion, InvariantReport, Label, ScoreOutcome, SvddModel, UpdateOutcome,
};
pub use oracle::{batch_solve, kkt_verify, OracleSolution};
pub use params::HyperParams;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/inverse-updates.md")]
    mod inverse_updates {}
    #[doc = include_str!("../../../book/src/learner.md")]
    mod learner {}
    #[doc = include_str!("../../../book/src/memory-and-filters.md")]
    mod memory_and_filters {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/model-files.md")]
    mod model_files {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
