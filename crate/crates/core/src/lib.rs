//! Weighted minwise hashing over sparse non-negative vectors.
//!
//! The main scheme draws uniform reals over a red-green interval map of the
//! dataset and returns the number of draws until the first green hit, which
//! collides across vectors with probability equal to their generalized
//! Jaccard similarity. Ioffe's consistent weighted sampling and a biased
//! weighted-to-unweighted reduction are included as baselines, together with
//! estimation and statistics helpers.
//!
//! Core types are generic over the weight scalar (any [`Weight`], i.e. f32 or
//! f64); the crate-root aliases pin the common double-precision instantiation.

pub mod baselines;
pub mod error;
pub mod estimate;
pub mod redgreen;
pub mod rng;
pub mod scalar;
pub mod sketch;
pub mod vectors;

pub use error::{Error, Result};
pub use estimate::{exact_jaccard, hash_stats, EstimateReport, HashStats};
pub use redgreen::{RedGreenLayout, SketchParams};
pub use scalar::Weight;
pub use sketch::{Scheme, SchemeSketcher, Sketch, SketchValues};
pub use vectors::{Dataset, IndexBase, SparseVector};

/// Double-precision sparse vector, the default instantiation.
pub type SparseVector64 = vectors::SparseVector<f64>;
/// Single-precision sparse vector for memory-constrained ingestion.
pub type SparseVector32 = vectors::SparseVector<f32>;
/// Double-precision dataset.
pub type Dataset64 = vectors::Dataset<f64>;
/// Single-precision dataset.
pub type Dataset32 = vectors::Dataset<f32>;
