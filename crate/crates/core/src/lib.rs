//! Inference of a global preference vector from partial rankings under the
//! Plackett-Luce model.
//!
//! The crate is organised around the estimation pipeline:
//!
//! - [`model`]: preference vectors, partial rankings, PL and Thurstone samplers,
//!   item-assignment schemes.
//! - [`graph`]: the weighted comparison graph and its Laplacian spectrum.
//! - [`estimator`]: PL log-likelihood, gradient, Hessian and the constrained
//!   maximum-likelihood solvers (MM and projected gradient ascent).
//! - [`breaking`]: independence-preserving and full rank breaking.
//! - [`bounds`]: oracle and Cramér-Rao lower bounds, Fisher information, and
//!   upper-bound diagnostics.
//! - [`harness`]: file formats, the normalized-MSE experiment runner and
//!   CSV/SVG output.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod breaking;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod harness;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{MleOptions, MleResult, SolverMethod, WeightedPair};
pub use graph::{ComparisonGraph, LaplacianSpectrum};
pub use model::{PartialRanking, PreferenceVector, RankingDataset, ThurstoneNoise};
