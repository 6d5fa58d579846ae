//! Directed edge expansion on weighted digraphs with vertex weights.
//!
//! The crate approximates and certifies `φ_π(G)`, the minimum over cuts of
//! `min{w(δ⁺S), w(δ⁻S)} / min{π(S), π(S̄)}`, using exact max-flow rounding,
//! a matrix multiplicative weights primal-dual loop, a reweighted spectral
//! method and a directed cut-matching game. Vertex and hypergraph expansion
//! reduce to the edge case.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod cutmatch;
pub mod embedding;
pub mod error;
pub mod flow;
pub mod gen;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod mmwu;
pub mod pipeline;
pub mod reductions;
pub mod rng;
pub mod rounding;
pub mod spectral;

use num_rational::Ratio;

pub use config::Constants;
pub use error::{Error, Result};
pub use graph::{Circulation, CutResult, Graph, Scalar, SymLaplacian, Witness};

/// The solver-facing instantiation.
pub type DiGraph = Graph<f64>;
pub type DiGraph32 = Graph<f32>;
pub type RationalGraph = Graph<Ratio<i64>>;
