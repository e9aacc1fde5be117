//! Allocation-only core of `logmesh`.
//!
//! Everything here is pure computation over in-memory data: online template
//! mining with a fixed-depth parse tree, grouping of parsed records, template
//! embeddings, construction of attributed directed edge-weighted log graphs,
//! the digraph inception convolution with its one-class hypersphere objective,
//! node-level explanations, and the evaluation kit (metrics, synthetic
//! structural benchmark, splits, count-vector baselines).
//!
//! File formats, regex-driven line parsing and the command line live in the
//! `logmesh` crate.
#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

pub mod digcn;
pub mod drain;
mod error;
pub mod eval;
pub mod explain;
pub mod graph;
pub mod grouping;
pub mod linalg;
pub mod semantics;
pub mod svdd;

pub use error::{Error, Result};
pub use linalg::Matrix;
