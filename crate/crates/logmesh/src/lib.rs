//! File formats, line parsing, the pipeline and the command line around
//! `logmesh-core`.

pub mod bench;
pub mod cli;
pub mod config;
mod error;
pub mod io;
pub mod labels;
pub mod logformat;
pub mod parse;
pub mod pipeline;
pub mod vectors;

pub use error::{Error, Result};
pub use logmesh_core as core;
