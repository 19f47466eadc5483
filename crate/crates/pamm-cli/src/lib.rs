//! Experiment harness and file tooling around the compression core: matrix
//! and compressed-blob formats, synthetic data, the sketch baseline, sweep /
//! Monte-Carlo / training experiments, and the `pamm` command-line front end.
//! Everything the binary does is callable from here; the binary is a thin
//! wrapper, and the integration tests hold it to that.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod data;
pub mod errors;
pub mod formats;
pub mod manifest;
pub mod mc;
pub mod sketch;
pub mod sweep;
pub mod train;
