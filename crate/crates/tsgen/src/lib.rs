//! File formats, corpus readers and the `tsgen` command-line pipeline on top
//! of [`tsgen_core`].

pub mod cli;
pub mod config;
pub mod io;
pub mod manifest;
pub mod parallel;
pub mod persist;
pub mod stages;

pub use cli::{run, Cli};
