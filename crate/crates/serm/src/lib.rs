//! IO, run configuration, experiments and the command implementations
//! behind the `serm` binary. The math lives in `serm-core`.

pub mod bench;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiments;
pub mod model_file;
pub mod pipeline;
pub mod sweep;

pub use error::{Error, Result};
