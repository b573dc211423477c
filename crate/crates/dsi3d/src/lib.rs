//! File formats, configuration, timing benchmarks and the subcommands of the
//! `dsi3d` command-line tool, built on `dsi3d-core`.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::RunConfig;
pub use error::{Error, Result};
