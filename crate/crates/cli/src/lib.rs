//! Command implementations behind the `uplink-aoi` binary.
//!
//! Every command returns plain data; [`output`] turns it into CSV, JSON or
//! the text report, so the binary is a thin dispatcher.

pub mod config;
pub mod error;
pub mod grid;
pub mod output;
pub mod simulate;
pub mod sweep;
pub mod tradeoff;
pub mod validate;

pub use error::CliError;
