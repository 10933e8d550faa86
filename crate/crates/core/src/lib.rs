//! Uplink age of information for a two-way link in which a master node
//! alternates between sending downlink data and wirelessly powering a slave
//! node, and the slave sends its own data back on a best-effort basis.
//!
//! - [`model`]: system parameters, derived constants and the stability region.
//! - [`analytic`]: closed-form laws, moments, average uplink AoI and uplink rate.
//! - [`simulator`]: seeded block-level Monte Carlo of the full system.

pub mod analytic;
pub mod error;
pub mod model;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{DerivedParams, SystemParams};
