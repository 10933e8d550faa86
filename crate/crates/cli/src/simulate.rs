//! Running the simulator for a list of downlink rates.

use rayon::prelude::*;
use serde::Serialize;
use uplink_aoi::simulator::{self, SimConfig, SimStats, SimTrace};
use uplink_aoi::SystemParams;

use crate::error::CliError;

/// Horizon, seeding and policy shared by every simulated point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    pub n_blocks: u64,
    pub warmup_blocks: u64,
    pub seed: u64,
    pub replications: u32,
    pub uplink_in_busy_blocks: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            n_blocks: 5_000_000,
            warmup_blocks: 100_000,
            seed: 1,
            replications: 3,
            uplink_in_busy_blocks: false,
        }
    }
}

impl SimOptions {
    pub fn config(&self, params: &SystemParams, p: f64) -> SimConfig {
        SimConfig {
            params: params.with_downlink_rate(p),
            n_blocks: self.n_blocks,
            seed: self.seed,
            warmup_blocks: self.warmup_blocks,
            uplink_in_busy_blocks: self.uplink_in_busy_blocks,
            replications: self.replications,
            record_blocks: false,
        }
    }
}

/// Simulates every point; results come back in input order.
pub fn simulate_points(
    params: &SystemParams,
    ps: &[f64],
    opts: &SimOptions,
) -> Result<Vec<SimStats>, CliError> {
    crate::grid::check_bounds(ps, "p", 0.0, 1.0, true)?;
    let configs: Vec<SimConfig> = ps.iter().map(|&p| opts.config(params, p)).collect();
    for c in &configs {
        c.validate()?;
    }
    configs
        .par_iter()
        .map(|c| simulator::run_stats(c).map_err(CliError::from))
        .collect()
}

/// Simulates one point with block recording and returns the trace of the
/// first replication.
pub fn simulate_traced(
    params: &SystemParams,
    p: f64,
    opts: &SimOptions,
) -> Result<(SimStats, SimTrace), CliError> {
    let mut config = opts.config(params, p);
    config.record_blocks = true;
    let (stats, mut traces) = simulator::run(&config)?;
    Ok((stats, traces.swap_remove(0)))
}

/// Flat `key=value` document, one block of keys per point separated by a
/// blank line.
pub fn stats_document(stats: &[SimStats]) -> String {
    stats
        .iter()
        .map(SimStats::to_key_value_string)
        .collect::<Vec<_>>()
        .join("\n")
}
