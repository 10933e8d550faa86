//! Analytic sweeps over the downlink rate.

use serde::{Serialize, Serializer};
use uplink_aoi::analytic::{self, Aoi, AoiExpansion};
use uplink_aoi::model::{derive, DerivedParams};
use uplink_aoi::simulator::SimStats;
use uplink_aoi::SystemParams;

use crate::error::CliError;

/// Offset below `p_max` used as the last stable grid point when a grid
/// reaches into the unstable region.
pub const EDGE_OFFSET: f64 = 1e-6;

/// One downlink rate: analytic values, and simulated values when available.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub stable: bool,
    #[serde(serialize_with = "aoi_cell")]
    pub analytic_aoi: Aoi,
    pub analytic_q: f64,
    pub sim_aoi: Option<f64>,
    pub sim_aoi_stderr: Option<f64>,
    pub sim_q: Option<f64>,
    pub sim_q_stderr: Option<f64>,
    pub rel_err_aoi: Option<f64>,
    pub rel_err_q: Option<f64>,
    /// Expanded form with the factor 2 in its second denominator.
    #[serde(serialize_with = "aoi_cell")]
    pub aoi_doubled: Aoi,
    /// Expanded form without it.
    #[serde(serialize_with = "aoi_cell")]
    pub aoi_single: Aoi,
}

fn aoi_cell<S: Serializer>(aoi: &Aoi, s: S) -> Result<S::Ok, S::Error> {
    match aoi {
        Aoi::Finite(v) => s.serialize_f64(*v),
        Aoi::Unbounded => s.serialize_str("inf"),
    }
}

impl SweepRow {
    pub fn analytic(p: f64, derived: &DerivedParams) -> Self {
        let (theta, m) = (derived.theta, derived.m);
        let r = analytic::evaluate(p, theta, m);
        Self {
            p,
            stable: r.stable,
            analytic_aoi: r.aoi,
            analytic_q: r.q,
            sim_aoi: None,
            sim_aoi_stderr: None,
            sim_q: None,
            sim_q_stderr: None,
            rel_err_aoi: None,
            rel_err_q: None,
            aoi_doubled: analytic::aoi_expansion(p, theta, m, AoiExpansion::Doubled),
            aoi_single: analytic::aoi_expansion(p, theta, m, AoiExpansion::Single),
        }
    }

    /// Fills the simulated columns; relative errors only on stable rows.
    pub fn with_simulation(mut self, stats: &SimStats) -> Self {
        self.sim_aoi = Some(stats.avg_aoi.value);
        self.sim_aoi_stderr = Some(stats.avg_aoi.stderr);
        self.sim_q = Some(stats.q_hat.value);
        self.sim_q_stderr = Some(stats.q_hat.stderr);
        if let Aoi::Finite(a) = self.analytic_aoi {
            self.rel_err_aoi = Some((stats.avg_aoi.value - a).abs() / a);
            self.rel_err_q = Some((stats.q_hat.value - self.analytic_q).abs() / self.analytic_q);
        }
        self
    }
}

/// Removes `p_max` itself from an ascending grid; when the grid reaches
/// `p_max` or beyond, inserts `p_max - EDGE_OFFSET` so the divergence is
/// sampled just inside the stable region.
pub fn prepare_grid(grid: &[f64], p_max: f64) -> Vec<f64> {
    let edge = p_max - EDGE_OFFSET;
    let at_boundary = |p: f64| (p - p_max).abs() <= 1e-12 * p_max.max(1.0);
    let crosses = grid.iter().any(|&p| p >= p_max || at_boundary(p));
    let mut out: Vec<f64> = grid.iter().copied().filter(|&p| !at_boundary(p)).collect();
    if crosses && !out.iter().any(|&p| (p - edge).abs() < 1e-15) {
        let pos = out.iter().position(|&p| p > edge).unwrap_or(out.len());
        out.insert(pos, edge);
    }
    out
}

/// Analytic table over `grid`.
pub fn analytic_rows(params: &SystemParams, grid: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let derived = derive(params)?;
    crate::grid::check_bounds(grid, "p", 0.0, 1.0, true)?;
    Ok(prepare_grid(grid, derived.p_max)
        .into_iter()
        .map(|p| SweepRow::analytic(p, &derived))
        .collect())
}
