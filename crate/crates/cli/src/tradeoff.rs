//! Weighted-sum tradeoff between downlink and uplink rate.

use serde::Serialize;
use uplink_aoi::analytic::{uplink_rate, weighted_sum_optimum};
use uplink_aoi::model::derive;
use uplink_aoi::SystemParams;

use crate::error::CliError;

/// Points on the achievable boundary `(p, q(p))`.
pub const BOUNDARY_POINTS: usize = 200;

/// One output row: an optimum for weight `w`, or a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub kind: &'static str,
    pub w: Option<f64>,
    pub p: f64,
    pub q: f64,
    pub objective: Option<f64>,
}

pub fn tradeoff(params: &SystemParams, weights: &[f64]) -> Result<Vec<TradeoffRow>, CliError> {
    crate::grid::check_bounds(weights, "w", 0.0, 1.0, false)?;
    let d = derive(params)?;
    let mut rows = Vec::with_capacity(weights.len() + BOUNDARY_POINTS + 1);
    for &w in weights {
        let opt = weighted_sum_optimum(w, d.theta, d.m)?;
        rows.push(TradeoffRow {
            kind: "optimum",
            w: Some(w),
            p: opt.p_star,
            q: opt.q_star,
            objective: Some(opt.objective),
        });
    }
    for i in 0..=BOUNDARY_POINTS {
        let p = d.p_max * i as f64 / BOUNDARY_POINTS as f64;
        rows.push(TradeoffRow {
            kind: "boundary",
            w: None,
            p,
            q: uplink_rate(p, d.theta, d.m),
            objective: None,
        });
    }
    Ok(rows)
}
