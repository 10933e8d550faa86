//! Analytic-versus-simulation validation.

use serde::Serialize;
use uplink_aoi::analytic::{self, Aoi, MomentPair, AoiExpansion};
use uplink_aoi::model::{derive, DerivedParams};
use uplink_aoi::simulator::{MomentEstimate, SimStats};
use uplink_aoi::SystemParams;

use crate::error::CliError;
use crate::simulate::{simulate_points, SimOptions};
use crate::sweep::SweepRow;

pub const MIN_BLOCKS: u64 = 100_000;
/// Exit with a threshold failure when any stable point misses the uplink
/// rate by more than this.
pub const RATE_FAILURE_THRESHOLD: f64 = 0.05;
/// Agreement required of an expanded AoI form at every stable point.
pub const VARIANT_TOLERANCE: f64 = 0.05;
/// Two AoI expressions count as the same formula within this relative gap.
const FORMULA_IDENTITY: f64 = 1e-9;

/// Analytic and simulated moments of one quantity at one downlink rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub p: f64,
    pub quantity: &'static str,
    pub count: u64,
    pub analytic_first: Option<f64>,
    pub sim_first: f64,
    pub sim_first_stderr: f64,
    /// `(sim - analytic) / stderr`.
    pub z_first: Option<f64>,
    pub analytic_second: Option<f64>,
    pub sim_second: f64,
    pub sim_second_stderr: f64,
    pub z_second: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantRow {
    pub p: f64,
    pub sim_aoi: f64,
    pub doubled: f64,
    pub rel_err_doubled: f64,
    pub single: f64,
    pub rel_err_single: f64,
}

/// Which expanded AoI form the simulation supports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arbitration {
    pub tolerance: f64,
    pub rows: Vec<VariantRow>,
    pub max_rel_err_doubled: Option<f64>,
    pub max_rel_err_single: Option<f64>,
    /// Variants within `tolerance` of the simulation at every stable point.
    pub supported: Vec<AoiExpansion>,
    /// Variant closer to the simulation at every stable point, if one is.
    pub closer_everywhere: Option<AoiExpansion>,
    /// Variant identical to `E(T) + 1/2 + E(T^2) / (2 E(T))` on the grid.
    pub matches_composition: Option<AoiExpansion>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub params: SystemParams,
    pub derived: DerivedParams,
    pub options: SimOptions,
    pub rows: Vec<SweepRow>,
    pub worst_rel_err_aoi: Option<f64>,
    pub worst_rel_err_q: Option<f64>,
    pub moments: Vec<MomentRow>,
    pub correlations: Vec<(f64, Option<f64>)>,
    pub arbitration: Arbitration,
}

pub fn validate(
    params: &SystemParams,
    ps: &[f64],
    opts: &SimOptions,
) -> Result<ValidationReport, CliError> {
    if opts.n_blocks < MIN_BLOCKS {
        return Err(CliError::Config(format!(
            "validation needs at least {MIN_BLOCKS} blocks, got {}",
            opts.n_blocks
        )));
    }
    let derived = derive(params)?;
    let stats = simulate_points(params, ps, opts)?;
    let rows: Vec<SweepRow> = ps
        .iter()
        .zip(&stats)
        .map(|(&p, s)| SweepRow::analytic(p, &derived).with_simulation(s))
        .collect();
    let worst = |f: fn(&SweepRow) -> Option<f64>| {
        rows.iter().filter_map(f).fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
    };
    let moments = ps
        .iter()
        .zip(&stats)
        .flat_map(|(&p, s)| moment_rows(p, &derived, s))
        .collect();
    let correlations = stats.iter().map(|s| (s.p, s.moments.consecutive_t_corr)).collect();
    let arbitration = arbitrate(&rows);
    Ok(ValidationReport {
        params: *params,
        derived,
        options: *opts,
        worst_rel_err_aoi: worst(|r| r.rel_err_aoi),
        worst_rel_err_q: worst(|r| r.rel_err_q),
        rows,
        moments,
        correlations,
        arbitration,
    })
}

/// Fails when any stable point's uplink rate is off by more than
/// [`RATE_FAILURE_THRESHOLD`].
pub fn check_thresholds(report: &ValidationReport) -> Result<(), CliError> {
    let bad: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.rel_err_q.is_some_and(|e| e > RATE_FAILURE_THRESHOLD))
        .map(|r| format!("p={} rel_err_q={:.4}", r.p, r.rel_err_q.unwrap()))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Threshold(bad.join(", ")))
    }
}

fn moment_rows(p: f64, d: &DerivedParams, s: &SimStats) -> Vec<MomentRow> {
    let (theta, m) = (d.theta, d.m);
    let tau = MomentPair::new(m, m * m + m);
    let mm = &s.moments;
    let entries: [(&'static str, Option<MomentPair>, &MomentEstimate); 7] = [
        ("S", Some(analytic::service_moments(theta)), &mm.service),
        ("S_uplink", Some(analytic::service_moments(theta)), &mm.uplink_tx_blocks),
        ("tau_H", Some(tau), &mm.harvest_wait),
        ("s", Some(analytic::slot_moments(m)), &mm.slot),
        ("S_UL", Some(analytic::uplink_service_moments(theta, m)), &mm.uplink_service),
        ("B_D", analytic::busy_period_moments(p, theta).ok(), &mm.busy_period),
        ("T", analytic::system_time_moments(p, theta, m).ok(), &mm.system_time),
    ];
    entries
        .into_iter()
        .map(|(quantity, a, e)| {
            let z = |an: f64, sim: f64, se: f64| (se > 0.0).then(|| (sim - an) / se);
            MomentRow {
                p,
                quantity,
                count: e.count,
                analytic_first: a.map(|a| a.first),
                sim_first: e.first,
                sim_first_stderr: e.first_stderr,
                z_first: a.and_then(|a| z(a.first, e.first, e.first_stderr)),
                analytic_second: a.map(|a| a.second),
                sim_second: e.second,
                sim_second_stderr: e.second_stderr,
                z_second: a.and_then(|a| z(a.second, e.second, e.second_stderr)),
            }
        })
        .collect()
}

fn arbitrate(rows: &[SweepRow]) -> Arbitration {
    let mut variant_rows = Vec::new();
    let mut identical = [true, true];
    for r in rows.iter().filter(|r| r.stable) {
        let (Aoi::Finite(thm), Aoi::Finite(app), Aoi::Finite(comp), Some(sim)) =
            (r.aoi_doubled, r.aoi_single, r.analytic_aoi, r.sim_aoi)
        else {
            continue;
        };
        for (slot, v) in identical.iter_mut().zip([thm, app]) {
            *slot &= (v - comp).abs() <= FORMULA_IDENTITY * comp;
        }
        variant_rows.push(VariantRow {
            p: r.p,
            sim_aoi: sim,
            doubled: thm,
            rel_err_doubled: (thm - sim).abs() / sim,
            single: app,
            rel_err_single: (app - sim).abs() / sim,
        });
    }
    let max = |f: fn(&VariantRow) -> f64| variant_rows.iter().map(f).reduce(f64::max);
    let max_thm = max(|v| v.rel_err_doubled);
    let max_app = max(|v| v.rel_err_single);
    let supported: Vec<AoiExpansion> = [(AoiExpansion::Doubled, max_thm), (AoiExpansion::Single, max_app)]
        .into_iter()
        .filter(|(_, e)| e.is_some_and(|e| e <= VARIANT_TOLERANCE))
        .map(|(v, _)| v)
        .collect();
    let closer_everywhere = if variant_rows.is_empty() {
        None
    } else if variant_rows.iter().all(|v| v.rel_err_doubled < v.rel_err_single) {
        Some(AoiExpansion::Doubled)
    } else if variant_rows.iter().all(|v| v.rel_err_single < v.rel_err_doubled) {
        Some(AoiExpansion::Single)
    } else {
        None
    };
    // At p = 0 the two expansions coincide, so identity is only informative
    // when exactly one of them matches.
    let matches_composition = match identical {
        [true, false] => Some(AoiExpansion::Doubled),
        [false, true] => Some(AoiExpansion::Single),
        _ => None,
    };
    let verdict = match supported.as_slice() {
        [one] => format!("{} supported", one.name()),
        [] => "neither supported".to_string(),
        _ => "both supported".to_string(),
    };
    Arbitration {
        tolerance: VARIANT_TOLERANCE,
        rows: variant_rows,
        max_rel_err_doubled: max_thm,
        max_rel_err_single: max_app,
        supported,
        closer_everywhere,
        matches_composition,
        verdict,
    }
}
