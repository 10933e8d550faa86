//! CSV, JSON and text renderings of command results.
//!
//! Floats are written with the shortest representation that parses back to
//! the same value.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::CliError;
use crate::validate::ValidationReport;

/// One header row followed by one row per record.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Records array.
pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// CSV into a string; `header_for_empty` is emitted when there are no rows.
pub fn csv_string<T: Serialize>(rows: &[T], header_for_empty: &str) -> Result<String, CliError> {
    if rows.is_empty() {
        return Ok(format!("{header_for_empty}\n"));
    }
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::Internal(e.to_string()))
}

pub const SWEEP_HEADER: &str = "p,stable,analytic_aoi,analytic_q,sim_aoi,sim_aoi_stderr,sim_q,sim_q_stderr,rel_err_aoi,rel_err_q,aoi_doubled,aoi_single";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

/// Plain-text validation report. Contains no timings, so identical inputs
/// give byte-identical reports.
pub fn validation_text(r: &ValidationReport) -> Result<String, CliError> {
    let mut s = String::new();
    let d = &r.derived;
    let o = &r.options;
    let _ = writeln!(s, "# validation report");
    let _ = writeln!(
        s,
        "theta={} m={} mu={} p_max={} mean_snr={}",
        d.theta,
        d.m,
        d.mu,
        d.p_max,
        r.params.mean_snr()
    );
    let _ = writeln!(
        s,
        "blocks={} warmup={} seed={} replications={} uplink_in_busy_blocks={}",
        o.n_blocks, o.warmup_blocks, o.seed, o.replications, o.uplink_in_busy_blocks
    );
    let _ = writeln!(s, "\n## sweep");
    s.push_str(&csv_string(&r.rows, SWEEP_HEADER)?);
    let _ = writeln!(
        s,
        "\nworst_rel_err_aoi={} worst_rel_err_q={} (stable points only)",
        opt(r.worst_rel_err_aoi),
        opt(r.worst_rel_err_q)
    );

    let _ = writeln!(s, "\n## moments");
    s.push_str(&csv_string(
        &r.moments,
        "p,quantity,count,analytic_first,sim_first,sim_first_stderr,z_first,analytic_second,sim_second,sim_second_stderr,z_second",
    )?);

    let _ = writeln!(s, "\n## consecutive system-time correlation");
    for (p, c) in &r.correlations {
        let _ = writeln!(s, "p={p} corr={}", opt(*c));
    }

    let a = &r.arbitration;
    let _ = writeln!(s, "\n## expanded AoI forms (tolerance {})", a.tolerance);
    s.push_str(&csv_string(
        &a.rows,
        "p,sim_aoi,doubled,rel_err_doubled,single,rel_err_single",
    )?);
    let name = |v: Option<uplink_aoi::analytic::AoiExpansion>| v.map_or("none", |v| v.name());
    let _ = writeln!(
        s,
        "max_rel_err_doubled={} max_rel_err_single={}",
        opt(a.max_rel_err_doubled),
        opt(a.max_rel_err_single)
    );
    let _ = writeln!(s, "closer_everywhere={}", name(a.closer_everywhere));
    let _ = writeln!(s, "matches_composition={}", name(a.matches_composition));
    let _ = writeln!(s, "verdict={}", a.verdict);
    Ok(s)
}
