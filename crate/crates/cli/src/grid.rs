//! Parsing of `start:stop:step` grids and comma-separated lists.

use crate::error::CliError;

/// Inclusive arithmetic grid. `stop` is included when it lies on the grid up
/// to rounding; an empty string yields an empty grid.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(CliError::Config(format!("grid `{text}` must be start:stop:step")));
    };
    let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
    if step.is_nan() || step <= 0.0 {
        return Err(CliError::Config(format!("grid step must be > 0, got {step}")));
    }
    if stop < start {
        return Ok(Vec::new());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| snap(start + i as f64 * step)).collect())
}

/// Rounds away accumulated binary error so `0.15` prints as `0.15`.
fn snap(x: f64) -> f64 {
    let scale = 1e12;
    (x * scale).round() / scale
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(number)
        .collect()
}

fn number(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("`{s}` is not a number")))
}

/// Checks that every value lies in `[lo, hi]` (or `[lo, hi)` if `open_hi`).
pub fn check_bounds(values: &[f64], what: &str, lo: f64, hi: f64, open_hi: bool) -> Result<(), CliError> {
    for &v in values {
        let ok = v >= lo && if open_hi { v < hi } else { v <= hi };
        if !ok {
            let close = if open_hi { ')' } else { ']' };
            return Err(CliError::Config(format!("{what} value {v} outside [{lo}, {hi}{close}")));
        }
    }
    Ok(())
}
