//! Estimators over simulated traces.
//!
//! Standard errors use batch means: each replication's event sequence is cut
//! into [`BATCHES`] contiguous batches and the spread of the batch means,
//! pooled over replications, gives the error of the overall mean.

use serde::{Deserialize, Serialize};

use super::trace::EventLog;

pub const BATCHES: usize = 32;

/// Fewer events than this make an estimate flagged as unreliable.
pub const MIN_EVENTS: usize = 100;

/// A scalar estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Sample first and second raw moments with batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub first: f64,
    pub first_stderr: f64,
    pub second: f64,
    pub second_stderr: f64,
    pub count: u64,
}

impl MomentEstimate {
    pub fn insufficient(&self) -> bool {
        (self.count as usize) < MIN_EVENTS
    }

    /// Estimate from one or more independent sample sequences.
    pub fn from_sequences<'a, I>(sequences: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut means1 = Vec::new();
        let mut means2 = Vec::new();
        let (mut sum1, mut sum2, mut count) = (0.0, 0.0, 0u64);
        for seq in sequences {
            if seq.is_empty() {
                continue;
            }
            for &x in seq {
                sum1 += x;
                sum2 += x * x;
            }
            count += seq.len() as u64;
            for batch in batch_ranges(seq.len(), BATCHES) {
                let chunk = &seq[batch];
                let n = chunk.len() as f64;
                means1.push(chunk.iter().sum::<f64>() / n);
                means2.push(chunk.iter().map(|x| x * x).sum::<f64>() / n);
            }
        }
        if count == 0 {
            return Self {
                first: f64::NAN,
                first_stderr: f64::NAN,
                second: f64::NAN,
                second_stderr: f64::NAN,
                count: 0,
            };
        }
        Self {
            first: sum1 / count as f64,
            first_stderr: stderr_of_means(&means1),
            second: sum2 / count as f64,
            second_stderr: stderr_of_means(&means2),
            count,
        }
    }
}

/// Splits `0..len` into at most `batches` near-equal contiguous ranges.
pub(crate) fn batch_ranges(len: usize, batches: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    let b = batches.min(len).max(1);
    (0..b).map(move |i| (i * len / b)..((i + 1) * len / b)).filter(|r| !r.is_empty())
}

pub(crate) fn stderr_of_means(means: &[f64]) -> f64 {
    let b = means.len();
    if b < 2 {
        return f64::NAN;
    }
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Moment estimates for every event type of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentFields {
    /// Downlink service time `S`.
    pub service: MomentEstimate,
    /// Uplink transmission blocks per packet, which follows the same law as `S`.
    pub uplink_tx_blocks: MomentEstimate,
    /// Uplink slot time `s`.
    pub slot: MomentEstimate,
    /// Harvest wait `tau_H`.
    pub harvest_wait: MomentEstimate,
    /// Uplink service time `S_UL`.
    pub uplink_service: MomentEstimate,
    /// Downlink busy period `B_D`.
    pub busy_period: MomentEstimate,
    /// Uplink system time `T`.
    pub system_time: MomentEstimate,
    /// Pearson correlation of consecutive system times `(T_k, T_{k+1})`.
    pub consecutive_t_corr: Option<f64>,
    /// Set when any estimate rests on fewer than [`MIN_EVENTS`] events.
    pub insufficient_data: bool,
}

fn as_f64<T: Into<f64> + Copy>(xs: impl Iterator<Item = T>) -> Vec<f64> {
    xs.map(Into::into).collect()
}

fn u64s(xs: impl Iterator<Item = u64>) -> Vec<f64> {
    xs.map(|x| x as f64).collect()
}

/// Sample moments of every event type, pooled over independent logs.
pub fn estimate_moments(logs: &[&EventLog]) -> MomentFields {
    let per_log = |f: &dyn Fn(&EventLog) -> Vec<f64>| -> MomentEstimate {
        let seqs: Vec<Vec<f64>> = logs.iter().map(|l| f(l)).collect();
        MomentEstimate::from_sequences(seqs.iter().map(Vec::as_slice))
    };
    let service = per_log(&|l| as_f64(l.downlink_service.iter().copied()));
    let uplink_tx_blocks = per_log(&|l| as_f64(l.uplink_tx_blocks()));
    let slot = per_log(&|l| u64s(l.slots.iter().copied()));
    let harvest_wait = per_log(&|l| as_f64(l.harvest_waits.iter().copied()));
    let uplink_service = per_log(&|l| u64s(l.uplink_service()));
    let busy_period = per_log(&|l| u64s(l.busy_periods.iter().copied()));
    let system_time = per_log(&|l| u64s(l.system_times()));

    let mut pairs = PearsonAcc::default();
    for l in logs {
        let t: Vec<f64> = u64s(l.system_times());
        for w in t.windows(2) {
            pairs.push(w[0], w[1]);
        }
    }
    // Downlink events legitimately vanish at p = 0; uplink events must not.
    let insufficient_data = [slot, uplink_service, uplink_tx_blocks, system_time]
        .iter()
        .any(MomentEstimate::insufficient)
        || [service, busy_period]
            .iter()
            .any(|m| m.count > 0 && m.insufficient());
    MomentFields {
        service,
        uplink_tx_blocks,
        slot,
        harvest_wait,
        uplink_service,
        busy_period,
        system_time,
        consecutive_t_corr: pairs.correlation(),
        insufficient_data,
    }
}

#[derive(Debug, Default)]
struct PearsonAcc {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl PearsonAcc {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    fn correlation(&self) -> Option<f64> {
        if self.n < 3.0 {
            return None;
        }
        let cov = self.sxy - self.sx * self.sy / self.n;
        let vx = self.sxx - self.sx * self.sx / self.n;
        let vy = self.syy - self.sy * self.sy / self.n;
        if vx <= 0.0 || vy <= 0.0 {
            return None;
        }
        Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Empirical probability mass function over `0..=max`; the last cell
/// collects everything above `max`.
pub fn empirical_pmf<T: Copy + Into<u64>>(samples: &[T], max: usize) -> Vec<f64> {
    let mut counts = vec![0u64; max + 1];
    for &s in samples {
        let k = (s.into() as usize).min(max);
        counts[k] += 1;
    }
    let n = samples.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// Total-variation distance `0.5 * sum |a_i - b_i|` over a common support.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    0.5 * (0..len)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::trace::UplinkDeparture;

    #[test]
    fn constant_samples_have_zero_error() {
        let xs = vec![3.0; 1000];
        let m = MomentEstimate::from_sequences([xs.as_slice()]);
        assert_eq!((m.first, m.second, m.first_stderr, m.second_stderr), (3.0, 9.0, 0.0, 0.0));
        assert_eq!(m.count, 1000);
        assert!(!m.insufficient());
    }

    #[test]
    fn synthetic_trace_with_constant_service() {
        let log = EventLog {
            downlink_service: vec![3; 500],
            busy_periods: vec![3; 500],
            slots: vec![2; 500],
            harvest_waits: vec![2; 500],
            departures: (0..500)
                .map(|k| UplinkDeparture {
                    generated: 10 * k + 1,
                    departed: 10 * k + 10,
                    service: 6,
                    tx_blocks: 3,
                })
                .collect(),
        };
        let est = estimate_moments(&[&log]);
        assert_eq!(est.service.first, 3.0);
        assert_eq!(est.service.second, 9.0);
        assert_eq!(est.service.first_stderr, 0.0);
        assert_eq!(est.system_time.first, 10.0);
        assert_eq!(est.uplink_tx_blocks.first, 3.0);
        // Constant system times have no defined correlation.
        assert_eq!(est.consecutive_t_corr, None);
        assert!(!est.insufficient_data);
    }

    #[test]
    fn short_logs_are_flagged() {
        let log = EventLog {
            downlink_service: vec![1, 2, 3],
            ..Default::default()
        };
        assert!(estimate_moments(&[&log]).insufficient_data);
    }

    #[test]
    fn batch_ranges_cover_everything() {
        for len in [1usize, 5, 31, 32, 33, 1000, 1001] {
            let rs: Vec<_> = batch_ranges(len, BATCHES).collect();
            assert_eq!(rs.first().unwrap().start, 0);
            assert_eq!(rs.last().unwrap().end, len);
            assert!(rs.windows(2).all(|w| w[0].end == w[1].start));
            assert!(rs.len() <= BATCHES);
        }
    }

    #[test]
    fn correlation_is_bounded() {
        let mut acc = PearsonAcc::default();
        for i in 0..100 {
            let x = (i as f64 * 0.37).sin();
            acc.push(x, 2.0 * x + 1.0);
        }
        assert!((acc.correlation().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tv_distance() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!((total_variation(&[1.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
        let pmf = empirical_pmf(&[0u32, 1, 1, 9], 3);
        assert_eq!(pmf, vec![0.25, 0.5, 0.0, 0.25]);
    }
}
