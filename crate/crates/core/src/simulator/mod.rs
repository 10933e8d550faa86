//! Seeded block-level Monte Carlo of the two-way link.
//!
//! Per block `n`, in order:
//!
//! 1. a downlink packet of `ell` nats arrives with probability `p`;
//! 2. if the master's queue is nonempty the block is busy and the head packet
//!    receives `gamma * P_t * T_B / N0` nats, leaving once it has `ell`; any
//!    surplus in its last block is discarded;
//! 3. an idle block instead transfers `eta * gamma' * P_t * T_B` joules to the slave;
//! 4. if the slave holds at least `P_t * T_B` joules and the block is eligible
//!    (idle, or any block with `uplink_in_busy_blocks`) it spends that energy
//!    transmitting `gamma'' * P_t * T_B / N0` nats of its current packet,
//!    with the same whole-block quantization;
//! 5. the uplink AoI advances.
//!
//! The slave always has a packet: a new one is generated right after each
//! uplink departure, stamped with the departure block. The AoI in block `n`
//! is `n - stamp` of the newest packet delivered before block `n`.

pub mod rng;
pub mod stats;
pub mod trace;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use rng::{rng_exponential, stream, uniform_open0, StreamKind};
pub use stats::{
    empirical_pmf, estimate_moments, total_variation, Estimate, MomentEstimate, MomentFields,
};
pub use trace::{BlockRecord, EventLog, SimTrace, UplinkDeparture, TRACE_HEADER};

/// Simulation horizon, seeding and policy switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: SystemParams,
    /// Blocks simulated per replication, `N`.
    pub n_blocks: u64,
    pub seed: u64,
    /// Leading blocks excluded from every average.
    pub warmup_blocks: u64,
    /// Allow uplink transmission in downlink-busy blocks when energy suffices.
    pub uplink_in_busy_blocks: bool,
    pub replications: u32,
    /// Keep one [`BlockRecord`] per block in the returned traces.
    pub record_blocks: bool,
}

impl SimConfig {
    pub fn new(params: SystemParams, n_blocks: u64, seed: u64) -> Self {
        Self {
            params,
            n_blocks,
            seed,
            warmup_blocks: 0,
            uplink_in_busy_blocks: false,
            replications: 1,
            record_blocks: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_blocks <= self.warmup_blocks {
            return Err(Error::Config(format!(
                "n_blocks ({}) must exceed warmup_blocks ({})",
                self.n_blocks, self.warmup_blocks
            )));
        }
        if self.replications < 1 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        Ok(())
    }

    fn measured_blocks(&self) -> u64 {
        self.n_blocks - self.warmup_blocks
    }
}

/// Block-level aggregates of one replication, split into contiguous batches.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct BlockBatches {
    aoi_sum: Vec<u64>,
    departures: Vec<u64>,
    blocks: Vec<u64>,
}

/// Raw output of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub trace: SimTrace,
    batches: BlockBatches,
    pub final_queue_len: u64,
    pub final_energy: f64,
    pub harvested_energy: f64,
    pub uplink_transmissions: u64,
}

/// Statistics pooled over all replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub p: f64,
    pub replications: u32,
    /// Post-warmup blocks per replication.
    pub blocks: u64,
    /// Time-average AoI over post-warmup blocks.
    pub avg_aoi: Estimate,
    /// Uplink deliveries per post-warmup block, `K / (N - warmup)`.
    pub q_hat: Estimate,
    /// Delivered uplink packets, summed over replications.
    pub departures: u64,
    pub moments: MomentFields,
    pub final_queue_len_min: u64,
    pub final_queue_len_max: u64,
}

/// Runs every replication of `config` in parallel and pools the results.
pub fn run(config: &SimConfig) -> Result<(SimStats, Vec<SimTrace>)> {
    let reps = run_replications(config)?;
    let stats = pool(config, &reps);
    Ok((stats, reps.into_iter().map(|r| r.trace).collect()))
}

/// Like [`run`] but discards the traces.
pub fn run_stats(config: &SimConfig) -> Result<SimStats> {
    Ok(run(config)?.0)
}

pub fn run_replications(config: &SimConfig) -> Result<Vec<Replication>> {
    config.validate()?;
    Ok((0..config.replications as u64)
        .into_par_iter()
        .map(|r| simulate(config, r))
        .collect())
}

/// Pure reduction of replication outputs into [`SimStats`].
pub fn pool(config: &SimConfig, reps: &[Replication]) -> SimStats {
    let mut aoi_means = Vec::new();
    let mut rate_means = Vec::new();
    let (mut aoi_total, mut dep_total, mut block_total) = (0u128, 0u64, 0u64);
    for rep in reps {
        let b = &rep.batches;
        for i in 0..b.blocks.len() {
            if b.blocks[i] == 0 {
                continue;
            }
            let n = b.blocks[i] as f64;
            aoi_means.push(b.aoi_sum[i] as f64 / n);
            rate_means.push(b.departures[i] as f64 / n);
            aoi_total += b.aoi_sum[i] as u128;
            dep_total += b.departures[i];
            block_total += b.blocks[i];
        }
    }
    let logs: Vec<&EventLog> = reps.iter().map(|r| &r.trace.events).collect();
    SimStats {
        p: config.params.downlink_rate,
        replications: config.replications,
        blocks: config.measured_blocks(),
        avg_aoi: Estimate {
            value: aoi_total as f64 / block_total as f64,
            stderr: stats::stderr_of_means(&aoi_means),
        },
        q_hat: Estimate {
            value: dep_total as f64 / block_total as f64,
            stderr: stats::stderr_of_means(&rate_means),
        },
        departures: dep_total,
        moments: estimate_moments(&logs),
        final_queue_len_min: reps.iter().map(|r| r.final_queue_len).min().unwrap_or(0),
        final_queue_len_max: reps.iter().map(|r| r.final_queue_len).max().unwrap_or(0),
    }
}

/// One replication: strictly sequential and fully determined by
/// `(config, replication)`.
pub fn simulate(config: &SimConfig, replication: u64) -> Replication {
    let params = &config.params;
    let p = params.downlink_rate;
    let ell = params.packet_nats;
    let rate = params.fading_rate;
    let nats_per_gain = params.nats_per_gain();
    let block_energy = params.block_energy();
    let harvest_per_gain = params.efficiency * block_energy;

    let mut arrivals = stream(config.seed, replication, StreamKind::Arrivals);
    let mut dl_gain = stream(config.seed, replication, StreamKind::DownlinkGain);
    let mut harvest_gain = stream(config.seed, replication, StreamKind::HarvestGain);
    let mut ul_gain = stream(config.seed, replication, StreamKind::UplinkGain);

    let measured_blocks = config.measured_blocks();
    let n_batches = stats::BATCHES.min(measured_blocks as usize).max(1);
    let mut batches = BlockBatches {
        aoi_sum: vec![0; n_batches],
        departures: vec![0; n_batches],
        blocks: vec![0; n_batches],
    };
    let mut trace = SimTrace::default();
    if config.record_blocks {
        trace.blocks.reserve(config.n_blocks as usize);
    }
    let ev = &mut trace.events;

    // Downlink.
    let mut queue: u64 = 0;
    let mut dl_nats = 0.0;
    let mut dl_blocks: u32 = 0;
    let mut busy_run: u64 = 0;

    // Slave energy store.
    let mut energy = 0.0;
    let mut harvested = 0.0;
    let mut transmissions: u64 = 0;
    // Harvests since the last transmission while the store is short, and the
    // completed wait waiting to be attached to the next transmission.
    let mut waiting = false;
    let mut wait_count: u32 = 0;
    let mut pending_wait: Option<u32> = None;

    // Uplink packet in service.
    let mut ul_nats = 0.0;
    let mut ul_tx_blocks: u32 = 0;
    let mut ul_service: u64 = 0;
    let mut idle_gap: u64 = 0;
    let mut stamp: u64 = 0;
    // Initial AoI is zero in block 1.
    let mut delivered_stamp: u64 = 1;

    for n in 1..=config.n_blocks {
        let aoi = n - delivered_stamp;
        let measured = n > config.warmup_blocks;
        let batch = if measured {
            let b = ((n - config.warmup_blocks - 1) * n_batches as u64 / measured_blocks) as usize;
            batches.aoi_sum[b] += aoi;
            batches.blocks[b] += 1;
            Some(b)
        } else {
            None
        };

        if uniform_open0(&mut arrivals) <= p {
            queue += 1;
        }
        let busy = queue > 0;
        if busy {
            busy_run += 1;
            dl_nats += rng_exponential(&mut dl_gain, rate) * nats_per_gain;
            dl_blocks += 1;
            if dl_nats >= ell {
                if measured {
                    ev.downlink_service.push(dl_blocks);
                }
                queue -= 1;
                dl_nats = 0.0;
                dl_blocks = 0;
            }
        } else {
            if busy_run > 0 {
                if measured {
                    ev.busy_periods.push(busy_run);
                }
                busy_run = 0;
            }
            let e = rng_exponential(&mut harvest_gain, rate) * harvest_per_gain;
            energy += e;
            harvested += e;
            if waiting {
                wait_count += 1;
                if energy >= block_energy {
                    pending_wait = Some(wait_count);
                    waiting = false;
                }
            }
        }

        let eligible = !busy || config.uplink_in_busy_blocks;
        let mut tx = false;
        let mut departed = false;
        if eligible && energy >= block_energy {
            tx = true;
            energy -= block_energy;
            transmissions += 1;
            let slot = idle_gap + 1;
            idle_gap = 0;
            ul_service += slot;
            if measured {
                ev.slots.push(slot);
                if let Some(w) = pending_wait.take() {
                    ev.harvest_waits.push(w);
                }
            }
            pending_wait = None;
            if energy >= block_energy {
                pending_wait = Some(0);
            } else {
                waiting = true;
                wait_count = 0;
            }

            ul_nats += rng_exponential(&mut ul_gain, rate) * nats_per_gain;
            ul_tx_blocks += 1;
            if ul_nats >= ell {
                departed = true;
                if let Some(b) = batch {
                    batches.departures[b] += 1;
                    ev.departures.push(UplinkDeparture {
                        generated: stamp + 1,
                        departed: n,
                        service: ul_service,
                        tx_blocks: ul_tx_blocks,
                    });
                }
                // Only the first delivery can be older than the initial state.
                delivered_stamp = delivered_stamp.max(stamp);
                stamp = n;
                ul_nats = 0.0;
                ul_tx_blocks = 0;
                ul_service = 0;
            }
        } else if !busy {
            idle_gap += 1;
        }

        if config.record_blocks {
            trace.blocks.push(BlockRecord {
                block: n,
                queue_len: queue,
                energy,
                busy,
                aoi,
                uplink_tx: tx,
                uplink_departure: departed,
            });
        }
    }

    Replication {
        trace,
        batches,
        final_queue_len: queue,
        final_energy: energy,
        harvested_energy: harvested,
        uplink_transmissions: transmissions,
    }
}

impl SimStats {
    /// Flat `key=value` pairs in a fixed order; floats use the shortest
    /// representation that round-trips exactly.
    pub fn key_values(&self) -> Vec<(String, String)> {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut kv: Vec<(String, String)> = vec![
            ("p".into(), self.p.to_string()),
            ("replications".into(), self.replications.to_string()),
            ("blocks".into(), self.blocks.to_string()),
            ("avg_aoi".into(), self.avg_aoi.value.to_string()),
            ("avg_aoi_stderr".into(), self.avg_aoi.stderr.to_string()),
            ("q_hat".into(), self.q_hat.value.to_string()),
            ("q_hat_stderr".into(), self.q_hat.stderr.to_string()),
            ("K".into(), self.departures.to_string()),
        ];
        let m = &self.moments;
        let named = [
            ("S", &m.service),
            ("S_uplink", &m.uplink_tx_blocks),
            ("s", &m.slot),
            ("tau_H", &m.harvest_wait),
            ("S_UL", &m.uplink_service),
            ("B_D", &m.busy_period),
            ("T", &m.system_time),
        ];
        for (name, e) in named {
            kv.push((format!("{name}.count"), e.count.to_string()));
            kv.push((format!("{name}.first"), e.first.to_string()));
            kv.push((format!("{name}.first_stderr"), e.first_stderr.to_string()));
            kv.push((format!("{name}.second"), e.second.to_string()));
            kv.push((format!("{name}.second_stderr"), e.second_stderr.to_string()));
        }
        kv.push(("consecutive_T_corr".into(), opt(m.consecutive_t_corr)));
        kv.push(("insufficient_data".into(), m.insufficient_data.to_string()));
        kv.push(("final_queue_len_min".into(), self.final_queue_len_min.to_string()));
        kv.push(("final_queue_len_max".into(), self.final_queue_len_max.to_string()));
        kv
    }

    pub fn to_key_value_string(&self) -> String {
        self.key_values()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}
