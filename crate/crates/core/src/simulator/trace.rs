//! Per-block records and per-event logs produced by a replication.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// State at the end of one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub block: u64,
    /// Packets at the master, including the one in service.
    pub queue_len: u64,
    /// Energy held by the slave (J).
    pub energy: f64,
    pub busy: bool,
    /// Uplink AoI during this block (blocks).
    pub aoi: u64,
    pub uplink_tx: bool,
    pub uplink_departure: bool,
}

/// One delivered uplink packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UplinkDeparture {
    /// First block of the packet's system time, `n_k`.
    pub generated: u64,
    /// Block in which its last nats were delivered, `n'_k`.
    pub departed: u64,
    /// Sum of slot times over its transmissions.
    pub service: u64,
    /// Number of blocks in which it was transmitted.
    pub tx_blocks: u32,
}

impl UplinkDeparture {
    /// `T_k = n'_k - n_k + 1`.
    pub fn system_time(&self) -> u64 {
        self.departed - self.generated + 1
    }
}

/// Completed events of each kind, in completion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    /// Downlink service times `S` (blocks).
    pub downlink_service: Vec<u32>,
    /// Maximal runs of downlink-busy blocks `B_D`.
    pub busy_periods: Vec<u64>,
    /// Slot time `s` of each uplink transmission.
    pub slots: Vec<u64>,
    /// Harvest wait `tau_H` preceding each uplink transmission, measured from
    /// the residual energy left by the previous transmission.
    pub harvest_waits: Vec<u32>,
    pub departures: Vec<UplinkDeparture>,
}

impl EventLog {
    pub fn system_times(&self) -> impl Iterator<Item = u64> + '_ {
        self.departures.iter().map(UplinkDeparture::system_time)
    }

    pub fn uplink_service(&self) -> impl Iterator<Item = u64> + '_ {
        self.departures.iter().map(|d| d.service)
    }

    pub fn uplink_tx_blocks(&self) -> impl Iterator<Item = u32> + '_ {
        self.departures.iter().map(|d| d.tx_blocks)
    }
}

/// Everything one replication observed. `blocks` is empty unless block
/// recording was requested.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub blocks: Vec<BlockRecord>,
    pub events: EventLog,
}

/// Header written at the top of every trace file.
pub const TRACE_HEADER: &str = "\
# uplink-aoi trace v1
# one record per line, comma separated, first field is the record kind
# B,block,queue_len,energy_j,busy,aoi,uplink_tx,uplink_departure
# S,index,downlink_service_blocks
# D,index,busy_period_blocks
# s,index,slot_blocks,harvest_wait
# U,index,generated,departed,system_time,uplink_service,tx_blocks
";

impl SimTrace {
    /// Writes the line-delimited trace format described by [`TRACE_HEADER`].
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(TRACE_HEADER.as_bytes())?;
        for b in &self.blocks {
            writeln!(
                out,
                "B,{},{},{},{},{},{},{}",
                b.block,
                b.queue_len,
                b.energy,
                b.busy as u8,
                b.aoi,
                b.uplink_tx as u8,
                b.uplink_departure as u8
            )?;
        }
        let ev = &self.events;
        for (i, s) in ev.downlink_service.iter().enumerate() {
            writeln!(out, "S,{i},{s}")?;
        }
        for (i, b) in ev.busy_periods.iter().enumerate() {
            writeln!(out, "D,{i},{b}")?;
        }
        // Harvest waits start after the first transmission, so the two lists
        // may be offset by one.
        let offset = ev.slots.len().saturating_sub(ev.harvest_waits.len());
        for (i, s) in ev.slots.iter().enumerate() {
            match i.checked_sub(offset).and_then(|j| ev.harvest_waits.get(j)) {
                Some(h) => writeln!(out, "s,{i},{s},{h}")?,
                None => writeln!(out, "s,{i},{s},")?,
            }
        }
        for (i, d) in ev.departures.iter().enumerate() {
            writeln!(
                out,
                "U,{i},{},{},{},{},{}",
                d.generated,
                d.departed,
                d.system_time(),
                d.service,
                d.tx_blocks
            )?;
        }
        Ok(())
    }
}
