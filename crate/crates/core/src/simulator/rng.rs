//! Independent, reproducible random streams.
//!
//! Each replication owns four ChaCha8 streams (arrivals, downlink gains,
//! harvest gains, uplink gains) that share the user seed and differ only in
//! the 64-bit stream id, so every stream is reproducible from
//! `(seed, replication, kind)` alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which physical process a stream drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Arrivals = 0,
    DownlinkGain = 1,
    HarvestGain = 2,
    UplinkGain = 3,
}

const KINDS: u64 = 4;

pub fn stream(seed: u64, replication: u64, kind: StreamKind) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication * KINDS + kind as u64);
    rng
}

/// Uniform on (0, 1].
#[inline]
pub fn uniform_open0<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Inverse-transform exponential sample `-ln(u) / rate`, `u` uniform on (0, 1].
#[inline]
pub fn rng_exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    -uniform_open0(rng).ln() / rate
}
