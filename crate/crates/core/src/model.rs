//! System parameters shared by the analytic model and the simulator.
//!
//! All quantities are SI. Packet length is measured in nats, matching the
//! low-SNR per-block information amount `gamma * P_t * T_B / N0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and protocol parameters of the two-way link.
///
/// The serialized field names are the conventional symbols, so a config file
/// reads `P_t = 0.01`, `N0 = 4e-7` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Transmit power of both nodes, for data and for energy transfer (W).
    #[serde(rename = "P_t")]
    pub tx_power: f64,
    /// System bandwidth (Hz).
    #[serde(rename = "W")]
    pub bandwidth: f64,
    /// Noise spectral density (W/Hz).
    #[serde(rename = "N0")]
    pub noise_density: f64,
    /// Rate of the exponential power gain; the mean gain is `1 / lambda`.
    #[serde(rename = "lambda")]
    pub fading_rate: f64,
    /// Block length (s).
    #[serde(rename = "T_B")]
    pub block_len: f64,
    /// Energy-transfer efficiency, in (0, 1].
    #[serde(rename = "eta")]
    pub efficiency: f64,
    /// Packet length (nats), for both directions.
    #[serde(rename = "ell")]
    pub packet_nats: f64,
    /// Downlink data rate: per-block packet generation probability, in [0, 1).
    #[serde(rename = "p", default)]
    pub downlink_rate: f64,
}

/// Constants derived once from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Mean number of extra blocks needed to deliver one packet.
    pub theta: f64,
    /// Mean number of idle blocks needed to harvest one block of transmit energy.
    pub m: f64,
    /// Rate of the Erlang law of harvested energy (1/J).
    pub mu: f64,
    /// Largest downlink rate (exclusive) that keeps the master's queue stable.
    pub p_max: f64,
}

impl SystemParams {
    /// Parameter set used for the published curves, with packet length `ell`
    /// and downlink rate zero.
    pub fn reference(packet_nats: f64) -> Self {
        Self {
            tx_power: 0.01,
            bandwidth: 1e6,
            noise_density: 4e-7,
            fading_rate: 3.0,
            block_len: 1e-3,
            efficiency: 0.5,
            packet_nats,
            downlink_rate: 0.0,
        }
    }

    pub fn with_downlink_rate(mut self, p: f64) -> Self {
        self.downlink_rate = p;
        self
    }

    /// Checks every field invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("P_t", self.tx_power),
            ("W", self.bandwidth),
            ("N0", self.noise_density),
            ("lambda", self.fading_rate),
            ("T_B", self.block_len),
            ("eta", self.efficiency),
            ("ell", self.packet_nats),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if self.efficiency > 1.0 {
            return Err(Error::InvalidParameter {
                field: "eta",
                reason: format!("must be <= 1, got {}", self.efficiency),
            });
        }
        if !(0.0..1.0).contains(&self.downlink_rate) {
            return Err(Error::InvalidParameter {
                field: "p",
                reason: format!("must lie in [0, 1), got {}", self.downlink_rate),
            });
        }
        Ok(())
    }

    /// Energy spent by one block of transmission, `P_t * T_B` (J).
    pub fn block_energy(&self) -> f64 {
        self.tx_power * self.block_len
    }

    /// Nats delivered per unit of power gain in one block, `P_t * T_B / N0`.
    pub fn nats_per_gain(&self) -> f64 {
        self.tx_power * self.block_len / self.noise_density
    }

    /// Mean received SNR `P_t / (lambda * W * N0)`. The linear nat-rate
    /// approximation assumes this is much smaller than one.
    pub fn mean_snr(&self) -> f64 {
        self.tx_power / (self.fading_rate * self.bandwidth * self.noise_density)
    }

    /// Parses a flat TOML document whose keys are exactly the field names.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat struct of floats always serializes")
    }
}

/// Computes `theta`, `m`, `mu` and `p_max` after validating `params`.
pub fn derive(params: &SystemParams) -> Result<DerivedParams> {
    params.validate()?;
    let theta = params.fading_rate * params.noise_density * params.packet_nats
        / (params.tx_power * params.block_len);
    let m = params.fading_rate / params.efficiency;
    let mu = params.fading_rate / (params.efficiency * params.tx_power * params.block_len);
    Ok(DerivedParams {
        theta,
        m,
        mu,
        p_max: 1.0 / (1.0 + theta),
    })
}

/// True iff the downlink queue is stable, `(theta + 1) * p < 1`. The boundary
/// `p = p_max` is unstable.
pub fn is_stable(params: &SystemParams, derived: &DerivedParams) -> bool {
    stable_load(params.downlink_rate, derived.theta)
}

pub(crate) fn stable_load(p: f64, theta: f64) -> bool {
    (theta + 1.0) * p < 1.0
}

impl DerivedParams {
    pub fn from_params(params: &SystemParams) -> Result<Self> {
        derive(params)
    }
}
