//! Radio-link model: log-distance path loss, AWGN Shannon capacity and a
//! seeded, time-varying shadowing source.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    /// Transmit power in watts.
    pub tx_power: f64,
    /// One-sided noise power spectral density in W/Hz.
    pub noise_density: f64,
    /// Channel bandwidth in Hz.
    pub bandwidth: f64,
    /// Channel gain at `ref_distance`.
    pub ref_gain: f64,
    /// Reference distance in meters.
    pub ref_distance: f64,
    pub pathloss_exponent: f64,
}

impl Default for RadioParams {
    /// 23 dBm, -174 dBm/Hz, 10 MHz, free-space gain at 1 m for 5.9 GHz, exponent 2.7.
    fn default() -> Self {
        RadioParams {
            tx_power: 0.2,
            noise_density: 3.981_071_705_534_972e-21,
            bandwidth: 10e6,
            ref_gain: 1.6e-5,
            ref_distance: 1.0,
            pathloss_exponent: 2.7,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tx_power", self.tx_power),
            ("noise_density", self.noise_density),
            ("bandwidth", self.bandwidth),
            ("ref_gain", self.ref_gain),
            ("ref_distance", self.ref_distance),
            ("pathloss_exponent", self.pathloss_exponent),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(1.5..=6.0).contains(&self.pathloss_exponent) {
            return Err(Error::Config(format!(
                "pathloss_exponent must lie in [1.5, 6], got {}",
                self.pathloss_exponent
            )));
        }
        Ok(())
    }

    /// Capacity of a link at `distance` with no fading.
    pub fn capacity_at(&self, distance: f64) -> Result<f64> {
        let gain = path_gain(distance, self)?;
        Ok(shannon_capacity(self.bandwidth, self.tx_power, gain, self.noise_density))
    }
}

/// Instantaneous state of one directed link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelState {
    pub gain: f64,
    pub snr: f64,
    /// bits/second
    pub capacity: f64,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingModel {
    #[default]
    None,
    Lognormal,
}

/// Parameters of a reproducible CSI process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsiTrace {
    pub seed: u64,
    pub fading_model: FadingModel,
    pub shadowing_sigma_db: f64,
    /// Shadowing is held constant within each interval of this length (seconds).
    pub sample_interval: f64,
}

impl Default for CsiTrace {
    fn default() -> Self {
        CsiTrace { seed: 0, fading_model: FadingModel::None, shadowing_sigma_db: 0.0, sample_interval: 0.1 }
    }
}

impl CsiTrace {
    pub fn validate(&self) -> Result<()> {
        if !(self.shadowing_sigma_db.is_finite() && self.shadowing_sigma_db >= 0.0) {
            return Err(Error::Config(format!(
                "shadowing_sigma_db must be >= 0, got {}",
                self.shadowing_sigma_db
            )));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(Error::Config(format!(
                "sample_interval must be > 0, got {}",
                self.sample_interval
            )));
        }
        Ok(())
    }

    /// Shadowing offset in dB for a directed link during sample slot `slot`.
    pub fn shadowing_offset_db(&self, link: LinkId, slot: u64) -> f64 {
        match self.fading_model {
            FadingModel::None => 0.0,
            FadingModel::Lognormal => {
                let mut rng = rng::stream(self.seed, &[0x0C51_u64, link.from, link.to, slot]);
                let z: f64 = rng.sample(StandardNormal);
                self.shadowing_sigma_db * z
            }
        }
    }

    fn slot(&self, t: f64) -> u64 {
        (t / self.sample_interval).floor() as u64
    }
}

/// Identity of a directed link, by vehicle id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkId {
    pub from: u64,
    pub to: u64,
}

/// Log-distance path gain, clamped to `ref_gain` inside the reference distance.
pub fn path_gain(distance: f64, params: &RadioParams) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!("link distance must be finite and > 0, got {distance}")));
    }
    let d = distance.max(params.ref_distance);
    Ok(params.ref_gain * (d / params.ref_distance).powf(-params.pathloss_exponent))
}

/// `B * log2(1 + P g / (N0 B))` in bits/second.
pub fn shannon_capacity(bandwidth: f64, tx_power: f64, gain: f64, noise_density: f64) -> f64 {
    let received = tx_power * gain;
    if received == 0.0 {
        return 0.0;
    }
    capacity_from_snr(bandwidth, received / (noise_density * bandwidth))
}

pub fn capacity_from_snr(bandwidth: f64, snr: f64) -> f64 {
    bandwidth * (1.0 + snr).log2()
}

/// Channel state of `link` at time `t`.
///
/// Pure in `(trace.seed, link, slot(t))`. The lognormal multiplier is applied
/// on top of the path gain and the result is clamped to `ref_gain`.
pub fn sample_csi(
    trace: &CsiTrace,
    link: LinkId,
    link_distance: f64,
    params: &RadioParams,
    t: f64,
) -> Result<ChannelState> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("CSI sample time must be >= 0, got {t}")));
    }
    let base = path_gain(link_distance, params)?;
    let offset_db = trace.shadowing_offset_db(link, trace.slot(t));
    let gain = (base * 10f64.powf(offset_db / 10.0)).min(params.ref_gain);
    let snr = params.tx_power * gain / (params.noise_density * params.bandwidth);
    Ok(ChannelState {
        gain,
        snr,
        capacity: capacity_from_snr(params.bandwidth, snr),
        timestamp: t,
    })
}
