use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{CsiTrace, RadioParams};
use crate::codec::CodecParams;
use crate::error::{Error, Result};
use crate::netopt::{PgdOptions, DEFAULT_DISTANCE_FLOOR};
use crate::specalign::AlignParams;
use crate::worldsim::{SensorParams, DEFAULT_GRID_RESOLUTION};

/// LTE-V2X end-to-end latency floor, seconds.
pub const DEFAULT_BASE_LATENCY: f64 = 0.1313;
/// 100,000 points × 16 bytes × 8 bits.
pub const DEFAULT_FRAME_VOLUME_BITS: f64 = 1.28e7;

/// Distortion budget and ratio bounds of the delay optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayConfig {
    pub gamma: f64,
    /// Budget on Σ w ρ^(-γ); weights sum to one, so values below 1 are infeasible.
    pub d_max: f64,
    pub rho_min: f64,
    /// Distance floor of the importance weights, meters.
    pub distance_floor: f64,
}

impl Default for DelayConfig {
    fn default() -> Self {
        DelayConfig { gamma: 1.0, d_max: 4.0, rho_min: 0.01, distance_floor: DEFAULT_DISTANCE_FLOOR }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoseNoise {
    /// meters
    pub sigma_xy: f64,
    /// radians
    pub sigma_yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

/// Everything one experiment needs. Absent fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario JSON; relative paths resolve against the config file's directory.
    pub scenario: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub csi: CsiTrace,
    /// Time at which CSI is sampled, seconds.
    #[serde(default)]
    pub csi_time: f64,
    /// Maximum V2V link distance, meters.
    #[serde(default = "default_comm_range")]
    pub comm_range: f64,
    #[serde(default)]
    pub delay: DelayConfig,
    #[serde(default)]
    pub pgd: PgdOptions,
    #[serde(default)]
    pub sensor: SensorParams,
    #[serde(default)]
    pub align: AlignParams,
    #[serde(default)]
    pub codec: CodecParams,
    /// Quantization-table refinement steps run on the helper frames; 0 disables.
    #[serde(default)]
    pub refine_steps: usize,
    /// Side of the square per-vehicle camera frame, pixels.
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    #[serde(default)]
    pub pose_noise: PoseNoise,
    #[serde(default = "default_base_latency")]
    pub base_latency: f64,
    #[serde(default = "default_frame_volume")]
    pub frame_volume_bits: f64,
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_comm_range() -> f64 {
    300.0
}
fn default_image_size() -> usize {
    64
}
fn default_base_latency() -> f64 {
    DEFAULT_BASE_LATENCY
}
fn default_frame_volume() -> f64 {
    DEFAULT_FRAME_VOLUME_BITS
}
fn default_grid_resolution() -> f64 {
    DEFAULT_GRID_RESOLUTION
}

fn prefixed(key: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{key}.{m}")),
        other => other,
    })
}

impl RunConfig {
    /// Config with every default and the given scenario path.
    pub fn with_scenario(scenario: impl Into<PathBuf>) -> Self {
        serde_json::from_value(serde_json::json!({ "scenario": scenario.into() })).expect("defaults deserialize")
    }

    pub fn validate(&self) -> Result<()> {
        prefixed("radio", self.radio.validate())?;
        prefixed("csi", self.csi.validate())?;
        prefixed("sensor", self.sensor.validate())?;
        prefixed("align", self.align.validate())?;
        prefixed("codec", self.codec.validate())?;
        let d = &self.delay;
        let checks = [
            ("delay.gamma", d.gamma > 0.0 && d.gamma.is_finite(), "must be finite and > 0"),
            ("delay.d_max", d.d_max >= 1.0 && d.d_max.is_finite(), "must be finite and >= 1"),
            ("delay.rho_min", d.rho_min > 0.0 && d.rho_min < 1.0, "must lie in (0, 1)"),
            ("delay.distance_floor", d.distance_floor > 0.0 && d.distance_floor.is_finite(), "must be finite and > 0"),
            ("pgd.step", self.pgd.step > 0.0 && self.pgd.step.is_finite(), "must be finite and > 0"),
            ("pgd.tol", self.pgd.tol >= 0.0, "must be >= 0"),
            ("csi_time", self.csi_time >= 0.0 && self.csi_time.is_finite(), "must be finite and >= 0"),
            ("comm_range", self.comm_range > 0.0, "must be > 0"),
            ("base_latency", self.base_latency >= 0.0 && self.base_latency.is_finite(), "must be finite and >= 0"),
            ("frame_volume_bits", self.frame_volume_bits > 0.0 && self.frame_volume_bits.is_finite(), "must be finite and > 0"),
            ("grid_resolution", self.grid_resolution > 0.0 && self.grid_resolution.is_finite(), "must be finite and > 0"),
            ("pose_noise.sigma_xy", self.pose_noise.sigma_xy >= 0.0 && self.pose_noise.sigma_xy.is_finite(), "must be finite and >= 0"),
            ("pose_noise.sigma_yaw", self.pose_noise.sigma_yaw >= 0.0 && self.pose_noise.sigma_yaw.is_finite(), "must be finite and >= 0"),
            ("image_size", (8..=4096).contains(&self.image_size), "must lie in [8, 4096]"),
            ("seeds", !self.seeds.is_empty(), "must not be empty"),
        ];
        for (key, ok, what) in checks {
            if !ok {
                return Err(Error::Config(format!("{key} {what}")));
            }
        }
        if let Some(s) = &self.sweep {
            super::sweep::check_axis(&s.axis)?;
        }
        Ok(())
    }

    /// Parse and validate; a relative scenario path is resolved against `base_dir`
    /// and must exist.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<RunConfig> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let path = base_dir.join(&cfg.scenario);
        cfg.scenario = std::fs::canonicalize(&path)
            .map_err(|e| Error::Config(format!("scenario {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    RunConfig::from_json(&text, base).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
