use super::{run_seed, MetricsReport, RunConfig};
use crate::error::{Error, Result, StageExt};
use crate::exec::Execution;
use crate::worldsim::WorldScenario;

/// Numeric config fields a sweep may vary.
pub const SWEEP_AXES: [&str; 17] = [
    "sigma_xy",
    "sigma_yaw",
    "base_latency",
    "frame_volume_bits",
    "gamma",
    "d_max",
    "rho_min",
    "comm_range",
    "csi_time",
    "tx_power",
    "bandwidth",
    "shadowing_sigma_db",
    "max_range",
    "beta",
    "mask_radius",
    "lambda0",
    "grid_resolution",
];

pub const SWEEP_HEADER: [&str; 12] = [
    "axis",
    "value",
    "seed",
    "reachable_helpers",
    "mean_delay_s",
    "rate_bits",
    "psnr_db",
    "rd_loss",
    "align_pre",
    "align_post",
    "iou_single",
    "iou_fused",
];

pub(super) fn check_axis(axis: &str) -> Result<()> {
    if SWEEP_AXES.contains(&axis) {
        Ok(())
    } else {
        Err(Error::Config(format!("unknown sweep axis `{axis}` (expected one of {})", SWEEP_AXES.join(", "))))
    }
}

fn with_axis(cfg: &RunConfig, axis: &str, v: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    let slot = match axis {
        "sigma_xy" => &mut c.pose_noise.sigma_xy,
        "sigma_yaw" => &mut c.pose_noise.sigma_yaw,
        "base_latency" => &mut c.base_latency,
        "frame_volume_bits" => &mut c.frame_volume_bits,
        "gamma" => &mut c.delay.gamma,
        "d_max" => &mut c.delay.d_max,
        "rho_min" => &mut c.delay.rho_min,
        "comm_range" => &mut c.comm_range,
        "csi_time" => &mut c.csi_time,
        "tx_power" => &mut c.radio.tx_power,
        "bandwidth" => &mut c.radio.bandwidth,
        "shadowing_sigma_db" => &mut c.csi.shadowing_sigma_db,
        "max_range" => &mut c.sensor.max_range,
        "beta" => &mut c.align.beta,
        "mask_radius" => &mut c.align.mask_radius,
        "lambda0" => &mut c.codec.lambda0,
        "grid_resolution" => &mut c.grid_resolution,
        _ => unreachable!("axis validated by check_axis"),
    };
    *slot = v;
    c.validate()?;
    Ok(c)
}

fn row(axis: &str, value: f64, r: &MetricsReport) -> [String; 12] {
    [
        axis.to_string(),
        value.to_string(),
        r.seed.to_string(),
        r.helpers.iter().filter(|h| h.reachable).count().to_string(),
        r.mean_delay_s.to_string(),
        r.codec.rate_bits.to_string(),
        r.codec.psnr_db.to_string(),
        r.codec.rd_loss.to_string(),
        r.alignment.pre_distance.to_string(),
        r.alignment.post_distance.to_string(),
        r.perception.iou_single.to_string(),
        r.perception.iou_fused.to_string(),
    ]
}

/// [`sweep_with`] on the default execution mode.
pub fn sweep(cfg: &RunConfig, axis: &str, values: &[f64]) -> Result<String> {
    sweep_with(cfg, axis, values, Execution::default())
}

/// One run per (value, seed), emitted as CSV in value-major, seed-minor
/// order whatever the execution mode.
pub fn sweep_with(cfg: &RunConfig, axis: &str, values: &[f64], exec: Execution) -> Result<String> {
    check_axis(axis)?;
    cfg.validate()?;
    let configs = values.iter().map(|&v| with_axis(cfg, axis, v)).collect::<Result<Vec<_>>>()?;
    let world = WorldScenario::load(&cfg.scenario).stage("scenario")?;
    let jobs: Vec<(usize, u64)> = (0..values.len()).flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s))).collect();
    let reports = exec.try_map(&jobs, |&(i, seed)| run_seed(&configs[i], &world, seed, false))?;

    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for (&(i, _), r) in jobs.iter().zip(&reports) {
        w.write_record(row(axis, values[i], r)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
