use serde::Serialize;

use super::grid::{iou, OccupancyGrid};
use super::sense::{sense, DetectionSet, SensorParams};
use super::{perturb_pose, Pose, WorldScenario};
use crate::error::{Error, Result};

/// A helper's detections plus the relative pose the ego uses to warp them.
#[derive(Debug, Clone, PartialEq)]
pub struct HelperReport {
    pub detections: DetectionSet,
    /// Helper sensing pose expressed in the ego frame at fusion time.
    pub relative_pose: Pose,
    /// Seconds between helper sensing and fusion.
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionGrids {
    pub fused: OccupancyGrid,
    pub ego_only: OccupancyGrid,
    pub truth: OccupancyGrid,
}

/// Late fusion in the world frame.
///
/// Ego detections are placed with the ego's true pose at fusion; helper
/// detections go through the supplied relative pose first, so any pose
/// error enters exactly once here. Truth rasterizes every non-occluder
/// object of `world_at_fusion`.
pub fn fuse_late(
    ego_set: &DetectionSet,
    helpers: &[HelperReport],
    world_at_fusion: &WorldScenario,
    grid_resolution: f64,
) -> Result<FusionGrids> {
    let mut truth = OccupancyGrid::new(&world_at_fusion.bounds, grid_resolution)?;
    let ego_pose = world_at_fusion
        .vehicle(ego_set.sensor_id)
        .ok_or_else(|| Error::Input(format!("ego vehicle {} missing from fusion world", ego_set.sensor_id)))?
        .pose;
    let fusion_time = world_at_fusion.time;
    let mut ego_only = truth.clone();
    for d in &ego_set.detections {
        ego_only.rasterize(&d.rect.transformed(&ego_pose));
    }
    let mut fused = ego_only.clone();
    for h in helpers {
        let expected = fusion_time - h.latency;
        if !(h.latency >= 0.0) || (h.detections.timestamp - expected).abs() > 1e-9 * fusion_time.abs().max(1.0) {
            return Err(Error::Input(format!(
                "helper {} sensed at t={} but latency {} implies t={expected}",
                h.detections.sensor_id, h.detections.timestamp, h.latency
            )));
        }
        let to_world = ego_pose.compose(&h.relative_pose);
        for d in &h.detections.detections {
            fused.rasterize(&d.rect.transformed(&to_world));
        }
    }
    for o in world_at_fusion.objects.iter().filter(|o| !o.occluder) {
        truth.rasterize(&o.rect());
    }
    Ok(FusionGrids { fused, ego_only, truth })
}

/// Settings of one end-to-end sensing/fusion trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialParams {
    pub sensor: SensorParams,
    pub sigma_xy: f64,
    pub sigma_yaw: f64,
    pub grid_resolution: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionOutcome {
    pub iou_single: f64,
    pub iou_fused: f64,
    pub grids: FusionGrids,
}

/// Sense and fuse around `world_at_fusion`.
///
/// `contributors` lists `(helper id, latency)`; each helper senses the
/// world rewound by its latency. Relative poses are the difference of two
/// independently perturbed absolute poses (ego at fusion, helper at sensing).
pub fn simulate_fusion(world_at_fusion: &WorldScenario, contributors: &[(u64, f64)], p: &TrialParams) -> Result<FusionOutcome> {
    let ego = world_at_fusion.ego();
    let ego_set = sense(world_at_fusion, ego.id, &p.sensor)?;
    let ego_noisy = perturb_pose(&ego.pose, p.sigma_xy, p.sigma_yaw, crate::rng::mix(p.seed, &[ego.id, 1]))?;
    let mut reports = Vec::with_capacity(contributors.len());
    for &(id, latency) in contributors {
        if !(latency >= 0.0 && latency.is_finite()) {
            return Err(Error::Domain(format!("latency of helper {id} must be finite and >= 0, got {latency}")));
        }
        let stale = world_at_fusion.translated(-latency);
        let helper = stale.vehicle(id).ok_or_else(|| Error::Input(format!("no helper with id {id}")))?;
        let detections = sense(&stale, id, &p.sensor)?;
        let helper_noisy = perturb_pose(&helper.pose, p.sigma_xy, p.sigma_yaw, crate::rng::mix(p.seed, &[id, 1]))?;
        reports.push(HelperReport { detections, relative_pose: ego_noisy.relative_to(&helper_noisy), latency });
    }
    let grids = fuse_late(&ego_set, &reports, world_at_fusion, p.grid_resolution)?;
    Ok(FusionOutcome {
        iou_single: iou(&grids.ego_only, &grids.truth)?,
        iou_fused: iou(&grids.fused, &grids.truth)?,
        grids,
    })
}
