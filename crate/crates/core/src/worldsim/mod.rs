//! Planar sensing-and-fusion surrogate.
//!
//! Vehicles carry 3-DoF poses; objects are axis-aligned rectangles that
//! block rays. Ray-cast sensing with bounded range, Gaussian pose errors and
//! stale (latency-shifted) geometry feed a late-fusion step scored by
//! occupancy IoU against ground truth.

mod fusion;
mod grid;
mod scenarios;
mod sense;

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fusion::{fuse_late, simulate_fusion, FusionGrids, FusionOutcome, HelperReport, TrialParams};
pub use grid::{iou, OccupancyGrid, DEFAULT_GRID_RESOLUTION};
pub use scenarios::{occlusion_scenario, random_scenario, ScenarioGen, OCCLUSION_EGO, OCCLUSION_HELPER, OCCLUSION_PEDESTRIAN};
pub use sense::{sense, Detection, DetectionSet, OrientedRect, SensorParams};

/// Position (m) and heading (rad, counter-clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose { x, y, yaw }
    }

    /// Map a point from this pose's local frame into the parent frame.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    pub fn inverse(&self) -> Pose {
        let (s, c) = self.yaw.sin_cos();
        Pose { x: -(c * self.x + s * self.y), y: s * self.x - c * self.y, yaw: -self.yaw }
    }

    /// `self ∘ other`: `other` expressed in `self`'s parent frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        let [x, y] = self.apply([other.x, other.y]);
        Pose { x, y, yaw: self.yaw + other.yaw }
    }

    /// Pose of `other` seen from `self` (both in the same parent frame).
    pub fn relative_to(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vehicle {
    pub id: u64,
    pub pose: Pose,
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default)]
    pub is_ego: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldObject {
    pub id: u64,
    pub center: [f64; 2],
    pub half_extents: [f64; 2],
    #[serde(default)]
    pub velocity: [f64; 2],
    /// Static scenery (buildings, walls): blocks rays but is not a perception target.
    #[serde(default)]
    pub occluder: bool,
}

impl WorldObject {
    pub fn min(&self) -> [f64; 2] {
        [self.center[0] - self.half_extents[0], self.center[1] - self.half_extents[1]]
    }

    pub fn max(&self) -> [f64; 2] {
        [self.center[0] + self.half_extents[0], self.center[1] + self.half_extents[1]]
    }

    pub fn rect(&self) -> OrientedRect {
        OrientedRect { center: self.center, half_extents: self.half_extents, yaw: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.min[0]..=self.max[0]).contains(&p[0]) && (self.min[1]..=self.max[1]).contains(&p[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldScenario {
    pub bounds: Bounds,
    pub vehicles: Vec<Vehicle>,
    pub objects: Vec<WorldObject>,
    /// Scenario clock in seconds.
    #[serde(default)]
    pub time: f64,
}

impl WorldScenario {
    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if !(b.min[0] < b.max[0] && b.min[1] < b.max[1]) {
            return Err(Error::Config("scenario bounds are empty".into()));
        }
        let egos = self.vehicles.iter().filter(|v| v.is_ego).count();
        if egos != 1 {
            return Err(Error::Config(format!("scenario needs exactly one ego vehicle, found {egos}")));
        }
        let mut ids: Vec<u64> = self.vehicles.iter().map(|v| v.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate vehicle id".into()));
        }
        let mut ids: Vec<u64> = self.objects.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate object id".into()));
        }
        for v in &self.vehicles {
            if !b.contains(v.pose.position()) {
                return Err(Error::Config(format!("vehicle {} lies outside the scenario bounds", v.id)));
            }
        }
        for o in &self.objects {
            if !(o.half_extents[0] > 0.0 && o.half_extents[1] > 0.0) {
                return Err(Error::Config(format!("object {} has non-positive half extents", o.id)));
            }
            if !(b.contains(o.min()) && b.contains(o.max())) {
                return Err(Error::Config(format!("object {} lies outside the scenario bounds", o.id)));
            }
        }
        Ok(())
    }

    pub fn ego(&self) -> &Vehicle {
        self.vehicles.iter().find(|v| v.is_ego).expect("validated scenario has an ego")
    }

    pub fn vehicle(&self, id: u64) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    /// Move every entity by `velocity · dt` (any sign).
    pub(crate) fn translated(&self, dt: f64) -> WorldScenario {
        let mut w = self.clone();
        for v in &mut w.vehicles {
            v.pose.x += v.velocity[0] * dt;
            v.pose.y += v.velocity[1] * dt;
        }
        for o in &mut w.objects {
            o.center[0] += o.velocity[0] * dt;
            o.center[1] += o.velocity[1] * dt;
        }
        w.time += dt;
        w
    }

    pub fn load(path: impl AsRef<Path>) -> Result<WorldScenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let world: WorldScenario =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        world.validate()?;
        Ok(world)
    }
}

/// Constant-velocity motion of every vehicle and object.
pub fn advance_world(world: &WorldScenario, dt: f64) -> Result<WorldScenario> {
    if !(dt >= 0.0) {
        return Err(Error::Domain(format!("time step must be >= 0, got {dt}")));
    }
    Ok(world.translated(dt))
}

/// Add independent zero-mean Gaussian noise to x, y and yaw.
pub fn perturb_pose(pose: &Pose, sigma_xy: f64, sigma_yaw: f64, seed: u64) -> Result<Pose> {
    if !(sigma_xy >= 0.0 && sigma_yaw >= 0.0) {
        return Err(Error::Domain(format!("pose noise must be >= 0, got ({sigma_xy}, {sigma_yaw})")));
    }
    let mut rng = crate::rng::stream(seed, &[0x9053]);
    let (dx, dy, dyaw): (f64, f64, f64) =
        (rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
    Ok(Pose { x: pose.x + sigma_xy * dx, y: pose.y + sigma_xy * dy, yaw: pose.yaw + sigma_yaw * dyaw })
}
