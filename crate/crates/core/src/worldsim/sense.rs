use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{Pose, WorldScenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorParams {
    /// meters
    pub max_range: f64,
    /// Field of view centered on the heading, radians.
    pub fov: f64,
    /// Angle between consecutive rays, radians.
    pub angular_resolution: f64,
    /// First-hit rays needed to report an object.
    pub min_hits: usize,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams { max_range: 90.0, fov: TAU, angular_resolution: 0.25f64.to_radians(), min_hits: 3 }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return Err(Error::Config(format!("fov must lie in (0, 2π], got {}", self.fov)));
        }
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            return Err(Error::Config(format!("max_range must be > 0, got {}", self.max_range)));
        }
        if !(self.angular_resolution > 0.0 && self.angular_resolution <= self.fov) {
            return Err(Error::Config(format!(
                "angular_resolution must lie in (0, fov], got {}",
                self.angular_resolution
            )));
        }
        if self.min_hits < 1 {
            return Err(Error::Config("min_hits must be >= 1".into()));
        }
        Ok(())
    }

    /// Ray headings relative to the sensor yaw.
    pub fn ray_offsets(&self) -> Vec<f64> {
        let full = self.fov >= TAU;
        let n = if full {
            (self.fov / self.angular_resolution).ceil() as usize
        } else {
            (self.fov / self.angular_resolution).floor() as usize + 1
        };
        (0..n).map(|k| -self.fov / 2.0 + k as f64 * self.angular_resolution).collect()
    }
}

/// Rectangle with its own heading, in whatever frame it is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrientedRect {
    pub center: [f64; 2],
    pub half_extents: [f64; 2],
    pub yaw: f64,
}

impl OrientedRect {
    /// The same rectangle after mapping its frame through `pose`.
    pub fn transformed(&self, pose: &Pose) -> OrientedRect {
        OrientedRect { center: pose.apply(self.center), half_extents: self.half_extents, yaw: self.yaw + pose.yaw }
    }

    /// Inclusive point test (boundary counts as inside).
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        lx.abs() <= self.half_extents[0] && ly.abs() <= self.half_extents[1]
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn aabb(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = self.yaw.sin_cos();
        let ex = c.abs() * self.half_extents[0] + s.abs() * self.half_extents[1];
        let ey = s.abs() * self.half_extents[0] + c.abs() * self.half_extents[1];
        ([self.center[0] - ex, self.center[1] - ey], [self.center[0] + ex, self.center[1] + ey])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub object_id: u64,
    /// Observed rectangle in the sensing vehicle's frame.
    pub rect: OrientedRect,
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionSet {
    pub sensor_id: u64,
    pub timestamp: f64,
    pub detections: Vec<Detection>,
}

impl DetectionSet {
    pub fn contains(&self, object_id: u64) -> bool {
        self.detections.iter().any(|d| d.object_id == object_id)
    }
}

/// Entry distance of a ray into an axis-aligned box, if it hits from outside.
fn ray_box(origin: [f64; 2], dir: [f64; 2], min: [f64; 2], max: [f64; 2]) -> Option<f64> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for a in 0..2 {
        if dir[a] == 0.0 {
            if origin[a] < min[a] || origin[a] > max[a] {
                return None;
            }
        } else {
            let t1 = (min[a] - origin[a]) / dir[a];
            let t2 = (max[a] - origin[a]) / dir[a];
            t_enter = t_enter.max(t1.min(t2));
            t_exit = t_exit.min(t1.max(t2));
        }
    }
    (t_exit >= t_enter && t_enter >= 0.0).then_some(t_enter)
}

/// Ray-cast sensing from one vehicle.
///
/// Every ray stops at the first rectangle boundary it meets within
/// `max_range`; objects collecting at least `min_hits` first hits are
/// reported with their true extent, expressed in the sensor frame.
/// Occluders block rays but are never reported. Rectangles that contain
/// the sensor are ignored.
pub fn sense(world: &WorldScenario, vehicle_id: u64, params: &SensorParams) -> Result<DetectionSet> {
    params.validate()?;
    let vehicle = world
        .vehicle(vehicle_id)
        .ok_or_else(|| Error::Input(format!("no vehicle with id {vehicle_id}")))?;
    let pose = vehicle.pose;
    let origin = pose.position();
    let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
    for offset in params.ray_offsets() {
        let (s, c) = (pose.yaw + offset).sin_cos();
        let first = world
            .objects
            .iter()
            .enumerate()
            .filter_map(|(i, o)| ray_box(origin, [c, s], o.min(), o.max()).map(|t| (t, i)))
            .filter(|&(t, _)| t <= params.max_range)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((_, i)) = first {
            *hits.entry(i).or_default() += 1;
        }
    }
    let to_local = pose.inverse();
    let detections = hits
        .into_iter()
        .filter(|&(i, n)| n >= params.min_hits && !world.objects[i].occluder)
        .map(|(i, n)| Detection {
            object_id: world.objects[i].id,
            rect: world.objects[i].rect().transformed(&to_local),
            hits: n,
        })
        .collect();
    Ok(DetectionSet { sensor_id: vehicle_id, timestamp: world.time, detections })
}
