use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::{Bounds, Pose, Vehicle, WorldObject, WorldScenario};

pub const OCCLUSION_EGO: u64 = 0;
pub const OCCLUSION_HELPER: u64 = 1;
pub const OCCLUSION_PEDESTRIAN: u64 = 11;

/// Two-lane occlusion scene: a car directly ahead of the ego hides a
/// pedestrian that the oncoming helper sees unobstructed.
///
/// No rectangle edge lies on a cell center of a 0.5 m grid anchored at the
/// bounds, so rasterization is free of boundary ties.
pub fn occlusion_scenario() -> WorldScenario {
    let object = |id, center, half_extents, occluder| WorldObject { id, center, half_extents, velocity: [0.0; 2], occluder };
    WorldScenario {
        bounds: Bounds { min: [-30.0, -30.0], max: [60.0, 30.0] },
        vehicles: vec![
            Vehicle { id: OCCLUSION_EGO, pose: Pose::new(0.0, 0.0, 0.0), velocity: [0.0; 2], is_ego: true },
            Vehicle { id: OCCLUSION_HELPER, pose: Pose::new(20.0, 8.0, PI), velocity: [0.0; 2], is_ego: false },
        ],
        objects: vec![
            object(10, [10.0, 0.0], [2.5, 1.0], false),
            object(OCCLUSION_PEDESTRIAN, [20.0, 0.0], [0.4, 0.4], false),
            object(12, [5.0, -7.0], [2.2, 1.0], false),
            object(13, [30.0, -15.0], [6.0, 4.1], true),
        ],
        time: 0.0,
    }
}

/// Parameters of [`random_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioGen {
    pub helpers: usize,
    pub targets: usize,
    pub occluders: usize,
    /// Scene spans `[-half_extent, half_extent]²`.
    pub half_extent: f64,
    /// Speed of every target object, random heading (m/s).
    pub object_speed: f64,
}

impl Default for ScenarioGen {
    fn default() -> Self {
        ScenarioGen { helpers: 2, targets: 8, occluders: 3, half_extent: 60.0, object_speed: 0.0 }
    }
}

fn gap(o: &WorldObject, p: [f64; 2]) -> f64 {
    let dx = (o.center[0] - p[0]).abs() - o.half_extents[0];
    let dy = (o.center[1] - p[1]).abs() - o.half_extents[1];
    dx.max(0.0).hypot(dy.max(0.0))
}

fn overlap(a: &WorldObject, b: &WorldObject, margin: f64) -> bool {
    (0..2).all(|k| (a.center[k] - b.center[k]).abs() < a.half_extents[k] + b.half_extents[k] + margin)
}

/// Seeded random world around an ego at the origin.
///
/// Rectangles never overlap (1 m clearance), keep 3 m from every vehicle
/// and 10 m from the scene edge. Helpers sit at least 8 m from each other
/// and from the ego. Placement that fails after many tries yields fewer objects.
pub fn random_scenario(seed: u64, gen: &ScenarioGen) -> WorldScenario {
    let mut rng = crate::rng::stream(seed, &[0x5CE7E]);
    let h = gen.half_extent.max(20.0);
    let inner = h - 10.0;
    let mut vehicles = vec![Vehicle { id: 0, pose: Pose::new(0.0, 0.0, rng.random_range(0.0..TAU)), velocity: [0.0; 2], is_ego: true }];
    let mut tries = 0;
    while vehicles.len() < gen.helpers + 1 && tries < 10_000 {
        tries += 1;
        let span = inner.min(40.0);
        let p = [rng.random_range(-span..span), rng.random_range(-span..span)];
        if vehicles.iter().all(|v| (v.pose.x - p[0]).hypot(v.pose.y - p[1]) >= 8.0) {
            let id = vehicles.len() as u64;
            vehicles.push(Vehicle { id, pose: Pose::new(p[0], p[1], rng.random_range(0.0..TAU)), velocity: [0.0; 2], is_ego: false });
        }
    }

    let mut objects: Vec<WorldObject> = Vec::new();
    let mut place = |occluder: bool, count: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let mut placed = 0;
        let mut tries = 0;
        while placed < count && tries < 10_000 {
            tries += 1;
            let half_extents = if occluder {
                [rng.random_range(3.0..8.0), rng.random_range(3.0..8.0)]
            } else if rng.random_bool(0.25) {
                [0.4, 0.4]
            } else if rng.random_bool(0.5) {
                [2.2, 1.0]
            } else {
                [1.0, 2.2]
            };
            let center = [
                rng.random_range(-inner + half_extents[0]..inner - half_extents[0]),
                rng.random_range(-inner + half_extents[1]..inner - half_extents[1]),
            ];
            let heading = rng.random_range(0.0..TAU);
            let velocity = if occluder { [0.0; 2] } else { [gen.object_speed * heading.cos(), gen.object_speed * heading.sin()] };
            let id = 100 + objects.len() as u64;
            let o = WorldObject { id, center, half_extents, velocity, occluder };
            if objects.iter().any(|q| overlap(q, &o, 1.0)) || vehicles.iter().any(|v| gap(&o, v.pose.position()) < 3.0) {
                continue;
            }
            objects.push(o);
            placed += 1;
        }
    };
    place(true, gen.occluders, &mut rng);
    place(false, gen.targets, &mut rng);
    WorldScenario { bounds: Bounds { min: [-h, -h], max: [h, h] }, vehicles, objects, time: 0.0 }
}
