//! Experiment orchestration: config ingestion, the end-to-end pipeline
//! (delay minimization, codec, alignment, fusion), sweeps and metrics.

mod config;
mod sweep;

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Serialize, Serializer};

use crate::channel::{sample_csi, CsiTrace, LinkId};
use crate::codec::{self, rd_loss};
use crate::error::{Error, Result, StageExt};
use crate::image::Image;
use crate::netopt::{build_graph, optimize_delay, select_links, DelayModel, ImportanceWeights};
use crate::rng;
use crate::specalign::{align_amplitude, AlignParams, band_histogram_distance};
use crate::worldsim::{simulate_fusion, FusionGrids, TrialParams, WorldScenario};

pub use config::{load_config, DelayConfig, PoseNoise, RunConfig, SweepSpec, DEFAULT_BASE_LATENCY, DEFAULT_FRAME_VOLUME_BITS};
pub use sweep::{sweep, sweep_with, SWEEP_AXES, SWEEP_HEADER};

/// Histogram bins of the amplitude-spectrum distance.
pub const HISTOGRAM_BINS: usize = 64;
/// Side of the ground patch each vehicle camera frame covers, meters.
pub const VIEW_EXTENT: f64 = 64.0;

/// Routing and compression outcome for one helper. Unreachable helpers
/// transmit nothing: `rho` and `delay_s` are 0 and `hops` is 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HelperMetrics {
    pub id: u64,
    pub reachable: bool,
    pub hops: usize,
    pub rho: f64,
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkPlan {
    pub helpers: Vec<HelperMetrics>,
    pub mean_delay_s: f64,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Codec figures summed (rate) or averaged (PSNR, loss) over transmitting helpers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodecMetrics {
    pub rate_bits: f64,
    /// Infinite (JSON `null`) when every decoded frame is exact or nothing was sent.
    #[serde(serialize_with = "finite_or_null")]
    pub psnr_db: f64,
    pub rd_loss: f64,
}

/// Amplitude-histogram distance to the ego frame over the alignment band,
/// before and after alignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentMetrics {
    pub pre_distance: f64,
    pub post_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerceptionMetrics {
    pub iou_single: f64,
    pub iou_fused: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub helpers: Vec<HelperMetrics>,
    pub mean_delay_s: f64,
    pub codec: CodecMetrics,
    pub alignment: AlignmentMetrics,
    pub perception: PerceptionMetrics,
    /// Only measured on request, so reports stay reproducible by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// Sample CSI, build the graph, route toward the ego and optimize the
/// compression ratios of every reachable helper.
pub fn plan_network(cfg: &RunConfig, world: &WorldScenario, seed: u64) -> Result<NetworkPlan> {
    let vehicles = &world.vehicles;
    let ego_index = vehicles.iter().position(|v| v.is_ego).ok_or_else(|| Error::Config("scenario has no ego".into()))?;
    let positions: Vec<[f64; 2]> = vehicles.iter().map(|v| v.pose.position()).collect();
    let trace = CsiTrace { seed: rng::mix(cfg.csi.seed, &[seed]), ..cfg.csi };
    let graph = build_graph(&positions, ego_index, cfg.comm_range, |i, j, d| {
        sample_csi(&trace, LinkId { from: vehicles[i].id, to: vehicles[j].id }, d, &cfg.radio, cfg.csi_time)
    })
    .stage("channel")?;
    let routes = select_links(&graph).stage("routing")?;

    let reachable = routes.helpers();
    let ego = positions[ego_index];
    let distances: Vec<f64> = reachable.iter().map(|&i| (positions[i][0] - ego[0]).hypot(positions[i][1] - ego[1])).collect();
    let weights = ImportanceWeights::from_distances(&distances, cfg.delay.distance_floor).stage("optimize")?;
    let model = DelayModel {
        gamma: cfg.delay.gamma,
        d_max: cfg.delay.d_max,
        rho_min: cfg.delay.rho_min,
        volumes: vec![cfg.frame_volume_bits; reachable.len()],
        path_delay_per_bit: reachable.iter().map(|&i| routes.path_delay_per_bit[i]).collect(),
    };
    let plan = optimize_delay(&model, &weights, &cfg.pgd).stage("optimize")?;

    let helpers = (0..vehicles.len())
        .filter(|&i| i != ego_index)
        .map(|i| match reachable.iter().position(|&r| r == i) {
            Some(k) => HelperMetrics { id: vehicles[i].id, reachable: true, hops: routes.hops[i], rho: plan.rho[k], delay_s: plan.per_helper_delay[k] },
            None => HelperMetrics { id: vehicles[i].id, reachable: false, hops: 0, rho: 0.0, delay_s: 0.0 },
        })
        .collect();
    Ok(NetworkPlan { helpers, mean_delay_s: plan.mean_delay })
}

/// Synthetic camera frame of a vehicle: a top-down patch around it in its
/// own frame, with targets bright, occluders dark, seeded sensor noise and a
/// per-vehicle color response standing in for camera domain differences.
pub fn render_view(world: &WorldScenario, vehicle_id: u64, size: usize, seed: u64) -> Result<Image> {
    let pose = world
        .vehicle(vehicle_id)
        .ok_or_else(|| Error::Input(format!("no vehicle with id {vehicle_id}")))?
        .pose;
    let mut cast = rng::stream(vehicle_id, &[0xCA57]);
    let gains: [f64; 3] = std::array::from_fn(|_| cast.random_range(0.7..1.3));
    let offsets: [f64; 3] = std::array::from_fn(|_| cast.random_range(-25.0..25.0));
    let mut noise = rng::stream(seed, &[vehicle_id, 0x1E5]);
    let scale = VIEW_EXTENT / size as f64;
    let half = size as f64 / 2.0;
    let mut base = vec![0.0; size * size];
    for (k, b) in base.iter_mut().enumerate() {
        let local = [(k % size) as f64 + 0.5 - half, half - (k / size) as f64 - 0.5].map(|t| t * scale);
        let p = pose.apply(local);
        let inside = |o: &&crate::worldsim::WorldObject| (0..2).all(|a| (p[a] - o.center[a]).abs() <= o.half_extents[a]);
        *b = match world.objects.iter().find(inside) {
            Some(o) if o.occluder => 55.0,
            Some(_) => 205.0,
            None => 115.0 + 0.4 * local[0],
        };
    }
    Image::from_fn(size, size, 3, |c, x, y| {
        let z: f64 = noise.sample(StandardNormal);
        (gains[c] * base[y * size + x] + offsets[c] + 6.0 * z).clamp(0.0, 255.0)
    })
}

/// Mask radius over which alignment is scored: the aligned band, or the
/// whole spectrum when the mask is empty.
pub fn alignment_band(p: &AlignParams) -> f64 {
    if p.mask_radius > 0.0 {
        p.mask_radius
    } else {
        1.0
    }
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// One full pipeline run on a loaded world.
pub fn run_seed(cfg: &RunConfig, world: &WorldScenario, seed: u64, timed: bool) -> Result<MetricsReport> {
    run_seed_with_grids(cfg, world, seed, timed).map(|(r, _)| r)
}

/// [`run_seed`] that also returns the fused, ego-only and truth grids.
pub fn run_seed_with_grids(cfg: &RunConfig, world: &WorldScenario, seed: u64, timed: bool) -> Result<(MetricsReport, FusionGrids)> {
    let start = timed.then(Instant::now);
    let net = plan_network(cfg, world, seed)?;
    let contributors: Vec<(u64, f64)> =
        net.helpers.iter().filter(|h| h.reachable).map(|h| (h.id, cfg.base_latency + h.delay_s)).collect();
    let rhos: Vec<f64> = net.helpers.iter().filter(|h| h.reachable).map(|h| h.rho).collect();

    let ego_id = world.ego().id;
    let ego_frame = render_view(world, ego_id, cfg.image_size, seed).stage("sensing")?;
    let frames = contributors
        .iter()
        .map(|&(id, latency)| render_view(&world.translated(-latency), id, cfg.image_size, seed))
        .collect::<Result<Vec<_>>>()
        .stage("sensing")?;

    let params = if cfg.refine_steps > 0 && !frames.is_empty() {
        let rho = mean(rhos.iter().copied());
        codec::refine(&cfg.codec, &frames, rho, cfg.refine_steps).stage("codec")?
    } else {
        cfg.codec.clone()
    };
    let band = alignment_band(&cfg.align);
    let mut rate = Vec::new();
    let mut psnr = Vec::new();
    let mut loss = Vec::new();
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for (frame, &rho) in frames.iter().zip(&rhos) {
        let encoded = codec::encode(frame, &params, rho).stage("codec")?;
        let decoded = codec::decode(&encoded, &params).stage("codec")?;
        let mse = frame.mse(&decoded).stage("codec")?;
        rate.push(encoded.rate_bits);
        psnr.push(codec::psnr(frame, &decoded).stage("codec")?);
        loss.push(rd_loss(encoded.rate_bits, mse, rho, params.lambda0));
        let aligned = align_amplitude(&decoded, &ego_frame, &cfg.align).stage("align")?;
        pre.push(band_histogram_distance(&decoded, &ego_frame, HISTOGRAM_BINS, band).stage("align")?);
        post.push(band_histogram_distance(&aligned, &ego_frame, HISTOGRAM_BINS, band).stage("align")?);
    }
    let psnr_db = if psnr.is_empty() || psnr.iter().any(|p| p.is_infinite()) { f64::INFINITY } else { mean(psnr.into_iter()) };

    let trial = TrialParams {
        sensor: cfg.sensor,
        sigma_xy: cfg.pose_noise.sigma_xy,
        sigma_yaw: cfg.pose_noise.sigma_yaw,
        grid_resolution: cfg.grid_resolution,
        seed,
    };
    let fusion = simulate_fusion(world, &contributors, &trial).stage("fusion")?;

    let report = MetricsReport {
        seed,
        helpers: net.helpers,
        mean_delay_s: net.mean_delay_s,
        codec: CodecMetrics { rate_bits: rate.iter().sum(), psnr_db, rd_loss: mean(loss.into_iter()) },
        alignment: AlignmentMetrics { pre_distance: mean(pre.into_iter()), post_distance: mean(post.into_iter()) },
        perception: PerceptionMetrics { iou_single: fusion.iou_single, iou_fused: fusion.iou_fused },
        wall_time_s: start.map(|s| s.elapsed().as_secs_f64()),
    };
    Ok((report, fusion.grids))
}

fn load_world(cfg: &RunConfig) -> Result<WorldScenario> {
    WorldScenario::load(&cfg.scenario).stage("scenario")
}

/// Run the pipeline once per configured seed, in seed order.
pub fn run_scenario(cfg: &RunConfig) -> Result<Vec<MetricsReport>> {
    cfg.validate()?;
    let world = load_world(cfg)?;
    cfg.seeds.iter().map(|&s| run_seed(cfg, &world, s, false)).collect()
}

/// Header of the per-helper plan CSV.
pub const PLAN_HEADER: [&str; 5] = ["helper_id", "rho", "delay_s", "reachable", "hops"];

/// Per-helper compression plan of the first configured seed, as CSV.
pub fn plan_csv(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let world = load_world(cfg)?;
    let plan = plan_network(cfg, &world, cfg.seeds[0])?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(PLAN_HEADER).map_err(csv_err)?;
    for h in &plan.helpers {
        w.write_record([h.id.to_string(), h.rho.to_string(), h.delay_s.to_string(), h.reachable.to_string(), h.hops.to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
