//! Per-frame obstacle pipeline: depth frame in, updated obstacle map out.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floor_removal::{fit_floor_with_hint, split_floor, PlaneModel, RansacParams, RansacParamsError};
use crate::frame_ingest::{
    back_project, transform_to_grf, voxel_downsample, DepthFrame, FrameTag, HeadPose, IngestError, PointCloud,
    DEFAULT_MAX_DEPTH, DEFAULT_MIN_DEPTH, DEFAULT_VOXEL_SIZE,
};
use crate::geometry::Vec3;
use crate::heading_planner::{find_safe_heading, HeadingQuery, HeadingResult, PlannerParams, PlannerParamsError};
use crate::geometry::Vec2;
use crate::obstacle_clustering::{cluster_boxes, dbscan, ClusterError, DbscanParams, NOISE};
use crate::obstacle_map::{FlatObstacle, MergePolicy, ObstacleMap, DEFAULT_SLAB_MAX_Z, DEFAULT_SLAB_MIN_Z};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Ransac(#[from] RansacParamsError),
    #[error(transparent)]
    Planner(#[from] PlannerParamsError),
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct PipelineConfig<T: Real> {
    pub min_depth: T,
    pub max_depth: T,
    pub voxel_size: T,
    pub ransac: RansacParams<T>,
    /// Points within this distance of the fitted floor are removed.
    pub floor_threshold: T,
    /// Reuse the first fitted floor for the rest of the session instead of
    /// refitting every frame.
    pub lock_floor: bool,
    pub dbscan: DbscanParams<T>,
    pub merge: MergePolicy<T>,
    pub slab_min_z: T,
    pub slab_max_z: T,
    pub planner: PlannerParams<T>,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        let ransac = RansacParams::default();
        Self {
            min_depth: T::lit(DEFAULT_MIN_DEPTH),
            max_depth: T::lit(DEFAULT_MAX_DEPTH),
            voxel_size: T::lit(DEFAULT_VOXEL_SIZE),
            floor_threshold: ransac.inlier_threshold,
            ransac,
            lock_floor: false,
            dbscan: DbscanParams::default(),
            merge: MergePolicy::default(),
            slab_min_z: T::lit(DEFAULT_SLAB_MIN_Z),
            slab_max_z: T::lit(DEFAULT_SLAB_MAX_Z),
            planner: PlannerParams::default(),
        }
    }
}

impl<T: Real> PipelineConfig<T> {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.min_depth >= T::zero() && self.max_depth > self.min_depth) {
            return Err(PipelineError::Config("depth range must satisfy 0 <= min < max".into()));
        }
        if !(self.voxel_size > T::zero()) {
            return Err(PipelineError::Config("voxel_size must be positive".into()));
        }
        if !(self.floor_threshold > T::zero()) {
            return Err(PipelineError::Config("floor_threshold must be positive".into()));
        }
        if !self.merge.is_valid() {
            return Err(PipelineError::Config("merge policy out of range".into()));
        }
        if !(self.slab_min_z < self.slab_max_z) {
            return Err(PipelineError::Config("slab_min_z must be below slab_max_z".into()));
        }
        self.ransac.validate()?;
        self.dbscan.validate()?;
        self.planner.validate()?;
        Ok(())
    }
}

/// Wall-clock time spent in each stage of one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub back_project: Duration,
    pub transform: Duration,
    pub downsample: Duration,
    pub floor: Duration,
    pub cluster: Duration,
    pub map: Duration,
}

impl StageTimings {
    pub const NAMES: [&'static str; 6] = ["back_project", "transform", "downsample", "floor", "cluster", "map"];

    pub fn as_array(&self) -> [Duration; 6] {
        [self.back_project, self.transform, self.downsample, self.floor, self.cluster, self.map]
    }

    pub fn total(&self) -> Duration {
        self.as_array().iter().sum()
    }
}

/// Label of a point in a scene dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLabel {
    Floor,
    Noise,
    Cluster(usize),
}

impl std::fmt::Display for PointLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointLabel::Floor => f.write_str("floor"),
            PointLabel::Noise => f.write_str("noise"),
            PointLabel::Cluster(k) => write!(f, "cluster_{k}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrameReport<T: Real> {
    pub frame_index: u64,
    pub timestamp: f64,
    pub raw_points: usize,
    pub downsampled_points: usize,
    pub floor: Option<PlaneModel<T>>,
    pub detections: usize,
    pub obstacles_total: usize,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
    /// Downsampled GRF points with their labels; only filled when requested.
    pub labeled_points: Option<Vec<(Vec3<T>, PointLabel)>>,
}

/// Stateful frame processor owning the session's obstacle map.
#[derive(Debug, Clone)]
pub struct Pipeline<T: Real> {
    config: PipelineConfig<T>,
    map: ObstacleMap<T>,
    frames_seen: u64,
    locked_floor: Option<PlaneModel<T>>,
    last_floor: Option<PlaneModel<T>>,
}

impl<T: Real> Pipeline<T> {
    pub fn new(config: PipelineConfig<T>) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self {
            map: ObstacleMap::new(config.merge),
            config,
            frames_seen: 0,
            locked_floor: None,
            last_floor: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig<T> {
        &self.config
    }

    pub fn map(&self) -> &ObstacleMap<T> {
        &self.map
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    /// Current obstacle footprints inside the configured height slab.
    pub fn flat_obstacles(&self) -> Vec<FlatObstacle<T>> {
        self.map.project_2d(self.config.slab_min_z, self.config.slab_max_z)
    }

    pub fn heading(&self, position: Vec2<T>, desired_heading: T) -> HeadingResult<T> {
        let query = HeadingQuery::new(position, desired_heading, self.flat_obstacles());
        find_safe_heading(&query, &self.config.planner)
    }

    pub fn process_frame(&mut self, frame: &DepthFrame<T>, pose: &HeadPose<T>) -> Result<FrameReport<T>, PipelineError> {
        self.process(frame, pose, false)
    }

    /// Like [`process_frame`](Self::process_frame) and also returns the labeled
    /// downsampled cloud.
    pub fn process_frame_labeled(&mut self, frame: &DepthFrame<T>, pose: &HeadPose<T>) -> Result<FrameReport<T>, PipelineError> {
        self.process(frame, pose, true)
    }

    fn process(&mut self, frame: &DepthFrame<T>, pose: &HeadPose<T>, keep_labels: bool) -> Result<FrameReport<T>, PipelineError> {
        let cfg = &self.config;
        let mut timings = StageTimings::default();
        let mut warnings = Vec::new();

        let t = Instant::now();
        let camera = back_project(frame, cfg.min_depth, cfg.max_depth)?;
        timings.back_project = t.elapsed();

        let t = Instant::now();
        let world = transform_to_grf(&camera, pose)?;
        timings.transform = t.elapsed();

        let t = Instant::now();
        let sparse = voxel_downsample(&world, cfg.voxel_size)?;
        timings.downsample = t.elapsed();

        let t = Instant::now();
        let floor = match self.locked_floor {
            Some(plane) => Some(plane),
            None => {
                let params = RansacParams {
                    seed: cfg.ransac.seed.wrapping_add(self.frames_seen),
                    ..cfg.ransac
                };
                // last frame's floor competes as a candidate so an unlucky
                // sample run does not drop a floor that is still in view
                fit_floor_with_hint(&sparse, &params, self.last_floor.as_ref())
            }
        };
        self.last_floor = floor;
        if cfg.lock_floor && self.locked_floor.is_none() {
            self.locked_floor = floor;
        }
        let (floor_pts, rest) = match &floor {
            Some(plane) => split_floor(&sparse, plane, cfg.floor_threshold),
            None => {
                let msg = format!("frame {}: no floor plane found, keeping all points", self.frames_seen);
                log::warn!("{msg}");
                warnings.push(msg);
                (PointCloud::empty(FrameTag::Grf), sparse.clone())
            }
        };
        timings.floor = t.elapsed();

        let t = Instant::now();
        let labeling = dbscan(&rest, &cfg.dbscan);
        let boxes = cluster_boxes(&rest, &labeling)?;
        timings.cluster = t.elapsed();

        let t = Instant::now();
        self.map.integrate(&boxes, frame.timestamp);
        self.map.expire(frame.timestamp);
        timings.map = t.elapsed();

        let labeled_points = keep_labels.then(|| {
            let mut out: Vec<(Vec3<T>, PointLabel)> = floor_pts.points.iter().map(|&p| (p, PointLabel::Floor)).collect();
            out.extend(rest.points.iter().zip(&labeling.labels).map(|(&p, &l)| {
                let label = if l == NOISE {
                    PointLabel::Noise
                } else {
                    PointLabel::Cluster(l as usize)
                };
                (p, label)
            }));
            out
        });

        let report = FrameReport {
            frame_index: self.frames_seen,
            timestamp: frame.timestamp,
            raw_points: camera.len(),
            downsampled_points: sparse.len(),
            floor,
            detections: boxes.len(),
            obstacles_total: self.map.len(),
            timings,
            warnings,
            labeled_points,
        };
        self.frames_seen += 1;
        Ok(report)
    }
}

/// Writes `x,y,z,label` rows with a header line.
pub fn write_scene_csv<T: Real, W: std::io::Write>(points: &[(Vec3<T>, PointLabel)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "x,y,z,label")?;
    for (p, label) in points {
        writeln!(out, "{},{},{},{}", p.x, p.y, p.z, label)?;
    }
    Ok(())
}
