//! Obstacle-avoidance engine for assistive navigation.
//!
//! Depth frames and head poses go in; a persistent obstacle map in a
//! gravity-aligned global frame and collision-free heading suggestions come out.
//! The geometry pipeline is generic over the scalar type ([`Real`]: `f32` or
//! `f64`); the `*64`/`*32` aliases below pick one.

pub mod floor_removal;
pub mod frame_ingest;
pub mod geometry;
pub mod heading_planner;
pub mod obstacle_clustering;
pub mod obstacle_map;
pub mod pipeline;
pub mod scalar;
pub mod scene_sim;
pub mod transit_nav;

pub use floor_removal::{fit_floor, fit_floor_with_hint, split_floor, PlaneModel, RansacParams};
pub use frame_ingest::{
    back_project, transform_to_camera, transform_to_grf, voxel_downsample, CameraIntrinsics, DepthFrame, FrameTag,
    HeadPose, IngestError, PointCloud,
};
pub use geometry::{Aabb, Mat3, Rect, Vec2, Vec3};
pub use heading_planner::{
    find_safe_heading, find_safe_heading_parallel, is_heading_valid, HeadingQuery, HeadingResult, HeadingStatus,
    PlannerParams,
};
pub use obstacle_clustering::{cluster_boxes, cluster_to_aabb, dbscan, ClusterLabeling, DbscanParams, NOISE};
pub use obstacle_map::{FlatObstacle, MapFormatError, MergePolicy, Obstacle, ObstacleMap};
pub use pipeline::{FrameReport, Pipeline, PipelineConfig, PipelineError, PointLabel, StageTimings};
pub use scalar::{angle_diff_degrees, normalize_degrees, Real};
pub use scene_sim::{render_depth, run_walk, run_walk_scripted, step_agent, AgentState, SceneSpec, WalkConfig, WalkTrace};

pub type Vec3f64 = Vec3<f64>;
pub type Vec3f32 = Vec3<f32>;
pub type PointCloud64 = PointCloud<f64>;
pub type PointCloud32 = PointCloud<f32>;
pub type DepthFrame64 = DepthFrame<f64>;
pub type DepthFrame32 = DepthFrame<f32>;
pub type HeadPose64 = HeadPose<f64>;
pub type HeadPose32 = HeadPose<f32>;
pub type Aabb64 = Aabb<f64>;
pub type Aabb32 = Aabb<f32>;
pub type ObstacleMap64 = ObstacleMap<f64>;
pub type ObstacleMap32 = ObstacleMap<f32>;
pub type Pipeline64 = Pipeline<f64>;
pub type Pipeline32 = Pipeline<f32>;
pub type PipelineConfig64 = PipelineConfig<f64>;
pub type PlannerParams64 = PlannerParams<f64>;
pub type HeadingResult64 = HeadingResult<f64>;
pub type SceneSpec64 = SceneSpec<f64>;
