//! Depth frames to registered point clouds.
//!
//! Camera frame convention: +z forward along the optical axis, +x right, +y down.
//! The global reference frame (GRF) is gravity aligned with +Z up.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Mat3, Vec3};
use crate::scalar::Real;

pub const DEFAULT_MIN_DEPTH: f64 = 0.25;
pub const DEFAULT_MAX_DEPTH: f64 = 7.5;
pub const DEFAULT_VOXEL_SIZE: f64 = 0.10;
pub const DEFAULT_WIDTH: u32 = 320;
pub const DEFAULT_HEIGHT: u32 = 288;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("invalid camera intrinsics: {0}")]
    Intrinsics(String),
    #[error("depth grid has {actual} samples, intrinsics require {expected}")]
    GridSize { expected: usize, actual: usize },
    #[error("depth sample {index} is {value}; samples must be finite and >= 0")]
    DepthValue { index: usize, value: f64 },
    #[error("invalid depth range ({min}, {max}]")]
    DepthRange { min: f64, max: f64 },
    #[error("rotation is not orthonormal with determinant +1")]
    NotARotation,
    #[error("point cloud is in the {actual:?} frame, expected {expected:?}")]
    WrongFrame { expected: FrameTag, actual: FrameTag },
    #[error("voxel size must be positive, got {0}")]
    VoxelSize(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CameraIntrinsics<T: Real> {
    pub width: u32,
    pub height: u32,
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(width: u32, height: u32, fx: T, fy: T, cx: T, cy: T) -> Result<Self, IngestError> {
        let k = Self {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
        };
        k.validate()?;
        Ok(k)
    }

    /// Pinhole camera with the principal point at the image center and the
    /// given horizontal field of view.
    pub fn with_horizontal_fov(width: u32, height: u32, hfov_deg: T) -> Result<Self, IngestError> {
        let two = T::lit(2.0);
        let w = T::lit(width as f64);
        let f = (w / two) / (hfov_deg.to_radians() / two).tan();
        Self::new(
            width,
            height,
            f,
            f,
            w / two - T::lit(0.5),
            T::lit(height as f64) / two - T::lit(0.5),
        )
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::Intrinsics(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("width and height must be positive");
        }
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return bad("focal lengths must be positive");
        }
        let in_range = |c: T, limit: u32| c >= T::zero() && c < T::lit(limit as f64);
        if !in_range(self.cx, self.width) || !in_range(self.cy, self.height) {
            return bad("principal point must lie inside the image");
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// A timestamped row-major grid of metric depths. `0.0` marks an invalid sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame<T: Real> {
    pub timestamp: f64,
    pub depth: Vec<T>,
    pub intrinsics: CameraIntrinsics<T>,
}

impl<T: Real> DepthFrame<T> {
    pub fn new(timestamp: f64, depth: Vec<T>, intrinsics: CameraIntrinsics<T>) -> Result<Self, IngestError> {
        intrinsics.validate()?;
        check_grid_len(depth.len(), &intrinsics)?;
        if let Some((index, v)) = depth
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= T::zero()))
        {
            return Err(IngestError::DepthValue {
                index,
                value: v.as_f64(),
            });
        }
        Ok(Self {
            timestamp,
            depth,
            intrinsics,
        })
    }
}

fn check_grid_len<T: Real>(len: usize, k: &CameraIntrinsics<T>) -> Result<(), IngestError> {
    if len != k.pixel_count() {
        return Err(IngestError::GridSize {
            expected: k.pixel_count(),
            actual: len,
        });
    }
    Ok(())
}

/// Rigid camera-to-GRF transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HeadPose<T: Real> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
    pub timestamp: f64,
}

impl<T: Real> HeadPose<T> {
    pub fn new(rotation: Mat3<T>, translation: Vec3<T>, timestamp: f64) -> Result<Self, IngestError> {
        let pose = Self {
            rotation,
            translation,
            timestamp,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity(timestamp: f64) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zero(),
            timestamp,
        }
    }

    /// Camera at `position` looking along GRF yaw `yaw_deg` (counter-clockwise
    /// from +X) and pitched down by `pitch_down_deg`, with no roll.
    pub fn looking(position: Vec3<T>, yaw_deg: T, pitch_down_deg: T, timestamp: f64) -> Self {
        let (sy, cy) = yaw_deg.to_radians().sin_cos();
        let (sp, cp) = pitch_down_deg.to_radians().sin_cos();
        let forward = Vec3::new(cp * cy, cp * sy, -sp);
        let right = Vec3::new(sy, -cy, T::zero());
        let down = forward.cross(right);
        Self {
            rotation: Mat3::from_columns(right, down, forward),
            translation: position,
            timestamp,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.rotation.is_rotation(rotation_tolerance::<T>()) && self.translation.is_finite() {
            Ok(())
        } else {
            Err(IngestError::NotARotation)
        }
    }

    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    pub fn apply_inverse(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.transpose().mul_vec(p - self.translation)
    }
}

fn rotation_tolerance<T: Real>() -> T {
    T::lit(1e-6).max(T::epsilon() * T::lit(16.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameTag {
    Camera,
    Grf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T: Real> {
    pub points: Vec<Vec3<T>>,
    pub frame: FrameTag,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Vec3<T>>, frame: FrameTag) -> Self {
        Self { points, frame }
    }

    pub fn empty(frame: FrameTag) -> Self {
        Self::new(Vec::new(), frame)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn expect_frame(&self, expected: FrameTag) -> Result<(), IngestError> {
        if self.frame == expected {
            Ok(())
        } else {
            Err(IngestError::WrongFrame {
                expected,
                actual: self.frame,
            })
        }
    }
}

/// Pinhole back-projection of every pixel with depth in `(min_depth, max_depth]`.
/// Output is in row-major pixel order.
pub fn back_project<T: Real>(
    frame: &DepthFrame<T>,
    min_depth: T,
    max_depth: T,
) -> Result<PointCloud<T>, IngestError> {
    if !(min_depth >= T::zero() && max_depth > min_depth) {
        return Err(IngestError::DepthRange {
            min: min_depth.as_f64(),
            max: max_depth.as_f64(),
        });
    }
    let k = &frame.intrinsics;
    k.validate()?;
    check_grid_len(frame.depth.len(), k)?;

    let width = k.width as usize;
    let col_offset: Vec<T> = (0..width).map(|u| T::lit(u as f64) - k.cx).collect();
    let mut points = Vec::with_capacity(frame.depth.len() / 2);
    for (v, row) in frame.depth.chunks_exact(width).enumerate() {
        let row_offset = T::lit(v as f64) - k.cy;
        for (&d, &du) in row.iter().zip(&col_offset) {
            // NaN fails both comparisons
            if d > min_depth && d <= max_depth {
                points.push(Vec3::new(du * d / k.fx, row_offset * d / k.fy, d));
            }
        }
    }
    Ok(PointCloud::new(points, FrameTag::Camera))
}

/// Maps a camera-frame cloud into the GRF: `p ↦ R·p + t`.
pub fn transform_to_grf<T: Real>(cloud: &PointCloud<T>, pose: &HeadPose<T>) -> Result<PointCloud<T>, IngestError> {
    cloud.expect_frame(FrameTag::Camera)?;
    pose.validate()?;
    let points = cloud.points.iter().map(|&p| pose.apply(p)).collect();
    Ok(PointCloud::new(points, FrameTag::Grf))
}

/// Inverse of [`transform_to_grf`].
pub fn transform_to_camera<T: Real>(cloud: &PointCloud<T>, pose: &HeadPose<T>) -> Result<PointCloud<T>, IngestError> {
    cloud.expect_frame(FrameTag::Grf)?;
    pose.validate()?;
    let points = cloud.points.iter().map(|&p| pose.apply_inverse(p)).collect();
    Ok(PointCloud::new(points, FrameTag::Camera))
}

pub(crate) type CellKey = (i64, i64, i64);

#[inline]
pub(crate) fn cell_of<T: Real>(p: Vec3<T>, inv_size: T) -> CellKey {
    let f = |c: T| (c * inv_size).floor().to_i64().unwrap_or(i64::MAX);
    (f(p.x), f(p.y), f(p.z))
}

/// Replaces the points of each occupied origin-anchored cubic voxel by their
/// centroid. Output is sorted by voxel index, so equal inputs give equal outputs.
pub fn voxel_downsample<T: Real>(cloud: &PointCloud<T>, voxel_size: T) -> Result<PointCloud<T>, IngestError> {
    if !(voxel_size > T::zero() && voxel_size.is_finite()) {
        return Err(IngestError::VoxelSize(voxel_size.as_f64()));
    }
    let inv = T::one() / voxel_size;
    let mut cells: HashMap<CellKey, (Vec3<T>, usize)> = HashMap::with_capacity(cloud.len() / 4 + 1);
    for &p in &cloud.points {
        let e = cells.entry(cell_of(p, inv)).or_insert((Vec3::zero(), 0));
        e.0 += p;
        e.1 += 1;
    }
    let mut cells: Vec<(CellKey, Vec3<T>)> = cells
        .into_iter()
        .map(|(key, (sum, n))| (key, sum / T::lit(n as f64)))
        .collect();
    cells.sort_unstable_by_key(|(key, _)| *key);

    // Rounding can push a centroid across a cell face; snap those back to the
    // member closest to the centroid so every output stays inside its own voxel.
    let stray: HashMap<CellKey, usize> = cells
        .iter()
        .enumerate()
        .filter(|(_, (key, c))| cell_of(*c, inv) != *key)
        .map(|(i, (key, _))| (*key, i))
        .collect();
    if !stray.is_empty() {
        let mut best: HashMap<CellKey, (T, Vec3<T>)> = HashMap::new();
        for &p in &cloud.points {
            let key = cell_of(p, inv);
            if let Some(&i) = stray.get(&key) {
                let d = (p - cells[i].1).norm_squared();
                let slot = best.entry(key).or_insert((T::infinity(), p));
                if d < slot.0 {
                    *slot = (d, p);
                }
            }
        }
        for (key, i) in stray {
            cells[i].1 = best[&key].1;
        }
    }

    Ok(PointCloud::new(
        cells.into_iter().map(|(_, c)| c).collect(),
        cloud.frame,
    ))
}
