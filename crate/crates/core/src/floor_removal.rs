//! RANSAC floor extraction restricted to near-horizontal planes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame_ingest::{FrameTag, PointCloud};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// Plane `{p : normal · p = offset}` with an upward-facing unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PlaneModel<T: Real> {
    pub normal: Vec3<T>,
    pub offset: T,
    pub inlier_count: usize,
}

impl<T: Real> PlaneModel<T> {
    /// Signed distance of `p` above the plane.
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        self.normal.dot(p) - self.offset
    }

    /// Angle between the normal and +Z, in degrees.
    pub fn tilt_degrees(&self) -> T {
        self.normal.z.min(T::one()).acos().to_degrees()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RansacParamsError {
    #[error("iterations must be at least 1")]
    Iterations,
    #[error("inlier threshold must be positive")]
    Threshold,
    #[error("horizontality tilt must be in (0, 90) degrees")]
    Tilt,
    #[error("minimum inlier fraction must be in [0, 1]")]
    Fraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct RansacParams<T: Real> {
    pub iterations: usize,
    pub inlier_threshold: T,
    pub horizontality_max_tilt: T,
    pub min_inlier_fraction: T,
    pub seed: u64,
}

impl<T: Real> Default for RansacParams<T> {
    fn default() -> Self {
        Self {
            iterations: 200,
            inlier_threshold: T::lit(0.05),
            horizontality_max_tilt: T::lit(10.0),
            min_inlier_fraction: T::lit(0.15),
            seed: 0,
        }
    }
}

impl<T: Real> RansacParams<T> {
    pub fn validate(&self) -> Result<(), RansacParamsError> {
        if self.iterations < 1 {
            return Err(RansacParamsError::Iterations);
        }
        if !(self.inlier_threshold > T::zero()) {
            return Err(RansacParamsError::Threshold);
        }
        if !(self.horizontality_max_tilt > T::zero() && self.horizontality_max_tilt < T::lit(90.0)) {
            return Err(RansacParamsError::Tilt);
        }
        if !(self.min_inlier_fraction >= T::zero() && self.min_inlier_fraction <= T::one()) {
            return Err(RansacParamsError::Fraction);
        }
        Ok(())
    }
}

/// Plane through three points, normal flipped to face up. `None` when collinear.
fn plane_through<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Option<(Vec3<T>, T)> {
    let mut n = (b - a).cross(c - a).normalized()?;
    if n.z < T::zero() {
        n = -n;
    }
    Some((n, n.dot(a)))
}

fn count_inliers<T: Real>(points: &[Vec3<T>], normal: Vec3<T>, offset: T, threshold: T) -> usize {
    points
        .iter()
        .filter(|p| (normal.dot(**p) - offset).abs() <= threshold)
        .count()
}

/// Least-squares refit of `z = a·x + b·y + c` over the inliers of a
/// near-horizontal plane. Returns `None` if the normal equations are singular.
fn refine<T: Real>(points: &[Vec3<T>], normal: Vec3<T>, offset: T, threshold: T) -> Option<(Vec3<T>, T)> {
    let inliers: Vec<Vec3<T>> = points
        .iter()
        .copied()
        .filter(|p| (normal.dot(*p) - offset).abs() <= threshold)
        .collect();
    if inliers.len() < 3 {
        return None;
    }
    // center for conditioning
    let n = T::lit(inliers.len() as f64);
    let mean = inliers.iter().fold(Vec3::zero(), |acc, p| acc + *p) / n;
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for p in &inliers {
        let d = *p - mean;
        sxx = sxx + d.x * d.x;
        sxy = sxy + d.x * d.y;
        syy = syy + d.y * d.y;
        sxz = sxz + d.x * d.z;
        syz = syz + d.y * d.z;
    }
    let det = sxx * syy - sxy * sxy;
    if !(det.abs() > T::epsilon() * (sxx * syy).max(T::min_positive_value())) {
        return None;
    }
    let a = (sxz * syy - syz * sxy) / det;
    let b = (syz * sxx - sxz * sxy) / det;
    let normal = Vec3::new(-a, -b, T::one()).normalized()?;
    Some((normal, normal.dot(mean)))
}

/// Fits the dominant near-horizontal plane with seeded RANSAC.
///
/// Candidate planes tilted more than `horizontality_max_tilt` from +Z are
/// discarded before inlier counting. The winning candidate is refined by least
/// squares over its inliers. Returns `None` for fewer than three points, when no
/// admissible candidate exists, or when the best inlier fraction is below
/// `min_inlier_fraction`.
pub fn fit_floor<T: Real>(cloud: &PointCloud<T>, params: &RansacParams<T>) -> Option<PlaneModel<T>> {
    fit_floor_with_hint(cloud, params, None)
}

/// Like [`fit_floor`], but scores `hint` (typically the previous frame's floor)
/// as one extra candidate before sampling. The hint gets no special treatment:
/// it must pass the tilt filter and win on inlier count like any sample.
pub fn fit_floor_with_hint<T: Real>(
    cloud: &PointCloud<T>,
    params: &RansacParams<T>,
    hint: Option<&PlaneModel<T>>,
) -> Option<PlaneModel<T>> {
    debug_assert_eq!(cloud.frame, FrameTag::Grf);
    let pts = &cloud.points;
    let n = pts.len();
    if n < 3 || params.validate().is_err() {
        return None;
    }
    let min_normal_z = params.horizontality_max_tilt.to_radians().cos();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Vec3<T>, T, usize)> = hint
        .filter(|h| h.normal.z >= min_normal_z)
        .map(|h| (h.normal, h.offset, count_inliers(pts, h.normal, h.offset, params.inlier_threshold)));

    for _ in 0..params.iterations {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let k = rng.random_range(0..n);
        if i == j || j == k || i == k {
            continue;
        }
        let Some((normal, offset)) = plane_through(pts[i], pts[j], pts[k]) else {
            continue;
        };
        if normal.z < min_normal_z {
            continue;
        }
        let count = count_inliers(pts, normal, offset, params.inlier_threshold);
        if best.is_none_or(|(_, _, c)| count > c) {
            best = Some((normal, offset, count));
        }
    }

    let (normal, offset, count) = best?;
    if T::lit(count as f64) < params.min_inlier_fraction * T::lit(n as f64) {
        return None;
    }
    let (normal, offset) = refine(pts, normal, offset, params.inlier_threshold)
        .filter(|(rn, _)| rn.z >= min_normal_z)
        .unwrap_or((normal, offset));
    Some(PlaneModel {
        normal,
        offset,
        inlier_count: count_inliers(pts, normal, offset, params.inlier_threshold),
    })
}

/// Partitions a cloud into points within `threshold` of the plane and the rest,
/// preserving input order within each part.
pub fn split_floor<T: Real>(cloud: &PointCloud<T>, plane: &PlaneModel<T>, threshold: T) -> (PointCloud<T>, PointCloud<T>) {
    let (floor, rest): (Vec<_>, Vec<_>) = cloud
        .points
        .iter()
        .partition(|p| plane.signed_distance(**p).abs() <= threshold);
    (PointCloud::new(floor, cloud.frame), PointCloud::new(rest, cloud.frame))
}
