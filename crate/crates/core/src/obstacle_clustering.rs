//! DBSCAN over a uniform grid index, and per-cluster bounding boxes.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame_ingest::{cell_of, CellKey, PointCloud};
use crate::geometry::{Aabb, Vec3};
use crate::scalar::Real;

pub const NOISE: i32 = -1;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("label {0} does not exist in the labeling")]
    UnknownLabel(i32),
    #[error("labeling has {labels} entries but the cloud has {points} points")]
    LengthMismatch { labels: usize, points: usize },
    #[error("eps must be positive and min_pts at least 1")]
    Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct DbscanParams<T: Real> {
    pub eps: T,
    pub min_pts: usize,
}

impl<T: Real> Default for DbscanParams<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(0.3),
            min_pts: 8,
        }
    }
}

impl<T: Real> DbscanParams<T> {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.eps > T::zero() && self.eps.is_finite() && self.min_pts >= 1 {
            Ok(())
        } else {
            Err(ClusterError::Params)
        }
    }
}

/// Per-point labels: [`NOISE`] or a cluster id in `0..cluster_count`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub labels: Vec<i32>,
    pub cluster_count: usize,
}

impl ClusterLabeling {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn members(&self, label: i32) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == label)
            .map(|(i, _)| i)
    }
}

/// Uniform grid with cell edge `eps`; every eps-neighbor of a point lies in
/// the 27 cells around it.
struct GridIndex<'a, T: Real> {
    points: &'a [Vec3<T>],
    inv_cell: T,
    eps_sq: T,
    cells: HashMap<CellKey, Vec<u32>>,
}

impl<'a, T: Real> GridIndex<'a, T> {
    fn build(points: &'a [Vec3<T>], eps: T) -> Self {
        let inv_cell = T::one() / eps;
        let mut cells: HashMap<CellKey, Vec<u32>> = HashMap::new();
        for (i, &p) in points.iter().enumerate() {
            cells.entry(cell_of(p, inv_cell)).or_default().push(i as u32);
        }
        Self {
            points,
            inv_cell,
            eps_sq: eps * eps,
            cells,
        }
    }

    /// Indices within `eps` of point `i` (inclusive, self included), appended to `out`.
    fn neighbors(&self, i: usize, out: &mut Vec<u32>) {
        out.clear();
        let p = self.points[i];
        let (cx, cy, cz) = cell_of(p, self.inv_cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    out.extend(
                        bucket
                            .iter()
                            .copied()
                            .filter(|&j| (self.points[j as usize] - p).norm_squared() <= self.eps_sq),
                    );
                }
            }
        }
    }
}

const UNVISITED: i32 = -2;

/// Density-based clustering with Euclidean distance.
///
/// Points are visited in ascending index order; a border point joins the first
/// cluster whose expansion reaches it. Neighborhoods are closed balls of radius
/// `eps` that include the point itself.
pub fn dbscan<T: Real>(cloud: &PointCloud<T>, params: &DbscanParams<T>) -> ClusterLabeling {
    let n = cloud.len();
    if n == 0 || params.validate().is_err() {
        return ClusterLabeling {
            labels: vec![NOISE; n],
            cluster_count: 0,
        };
    }
    let index = GridIndex::build(&cloud.points, params.eps);
    let mut labels = vec![UNVISITED; n];
    let mut next = 0i32;
    let mut neigh = Vec::new();
    let mut queue = VecDeque::new();

    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        index.neighbors(i, &mut neigh);
        if neigh.len() < params.min_pts {
            labels[i] = NOISE;
            continue;
        }
        let cluster = next;
        next += 1;
        labels[i] = cluster;
        queue.clear();
        queue.extend(neigh.iter().copied());
        while let Some(j) = queue.pop_front() {
            let j = j as usize;
            match labels[j] {
                NOISE => labels[j] = cluster,
                UNVISITED => {
                    labels[j] = cluster;
                    index.neighbors(j, &mut neigh);
                    if neigh.len() >= params.min_pts {
                        queue.extend(neigh.iter().copied().filter(|&k| labels[k as usize] < 0));
                    }
                }
                _ => {}
            }
        }
    }

    ClusterLabeling {
        labels,
        cluster_count: next as usize,
    }
}

/// Bounding box of the points carrying `label`.
pub fn cluster_to_aabb<T: Real>(cloud: &PointCloud<T>, labeling: &ClusterLabeling, label: i32) -> Result<Aabb<T>, ClusterError> {
    if labeling.labels.len() != cloud.len() {
        return Err(ClusterError::LengthMismatch {
            labels: labeling.labels.len(),
            points: cloud.len(),
        });
    }
    if label < 0 {
        return Err(ClusterError::UnknownLabel(label));
    }
    Aabb::from_points(labeling.members(label).map(|i| cloud.points[i])).ok_or(ClusterError::UnknownLabel(label))
}

/// Boxes for every cluster, indexed by label, in one pass over the cloud.
pub fn cluster_boxes<T: Real>(cloud: &PointCloud<T>, labeling: &ClusterLabeling) -> Result<Vec<Aabb<T>>, ClusterError> {
    if labeling.labels.len() != cloud.len() {
        return Err(ClusterError::LengthMismatch {
            labels: labeling.labels.len(),
            points: cloud.len(),
        });
    }
    let mut bounds: Vec<Option<(Vec3<T>, Vec3<T>)>> = vec![None; labeling.cluster_count];
    for (&p, &l) in cloud.points.iter().zip(&labeling.labels) {
        if l < 0 {
            continue;
        }
        let slot = &mut bounds[l as usize];
        *slot = Some(match *slot {
            None => (p, p),
            Some((lo, hi)) => (lo.min_by_component(p), hi.max_by_component(p)),
        });
    }
    bounds
        .into_iter()
        .enumerate()
        .map(|(l, b)| b.map(|(min, max)| Aabb { min, max }).ok_or(ClusterError::UnknownLabel(l as i32)))
        .collect()
}
