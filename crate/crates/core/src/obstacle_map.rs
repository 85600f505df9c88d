//! Persistent obstacle list in the GRF.
//!
//! Detections from successive frames are merged into existing obstacles by
//! box-center distance, stale obstacles expire, and readers get 2D footprints
//! of everything inside a height slab.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Rect};
use crate::scalar::Real;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SLAB_MIN_Z: f64 = 0.1;
pub const DEFAULT_SLAB_MAX_Z: f64 = 2.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Obstacle<T: Real> {
    pub id: u64,
    #[serde(rename = "box")]
    pub bounds: Aabb<T>,
    pub observations: u64,
    pub first_seen: f64,
    pub last_seen: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct MergePolicy<T: Real> {
    /// Maximum box-center distance for a detection to merge into an obstacle.
    pub merge_center_dist: T,
    /// Seconds after `last_seen` before an obstacle is dropped.
    pub expiry: f64,
    /// Weight kept by the stored box when blending in a detection.
    pub smoothing: T,
}

impl<T: Real> Default for MergePolicy<T> {
    fn default() -> Self {
        Self {
            merge_center_dist: T::lit(0.5),
            expiry: 10.0,
            smoothing: T::lit(0.7),
        }
    }
}

impl<T: Real> MergePolicy<T> {
    pub fn is_valid(&self) -> bool {
        self.merge_center_dist >= T::zero() && self.expiry > 0.0 && self.smoothing >= T::zero() && self.smoothing <= T::one()
    }
}

/// Ground-plane footprint of an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FlatObstacle<T: Real> {
    pub id: u64,
    pub rect: Rect<T>,
}

#[derive(Debug, Error)]
pub enum MapFormatError {
    #[error("malformed obstacle map document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported obstacle map version {found}, expected {FORMAT_VERSION}")]
    Version { found: u32 },
    #[error("obstacle map violates an invariant: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMap<T: Real> {
    obstacles: Vec<Obstacle<T>>,
    next_id: u64,
    policy: MergePolicy<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields)]
struct MapDocument<T: Real> {
    version: u32,
    next_id: u64,
    obstacles: Vec<Obstacle<T>>,
}

impl<T: Real> Default for ObstacleMap<T> {
    fn default() -> Self {
        Self::new(MergePolicy::default())
    }
}

impl<T: Real> ObstacleMap<T> {
    pub fn new(policy: MergePolicy<T>) -> Self {
        Self {
            obstacles: Vec::new(),
            next_id: 0,
            policy,
        }
    }

    pub fn obstacles(&self) -> &[Obstacle<T>] {
        &self.obstacles
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn policy(&self) -> &MergePolicy<T> {
        &self.policy
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&Obstacle<T>> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    /// Merges one frame's detections.
    ///
    /// Candidate (detection, obstacle) pairs within `merge_center_dist` are
    /// matched greedily by ascending center distance (ties by detection index,
    /// then obstacle position), one-to-one. Matched obstacles blend their box
    /// corners toward the detection; unmatched detections become new obstacles
    /// in input order.
    pub fn integrate(&mut self, detections: &[Aabb<T>], now: f64) {
        let mut pairs: Vec<(T, usize, usize)> = Vec::new();
        for (d, det) in detections.iter().enumerate() {
            let c = det.center();
            for (o, obs) in self.obstacles.iter().enumerate() {
                let dist = obs.bounds.center().distance(c);
                if dist <= self.policy.merge_center_dist {
                    pairs.push((dist, d, o));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut det_used = vec![false; detections.len()];
        let mut obs_used = vec![false; self.obstacles.len()];
        let keep = self.policy.smoothing;
        let take = T::one() - keep;
        for (_, d, o) in pairs {
            if det_used[d] || obs_used[o] {
                continue;
            }
            det_used[d] = true;
            obs_used[o] = true;
            let obs = &mut self.obstacles[o];
            let det = &detections[d];
            let blended = Aabb {
                min: obs.bounds.min * keep + det.min * take,
                max: obs.bounds.max * keep + det.max * take,
            };
            // blending two valid boxes keeps min <= max up to rounding
            obs.bounds = Aabb {
                min: blended.min.min_by_component(blended.max),
                max: blended.max.max_by_component(blended.min),
            };
            obs.observations += 1;
            obs.last_seen = now.max(obs.last_seen);
        }

        for (det, _) in detections.iter().zip(&det_used).filter(|(_, used)| !**used) {
            self.obstacles.push(Obstacle {
                id: self.next_id,
                bounds: *det,
                observations: 1,
                first_seen: now,
                last_seen: now,
            });
            self.next_id += 1;
        }
    }

    /// Drops obstacles not seen for longer than the policy's expiry.
    pub fn expire(&mut self, now: f64) {
        let expiry = self.policy.expiry;
        self.obstacles.retain(|o| now - o.last_seen <= expiry);
    }

    /// Footprints of obstacles whose z-extent meets `[slab_min_z, slab_max_z]`.
    pub fn project_2d(&self, slab_min_z: T, slab_max_z: T) -> Vec<FlatObstacle<T>> {
        self.obstacles
            .iter()
            .filter(|o| o.bounds.min.z <= slab_max_z && o.bounds.max.z >= slab_min_z)
            .map(|o| FlatObstacle {
                id: o.id,
                rect: o.bounds.footprint(),
            })
            .collect()
    }

    /// Versioned JSON document.
    pub fn save(&self) -> Vec<u8> {
        let doc = MapDocument {
            version: FORMAT_VERSION,
            next_id: self.next_id,
            obstacles: self.obstacles.clone(),
        };
        serde_json::to_vec(&doc).expect("obstacle map serializes")
    }

    pub fn load(bytes: &[u8], policy: MergePolicy<T>) -> Result<Self, MapFormatError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_slice(bytes)?;
        if header.version != FORMAT_VERSION {
            return Err(MapFormatError::Version { found: header.version });
        }
        let doc: MapDocument<T> = serde_json::from_slice(bytes)?;
        let mut ids = std::collections::HashSet::new();
        for o in &doc.obstacles {
            let bad = |m: &str| Err(MapFormatError::Invariant(format!("obstacle {}: {m}", o.id)));
            if !ids.insert(o.id) {
                return bad("duplicate id");
            }
            if o.id >= doc.next_id {
                return bad("id not below next_id");
            }
            if o.observations < 1 {
                return bad("observations must be at least 1");
            }
            if !(o.last_seen >= o.first_seen) {
                return bad("last_seen precedes first_seen");
            }
            if !o.bounds.is_valid() {
                return bad("box min exceeds max");
            }
        }
        Ok(Self {
            obstacles: doc.obstacles,
            next_id: doc.next_id,
            policy,
        })
    }
}
