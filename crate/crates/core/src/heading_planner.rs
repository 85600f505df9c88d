//! Safe-heading search over concentric safety rings.
//!
//! A heading is valid when every ring sample along it keeps more than
//! `clearance` from every obstacle footprint. Candidates fan out from the
//! desired heading in `angular_step` increments, alternating clockwise and
//! counter-clockwise, and the first valid one wins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Vec2, Vec3};
use crate::obstacle_map::FlatObstacle;
use crate::scalar::{normalize_degrees, Real};

#[derive(Debug, Error, PartialEq)]
pub enum PlannerParamsError {
    #[error("ring radii must be positive and strictly ascending")]
    Rings,
    #[error("angular step must be positive and divide 360 evenly")]
    Step,
    #[error("max deviation must be in (0, 180]")]
    MaxDeviation,
    #[error("clearance and guidance distance must be non-negative")]
    Distances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct PlannerParams<T: Real> {
    pub ring_radii: Vec<T>,
    /// Degrees between neighbouring candidate headings.
    pub angular_step: T,
    pub clearance: T,
    /// Degrees.
    pub max_deviation: T,
    pub guidance_distance: T,
    /// Height at which the guidance point is placed.
    pub guidance_height: T,
}

impl<T: Real> Default for PlannerParams<T> {
    fn default() -> Self {
        Self {
            ring_radii: vec![T::lit(0.5), T::lit(1.0), T::lit(1.5)],
            angular_step: T::lit(5.0),
            clearance: T::lit(0.4),
            max_deviation: T::lit(120.0),
            guidance_distance: T::lit(1.5),
            guidance_height: T::lit(1.6),
        }
    }
}

impl<T: Real> PlannerParams<T> {
    pub fn validate(&self) -> Result<(), PlannerParamsError> {
        let ascending = self.ring_radii.windows(2).all(|w| w[0] < w[1]);
        if self.ring_radii.is_empty() || !ascending || !(self.ring_radii[0] > T::zero()) {
            return Err(PlannerParamsError::Rings);
        }
        if !(self.angular_step > T::zero()) {
            return Err(PlannerParamsError::Step);
        }
        let slots = T::lit(360.0) / self.angular_step;
        if (slots - slots.round()).abs() > T::lit(1e-6) * slots.max(T::one()) {
            return Err(PlannerParamsError::Step);
        }
        if !(self.max_deviation > T::zero() && self.max_deviation <= T::lit(180.0)) {
            return Err(PlannerParamsError::MaxDeviation);
        }
        if !(self.clearance >= T::zero() && self.guidance_distance >= T::zero()) {
            return Err(PlannerParamsError::Distances);
        }
        Ok(())
    }

    /// Number of candidate headings on the full circle.
    pub fn slot_count(&self) -> usize {
        (T::lit(360.0) / self.angular_step).round().to_usize().unwrap_or(0)
    }

    /// Largest step multiple the search may deviate by.
    pub fn max_steps(&self) -> usize {
        let by_limit = (self.max_deviation / self.angular_step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
        by_limit.min(self.slot_count() / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadingQuery<T: Real> {
    /// User's head position projected onto the ground plane.
    pub position: Vec2<T>,
    /// Degrees in `[0, 360)`, counter-clockwise from GRF +X.
    pub desired_heading: T,
    pub obstacles: Vec<FlatObstacle<T>>,
}

impl<T: Real> HeadingQuery<T> {
    pub fn new(position: Vec2<T>, desired_heading: T, obstacles: Vec<FlatObstacle<T>>) -> Self {
        Self {
            position,
            desired_heading: normalize_degrees(desired_heading),
            obstacles,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadingStatus {
    ClearAhead,
    Deviated,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HeadingResult<T: Real> {
    pub heading: T,
    /// Signed degrees from the desired heading; clockwise is negative.
    pub deviation: T,
    pub guidance_point: Vec3<T>,
    pub status: HeadingStatus,
}

/// True iff every ring sample along `heading` is farther than `clearance`
/// from every obstacle footprint.
pub fn is_heading_valid<T: Real>(query: &HeadingQuery<T>, heading: T, params: &PlannerParams<T>) -> bool {
    let dir = Vec2::from_angle_degrees(heading);
    params.ring_radii.iter().all(|&r| {
        let sample = query.position + dir * r;
        query
            .obstacles
            .iter()
            .all(|o| o.rect.distance_to(sample) > params.clearance)
    })
}

fn candidate<T: Real>(desired: T, signed_steps: i64, step: T) -> T {
    normalize_degrees(desired + T::lit(signed_steps as f64) * step)
}

/// First valid step count `k` in `1..=max_k` on one side (`side` = -1 for
/// clockwise, +1 for counter-clockwise), stopping early at `limit`.
fn scan_side<T: Real>(query: &HeadingQuery<T>, params: &PlannerParams<T>, side: i64, limit: usize) -> Option<usize> {
    (1..=limit).find(|&k| is_heading_valid(query, candidate(query.desired_heading, side * k as i64, params.angular_step), params))
}

fn result_for<T: Real>(query: &HeadingQuery<T>, params: &PlannerParams<T>, signed_steps: Option<i64>) -> HeadingResult<T> {
    match signed_steps {
        None => HeadingResult {
            heading: query.desired_heading,
            deviation: T::zero(),
            guidance_point: query.position.extend(params.guidance_height),
            status: HeadingStatus::Blocked,
        },
        Some(k) => {
            let heading = candidate(query.desired_heading, k, params.angular_step);
            let ground = query.position + Vec2::from_angle_degrees(heading) * params.guidance_distance;
            HeadingResult {
                heading,
                deviation: T::lit(k as f64) * params.angular_step,
                guidance_point: ground.extend(params.guidance_height),
                status: if k == 0 {
                    HeadingStatus::ClearAhead
                } else {
                    HeadingStatus::Deviated
                },
            }
        }
    }
}

/// Valid heading with the smallest deviation from the desired one; ties
/// between equal clockwise and counter-clockwise deviations go clockwise.
pub fn find_safe_heading<T: Real>(query: &HeadingQuery<T>, params: &PlannerParams<T>) -> HeadingResult<T> {
    let max_k = params.max_steps();
    let found = if is_heading_valid(query, query.desired_heading, params) {
        Some(0)
    } else {
        (1..=max_k as i64).find_map(|k| {
            [-k, k]
                .into_iter()
                .find(|&s| is_heading_valid(query, candidate(query.desired_heading, s, params.angular_step), params))
        })
    };
    result_for(query, params, found)
}

/// Same result as [`find_safe_heading`], with the clockwise and
/// counter-clockwise scans running on separate threads.
pub fn find_safe_heading_parallel<T: Real>(query: &HeadingQuery<T>, params: &PlannerParams<T>) -> HeadingResult<T> {
    if is_heading_valid(query, query.desired_heading, params) {
        return result_for(query, params, Some(0));
    }
    let max_k = params.max_steps();
    let (cw, ccw) = std::thread::scope(|s| {
        let ccw = s.spawn(|| scan_side(query, params, 1, max_k));
        let cw = scan_side(query, params, -1, max_k);
        (cw, ccw.join().expect("scan thread panicked"))
    });
    let found = match (cw, ccw) {
        (Some(a), Some(b)) if b < a => Some(b as i64),
        (Some(a), _) => Some(-(a as i64)),
        (None, Some(b)) => Some(b as i64),
        (None, None) => None,
    };
    result_for(query, params, found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn square(cx: f64, cy: f64, half: f64) -> FlatObstacle<f64> {
        FlatObstacle {
            id: 0,
            rect: Rect::new(Vec2::new(cx - half, cy - half), Vec2::new(cx + half, cy + half)).unwrap(),
        }
    }

    #[test]
    fn no_obstacles_everything_valid() {
        let q = HeadingQuery::new(Vec2::zero(), 0.0, vec![]);
        let p = PlannerParams::default();
        assert!((0..72).all(|i| is_heading_valid(&q, i as f64 * 5.0, &p)));
        let r = find_safe_heading(&q, &p);
        assert_eq!((r.heading, r.deviation, r.status), (0.0, 0.0, HeadingStatus::ClearAhead));
    }

    #[test]
    fn obstacle_ahead_blocks_only_forward() {
        // 0.6 m wide square centered 1 m ahead (on the 1.0 m ring)
        let q = HeadingQuery::new(Vec2::zero(), 0.0, vec![square(1.0, 0.0, 0.3)]);
        let p = PlannerParams::default();
        assert!(!is_heading_valid(&q, 0.0, &p));
        assert!(is_heading_valid(&q, 180.0, &p));
    }

    #[test]
    fn ringed_user_is_blocked() {
        let obstacles = (0..8)
            .map(|i| {
                let a = (i as f64 * 45.0).to_radians();
                square(0.5 * a.cos(), 0.5 * a.sin(), 0.2)
            })
            .collect();
        let q = HeadingQuery::new(Vec2::new(0.0, 0.0), 90.0, obstacles);
        let p = PlannerParams::default();
        let r = find_safe_heading(&q, &p);
        assert_eq!(r.status, HeadingStatus::Blocked);
        assert_eq!(r.heading, 90.0);
        assert_eq!(r.guidance_point, Vec3::new(0.0, 0.0, p.guidance_height));
        assert_eq!(find_safe_heading_parallel(&q, &p), r);
    }

    #[test]
    fn symmetric_scene_turns_clockwise() {
        let q = HeadingQuery::new(Vec2::zero(), 90.0, vec![square(0.0, 1.0, 0.3)]);
        let p = PlannerParams::default();
        let r = find_safe_heading(&q, &p);
        assert_eq!(r.status, HeadingStatus::Deviated);
        assert!(r.deviation < 0.0);
        assert!(r.heading < 90.0);
        assert_eq!(find_safe_heading_parallel(&q, &p), r);
    }

    #[test]
    fn guidance_point_geometry() {
        let q = HeadingQuery::new(Vec2::new(2.0, -1.0), 450.0, vec![]);
        assert_eq!(q.desired_heading, 90.0);
        let p = PlannerParams::default();
        let r = find_safe_heading(&q, &p);
        assert!((r.guidance_point.xy() - Vec2::new(2.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn max_deviation_limits_search() {
        // wall of obstacles everywhere except straight behind
        let obstacles = vec![FlatObstacle {
            id: 0,
            rect: Rect::new(Vec2::new(-0.5, -3.0), Vec2::new(3.0, 3.0)).unwrap(),
        }];
        let q = HeadingQuery::new(Vec2::new(-0.6, 0.0), 0.0_f64, obstacles);
        let mut p = PlannerParams::default();
        assert_eq!(find_safe_heading(&q, &p).status, HeadingStatus::Blocked);
        p.max_deviation = 180.0;
        let r = find_safe_heading(&q, &p);
        assert_eq!(r.status, HeadingStatus::Deviated);
        assert!(r.deviation.abs() > 120.0);
    }

    #[test]
    fn params_validation() {
        let mut p = PlannerParams::<f64>::default();
        assert!(p.validate().is_ok());
        p.angular_step = 7.0;
        assert_eq!(p.validate(), Err(PlannerParamsError::Step));
        p.angular_step = 5.0;
        p.ring_radii = vec![1.0, 0.5];
        assert_eq!(p.validate(), Err(PlannerParamsError::Rings));
        p.ring_radii = vec![0.5];
        p.max_deviation = 200.0;
        assert_eq!(p.validate(), Err(PlannerParamsError::MaxDeviation));
    }
}
