//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use std::collections::HashMap;

use navi_core::{FlatObstacle, HeadingQuery, PlannerParams, Vec2, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// O(n²) textbook DBSCAN: points in index order, FIFO expansion, closed eps-balls.
pub fn brute_force_dbscan(points: &[Vec3<f64>], eps: f64, min_pts: usize) -> Vec<i32> {
    let n = points.len();
    let dist = |a: usize, b: usize| {
        let d = [points[a].x - points[b].x, points[a].y - points[b].y, points[a].z - points[b].z];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    };
    let region = |i: usize| (0..n).filter(|&j| dist(i, j) <= eps).collect::<Vec<_>>();
    let core: Vec<bool> = (0..n).map(|i| region(i).len() >= min_pts).collect();
    let mut labels = vec![-1i32; n];
    let mut assigned = vec![false; n];
    let mut next = 0;
    for i in 0..n {
        if assigned[i] || !core[i] {
            continue;
        }
        let mut stack = vec![i];
        assigned[i] = true;
        labels[i] = next;
        while let Some(p) = stack.pop() {
            if !core[p] {
                continue;
            }
            for q in region(p) {
                if !assigned[q] {
                    assigned[q] = true;
                    labels[q] = next;
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    labels
}

/// Same partition, allowing a relabeling of cluster ids; noise must match exactly.
pub fn same_up_to_permutation(a: &[i32], b: &[i32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x < 0) != (y < 0) {
            return false;
        }
        if x < 0 {
            continue;
        }
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

fn point_rect_distance(p: (f64, f64), o: &FlatObstacle<f64>) -> f64 {
    let (r0, r1) = ((o.rect.min.x, o.rect.min.y), (o.rect.max.x, o.rect.max.y));
    let cx = p.0.clamp(r0.0, r1.0);
    let cy = p.1.clamp(r0.1, r1.1);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Exhaustive 360° scan of the angular grid. Returns the signed step count of
/// the valid heading with the smallest |deviation| (clockwise first on ties)
/// within the deviation limit, or `None` if nothing is valid.
pub fn exhaustive_heading_oracle(query: &HeadingQuery<f64>, params: &PlannerParams<f64>) -> Option<i64> {
    let slots = (360.0 / params.angular_step).round() as i64;
    let valid = |j: i64| {
        let a = (query.desired_heading + j as f64 * params.angular_step).to_radians();
        params.ring_radii.iter().all(|r| {
            let s = (query.position.x + r * a.cos(), query.position.y + r * a.sin());
            query.obstacles.iter().all(|o| point_rect_distance(s, o) > params.clearance)
        })
    };
    let mut best: Option<i64> = None;
    for j in 0..slots {
        if !valid(j) {
            continue;
        }
        // signed deviation in (-slots/2, slots/2]
        let signed = if j > slots / 2 { j - slots } else { j };
        if (signed.abs() as f64) * params.angular_step > params.max_deviation + 1e-9 {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => signed.abs() < b.abs() || (signed.abs() == b.abs() && signed < b),
        };
        if better {
            best = Some(signed);
        }
    }
    best
}

/// Random rectangles scattered around the origin.
pub fn random_obstacle_field(rng: &mut ChaCha8Rng, count: usize) -> Vec<FlatObstacle<f64>> {
    (0..count)
        .map(|id| {
            let c = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let h = Vec2::new(rng.random_range(0.05..0.8), rng.random_range(0.05..0.8));
            FlatObstacle {
                id: id as u64,
                rect: navi_core::Rect::new(c - h, c + h).unwrap(),
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Clumpy random cloud: a few Gaussian-ish blobs plus uniform clutter.
pub fn random_cloud(rng: &mut ChaCha8Rng, max_points: usize) -> Vec<Vec3<f64>> {
    let n = rng.random_range(0..=max_points);
    let blobs: Vec<Vec3<f64>> = (0..rng.random_range(1..6))
        .map(|_| Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.0..2.0)))
        .collect();
    (0..n)
        .map(|_| {
            if rng.random_bool(0.8) {
                let c = blobs[rng.random_range(0..blobs.len())];
                let s = rng.random_range(0.05..0.4);
                c + Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
            } else {
                Vec3::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(0.0..2.5))
            }
        })
        .collect()
}

/// Fixes every `spacing` meters (roughly) along the polyline through each
/// step's waypoint and the final step's end, linearly interpolated in lat/lon.
pub fn scripted_track(plan: &navi_core::transit_nav::TransitPlan, spacing: f64) -> Vec<navi_core::transit_nav::GeoCoord> {
    use navi_core::transit_nav::{haversine, GeoCoord};
    let mut corners: Vec<GeoCoord> = plan.steps.iter().map(|s| s.waypoint).collect();
    if let Some(last) = plan.steps.last() {
        corners.push(last.end);
    }
    // start a little before the first waypoint
    if let [a, b, ..] = corners[..] {
        corners.insert(0, GeoCoord::new(a.lat - (b.lat - a.lat) * 0.5, a.lon - (b.lon - a.lon) * 0.5).unwrap());
    }
    let mut out = Vec::new();
    for w in corners.windows(2) {
        let n = (haversine(w[0], w[1]) / spacing).ceil().max(1.0) as usize;
        for i in 0..n {
            let t = i as f64 / n as f64;
            out.push(GeoCoord::new(w[0].lat + (w[1].lat - w[0].lat) * t, w[0].lon + (w[1].lon - w[0].lon) * t).unwrap());
        }
    }
    out.extend(corners.last());
    out
}
