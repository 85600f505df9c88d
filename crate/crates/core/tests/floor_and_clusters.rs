mod support;

use navi_core::scene_sim::render_depth;
use navi_core::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Floor samples on z = `height` with Gaussian noise, plus a box of clutter.
fn noisy_floor_scene(seed: u64, height: f64, sigma: f64) -> PointCloud<f64> {
    let mut rng = support::rng(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut pts: Vec<Vec3<f64>> = (0..1000)
        .map(|_| Vec3::new(rng.random_range(0.0..5.0), rng.random_range(-2.5..2.5), height + noise.sample(&mut rng)))
        .collect();
    pts.extend((0..300).map(|_| {
        Vec3::new(
            rng.random_range(2.0..2.6),
            rng.random_range(-0.3..0.3),
            rng.random_range(height + 0.1..height + 1.7),
        )
    }));
    PointCloud::new(pts, FrameTag::Grf)
}

#[test]
fn floor_recovery_over_seeds() {
    let sigma = 0.05 / 3.0;
    for seed in 0..100 {
        let truth = -0.2 + (seed as f64) * 0.004;
        let cloud = noisy_floor_scene(seed, truth, sigma);
        let params = RansacParams { seed, ..RansacParams::default() };
        let plane = fit_floor(&cloud, &params).expect("floor found");
        assert!((plane.offset - truth).abs() <= 2.0 * sigma, "seed {seed}: offset {}", plane.offset);
        assert!(plane.tilt_degrees() <= 2.0, "seed {seed}: tilt {}", plane.tilt_degrees());
        assert!((plane.normal.norm() - 1.0).abs() < 1e-9);
        assert!(plane.normal.z >= 0.0);
    }
}

#[test]
fn fit_is_deterministic_per_seed() {
    let cloud = noisy_floor_scene(3, 0.0, 0.01);
    let params = RansacParams { seed: 11, ..RansacParams::default() };
    assert_eq!(fit_floor(&cloud, &params), fit_floor(&cloud, &params));
}

#[test]
fn corridor_scene_separates_box_from_floor() {
    // Figure-4 style: floor plus one person-sized box, noise free
    let person = Aabb::<f64>::new(Vec3::new(2.5, -0.25, 0.0), Vec3::new(2.9, 0.25, 1.7)).unwrap();
    let scene = SceneSpec {
        boxes: vec![person],
        ..SceneSpec::default()
    };
    let k = CameraIntrinsics::with_horizontal_fov(160, 144, 75.0).unwrap();
    let pose = HeadPose::looking(Vec3::new(0.0, 0.0, 1.6), 0.0, 20.0, 0.0);
    let frame = render_depth(&scene, &pose, &k);
    let cloud = transform_to_grf(&back_project(&frame, 0.25, 7.5).unwrap(), &pose).unwrap();
    let plane = fit_floor(&cloud, &RansacParams::default()).unwrap();
    let (floor, rest) = split_floor(&cloud, &plane, 0.05);
    assert_eq!(floor.len() + rest.len(), cloud.len());
    // labels by construction: everything on the box is above 0.05 m
    let box_points = cloud.points.iter().filter(|p| p.z > 0.05).count();
    assert_eq!(rest.len(), box_points);
    let grown = Aabb::new(person.min - Vec3::splat(1e-6), person.max + Vec3::splat(1e-6)).unwrap();
    for p in &rest.points {
        assert!(grown.contains(*p), "{p:?} outside the box");
    }

    let sparse = voxel_downsample(&rest, 0.1).unwrap();
    let labels = dbscan(&sparse, &DbscanParams::default());
    assert_eq!(labels.cluster_count, 1);
    let b = cluster_to_aabb(&sparse, &labels, 0).unwrap();
    // visible faces are recovered to within one voxel
    assert!((b.min.x - person.min.x).abs() <= 0.1);
    assert!((b.min.y - person.min.y).abs() <= 0.1 && (b.max.y - person.max.y).abs() <= 0.1);
    assert!((b.max.z - person.max.z).abs() <= 0.1 && b.min.z <= 0.15);
}

#[test]
fn partition_property_on_random_clouds() {
    let mut rng = support::rng(5);
    for _ in 0..50 {
        let cloud = PointCloud::new(support::random_cloud(&mut rng, 300), FrameTag::Grf);
        let plane = PlaneModel {
            normal: Vec3::unit_z(),
            offset: rng.random_range(0.0..1.0),
            inlier_count: 0,
        };
        let (floor, rest) = split_floor(&cloud, &plane, 0.05);
        assert_eq!(floor.len() + rest.len(), cloud.len());
        let mut all: Vec<[u64; 3]> = floor.points.iter().chain(&rest.points).map(|p| p.to_array().map(f64::to_bits)).collect();
        let mut orig: Vec<[u64; 3]> = cloud.points.iter().map(|p| p.to_array().map(f64::to_bits)).collect();
        all.sort();
        orig.sort();
        assert_eq!(all, orig);
    }
}

#[test]
fn two_separated_groups() {
    let mut rng = support::rng(1);
    let mut pts = Vec::new();
    for center in [Vec3::new(0.0, 0.0, 1.0), Vec3::new(5.0, 0.0, 1.0)] {
        for _ in 0..20 {
            pts.push(center + Vec3::new(rng.random_range(-0.025..0.025), rng.random_range(-0.025..0.025), rng.random_range(-0.025..0.025)));
        }
    }
    let params = DbscanParams { eps: 0.3, min_pts: 5 };
    let labels = dbscan(&PointCloud::new(pts.clone(), FrameTag::Grf), &params);
    assert_eq!(labels.cluster_count, 2);
    assert_eq!(labels.noise_count(), 0);
    assert!(support::same_up_to_permutation(&labels.labels, &support::brute_force_dbscan(&pts, 0.3, 5)));
}

#[test]
fn grid_dbscan_matches_brute_force() {
    let mut rng = support::rng(42);
    for case in 0..200 {
        let pts = support::random_cloud(&mut rng, 500);
        let eps = rng.random_range(0.05..0.6);
        let min_pts = rng.random_range(1..10);
        let got = dbscan(&PointCloud::new(pts.clone(), FrameTag::Grf), &DbscanParams { eps, min_pts });
        let want = support::brute_force_dbscan(&pts, eps, min_pts);
        assert!(support::same_up_to_permutation(&got.labels, &want), "case {case}");
        // ids are contiguous and every cluster has a point
        let max = got.labels.iter().copied().max().unwrap_or(-1);
        assert_eq!(max + 1, got.cluster_count as i32);
    }
}

proptest! {
    #[test]
    fn shrinking_eps_never_reduces_noise(seed in 0u64..1000, eps in 0.1..0.6f64, shrink in 0.3..1.0f64, min_pts in 1usize..10) {
        let pts = support::random_cloud(&mut support::rng(seed), 300);
        let cloud = PointCloud::new(pts, FrameTag::Grf);
        let wide = dbscan(&cloud, &DbscanParams { eps, min_pts });
        let narrow = dbscan(&cloud, &DbscanParams { eps: eps * shrink, min_pts });
        prop_assert!(narrow.noise_count() >= wide.noise_count());
    }

    #[test]
    fn every_box_contains_its_members(seed in 0u64..1000) {
        let pts = support::random_cloud(&mut support::rng(seed), 300);
        let cloud = PointCloud::new(pts, FrameTag::Grf);
        let labels = dbscan(&cloud, &DbscanParams { eps: 0.3, min_pts: 4 });
        let boxes = cluster_boxes(&cloud, &labels).unwrap();
        for (i, &l) in labels.labels.iter().enumerate() {
            if l >= 0 {
                prop_assert!(boxes[l as usize].contains(cloud.points[i]));
                prop_assert_eq!(boxes[l as usize], cluster_to_aabb(&cloud, &labels, l).unwrap());
            }
        }
    }
}
