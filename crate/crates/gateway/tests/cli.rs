mod common;

use std::process::Command;

use common::*;
use navi_core::{Aabb, CameraIntrinsics, SceneSpec64, Vec3};

fn navi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_navi"))
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(navi().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(navi().args(["replay"]).output().unwrap().status.code(), Some(1));
    assert_eq!(navi().args(["synth", "x", "--frames", "many"]).output().unwrap().status.code(), Some(1));
    assert_eq!(navi().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let k = CameraIntrinsics::with_horizontal_fov(32, 24, 75.0).unwrap();
    write_container(dir.path(), &person_scene(), &k, &[eye_pose(0.0, 0.0), eye_pose(0.0, 0.2)]);
    let ok = navi().arg("replay").arg(dir.path()).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    std::fs::remove_file(dir.path().join("poses.jsonl")).unwrap();
    let out = navi().arg("replay").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("poses.jsonl"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "version = 7\n").unwrap();
    let out = navi().args(["walk", "--frames", "1", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dump_scene_labels_floor_clusters_and_noise() {
    let dir = tempfile::tempdir().unwrap();
    let k = CameraIntrinsics::with_horizontal_fov(320, 288, 75.0).unwrap();
    let mut scene = person_scene();
    // a small object too sparse to form a cluster
    scene.boxes.push(Aabb::new(Vec3::new(2.0, 1.0, 0.0), Vec3::new(2.06, 1.06, 0.15)).unwrap());
    scene.noise_sigma = 0.01;
    write_container(dir.path(), &scene, &k, &[eye_pose(0.0, 0.0), eye_pose(5.0, 0.2)]);
    let csv = dir.path().join("scene.csv");
    let out = navi().arg("replay").arg(dir.path()).arg("--dump-scene").arg(&csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,z,label"));
    let labels: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert!(labels.contains(&"floor"));
    assert!(labels.contains(&"noise"));
    assert!(labels.iter().any(|l| l.starts_with("cluster_")));
}

#[test]
fn synth_replay_bench_and_obstacles_out() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("corridor");
    let out = navi()
        .args(["synth", "--frames", "12", "--seed", "3", "--width", "160", "--height", "144"])
        .arg(&replay)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let container = navi_gateway::ReplayContainer::open(&replay).unwrap();
    assert_eq!(container.len(), 12);

    let obstacles = dir.path().join("obstacles.json");
    let out = navi().arg("replay").arg(&replay).arg("--bench").arg("--obstacles-out").arg(&obstacles).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for stage in ["back_project", "downsample", "floor", "cluster", "map", "end_to_end", "fps:"] {
        assert!(stdout.contains(stage), "missing {stage} in {stdout}");
    }
    let list: serde_json::Value = serde_json::from_slice(&std::fs::read(&obstacles).unwrap()).unwrap();
    assert!(!list.as_array().unwrap().is_empty());
}

#[test]
fn walk_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("walk.jsonl");
    let out = navi().args(["walk", "--seed", "2", "--frames", "5", "--out"]).arg(&trace).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 5);
    let config = navi().arg("config").output().unwrap();
    let parsed = navi_gateway::SessionConfig::from_toml(&String::from_utf8_lossy(&config.stdout)).unwrap();
    assert_eq!(parsed, navi_gateway::SessionConfig::default());
}

#[test]
fn empty_scene_container_has_no_obstacles() {
    let dir = tempfile::tempdir().unwrap();
    let k = CameraIntrinsics::with_horizontal_fov(64, 48, 75.0).unwrap();
    write_container(dir.path(), &SceneSpec64::default(), &k, &[eye_pose(0.0, 0.0)]);
    let obstacles = dir.path().join("o.json");
    let out = navi().arg("replay").arg(dir.path()).arg("--obstacles-out").arg(&obstacles).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&obstacles).unwrap(), b"[]");
}
