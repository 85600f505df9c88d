#![allow(dead_code)]

use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use navi_core::{render_depth, Aabb, CameraIntrinsics, HeadPose64, SceneSpec64, Vec3};
use navi_gateway::replay::encode_depth;
use navi_gateway::server::FrameRequest;
use navi_gateway::ReplayWriter;
use tower::ServiceExt;

pub async fn call(app: &Router, method: &str, uri: &str, body: Vec<u8>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(bytes)))
}

pub fn session_body(k: &CameraIntrinsics<f64>) -> Vec<u8> {
    serde_json::to_vec(&serde_json::json!({ "intrinsics": k })).unwrap()
}

pub fn frame_body(pose: &HeadPose64, depth: &[f64]) -> Vec<u8> {
    serde_json::to_vec(&FrameRequest::encode(pose, &encode_depth(depth))).unwrap()
}

pub fn small_camera() -> CameraIntrinsics<f64> {
    CameraIntrinsics::with_horizontal_fov(160, 144, 75.0).unwrap()
}

/// One person-sized box 2 m ahead of a camera at the origin facing +X.
pub fn person_scene() -> SceneSpec64 {
    SceneSpec64 {
        boxes: vec![Aabb::new(Vec3::new(2.0, -0.25, 0.0), Vec3::new(2.4, 0.25, 1.7)).unwrap()],
        ..SceneSpec64::default()
    }
}

pub fn eye_pose(yaw: f64, t: f64) -> HeadPose64 {
    HeadPose64::looking(Vec3::new(0.0, 0.0, 1.6), yaw, 20.0, t)
}

/// Renders `poses` of `scene` into a container at `dir`.
pub fn write_container(dir: &Path, scene: &SceneSpec64, k: &CameraIntrinsics<f64>, poses: &[HeadPose64]) {
    let mut w = ReplayWriter::create(dir, *k, 5.0).unwrap();
    for pose in poses {
        w.push(pose, &render_depth(scene, pose, k).depth).unwrap();
    }
    w.finish().unwrap();
}
