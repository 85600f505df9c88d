//! HTTP/JSON service.
//!
//! | route                  | body / query                          | answer                                   |
//! |------------------------|---------------------------------------|------------------------------------------|
//! | `POST /session`        | `{"intrinsics": {...}}`               | 201 `{session_id, width, height}`        |
//! | `POST /frames`         | `{timestamp, pose, depth}` (base64)   | `{frame_id, obstacles_total, processing_ms}` |
//! | `GET /heading`         | `?x=&y=&desired=`                     | heading result                           |
//! | `GET /obstacles`       |                                       | obstacle list                            |
//! | `POST /navigation/plan`| `{destination, lat, lon}`             | `{steps}`                                |
//! | `POST /navigation/fix` | `{lat, lon}`                          | `{instruction, current_step, finished}`  |
//!
//! Frames are handed to one writer thread through a bounded queue; when it is
//! full the request gets 503. Readers work on the snapshot published after the
//! most recent frame.

use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use navi_core::transit_nav::{next_instruction, DirectionsProvider, FixtureProvider, GeoCoord, TriggerState, DEFAULT_TRIGGER_RADIUS_M};
use navi_core::{
    find_safe_heading, CameraIntrinsics, DepthFrame64, FlatObstacle, FrameReport, HeadPose64, HeadingQuery, HeadingResult64,
    Pipeline64, PipelineConfig64, PipelineError, PlannerParams64, Vec2,
};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot, watch};

use crate::config::SessionConfig;
use crate::replay::decode_depth;
use crate::runner::obstacles_json;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn no_session() -> Self {
        Self::new(StatusCode::CONFLICT, "no session; POST /session first")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRequest {
    pub intrinsics: CameraIntrinsics<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionResponse {
    pub session_id: u64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRequest {
    pub timestamp: f64,
    pub pose: HeadPose64,
    /// Base64 of the little-endian f32 depth grid.
    pub depth: String,
}

impl FrameRequest {
    pub fn encode(pose: &HeadPose64, depth_le_f32: &[u8]) -> Self {
        Self {
            timestamp: pose.timestamp,
            pose: *pose,
            depth: base64::engine::general_purpose::STANDARD.encode(depth_le_f32),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameAck {
    pub frame_id: u64,
    pub obstacles_total: usize,
    pub processing_ms: f64,
}

#[derive(Debug, Deserialize)]
pub struct HeadingParams {
    pub x: f64,
    pub y: f64,
    pub desired: f64,
}

#[derive(Debug, Deserialize)]
pub struct PlanRequest {
    pub destination: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Deserialize)]
pub struct FixRequest {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FixResponse {
    pub instruction: Option<String>,
    pub current_step: usize,
    pub finished: bool,
}

/// What readers see: the map as of the last processed frame.
#[derive(Debug, Default)]
struct Snapshot {
    obstacles_json: Bytes,
    flat: Vec<FlatObstacle<f64>>,
}

impl Snapshot {
    fn of(pipeline: &Pipeline64) -> Self {
        Self {
            obstacles_json: Bytes::from(obstacles_json(pipeline)),
            flat: pipeline.flat_obstacles(),
        }
    }
}

struct Job {
    frame: DepthFrame64,
    pose: HeadPose64,
    reply: oneshot::Sender<Result<FrameAck, String>>,
}

struct Session {
    intrinsics: CameraIntrinsics<f64>,
    jobs: mpsc::Sender<Job>,
    snapshot: watch::Receiver<Arc<Snapshot>>,
}

/// Runs one frame and times it. `processing_ms` covers exactly the pipeline call.
pub fn ingest_one(pipeline: &mut Pipeline64, frame: &DepthFrame64, pose: &HeadPose64) -> Result<(FrameAck, FrameReport<f64>), PipelineError> {
    let start = Instant::now();
    let report = pipeline.process_frame(frame, pose)?;
    let processing_ms = start.elapsed().as_secs_f64() * 1e3;
    let ack = FrameAck {
        frame_id: report.frame_index,
        obstacles_total: report.obstacles_total,
        processing_ms,
    };
    Ok((ack, report))
}

fn writer_loop(mut pipeline: Pipeline64, mut jobs: mpsc::Receiver<Job>, publish: watch::Sender<Arc<Snapshot>>) {
    while let Some(job) = jobs.blocking_recv() {
        let result = ingest_one(&mut pipeline, &job.frame, &job.pose).map(|(ack, _)| ack);
        if result.is_ok() {
            publish.send_replace(Arc::new(Snapshot::of(&pipeline)));
        }
        // the requester may have gone away; the frame still counts
        let _ = job.reply.send(result.map_err(|e| e.to_string()));
    }
    log::debug!("session writer finished after {} frames", pipeline.frames_seen());
}

impl Session {
    fn start(id: u64, intrinsics: CameraIntrinsics<f64>, pipeline: PipelineConfig64, queue_depth: usize) -> Result<Self, PipelineError> {
        let pipeline = Pipeline64::new(pipeline)?;
        let (jobs, rx) = mpsc::channel(queue_depth);
        let (publish, snapshot) = watch::channel(Arc::new(Snapshot::of(&pipeline)));
        std::thread::Builder::new()
            .name(format!("navi-writer-{id}"))
            .spawn(move || writer_loop(pipeline, rx, publish))
            .expect("spawn writer thread");
        Ok(Self {
            intrinsics,
            jobs,
            snapshot,
        })
    }
}

struct Inner {
    config: SessionConfig,
    planner: PlannerParams64,
    session: RwLock<Option<Arc<Session>>>,
    sessions_started: Mutex<u64>,
    navigation: Mutex<Option<TriggerState>>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: SessionConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                planner: config.pipeline.planner.clone(),
                config,
                session: RwLock::new(None),
                sessions_started: Mutex::new(0),
                navigation: Mutex::new(None),
            }),
        }
    }

    fn session(&self) -> Result<Arc<Session>, ApiError> {
        self.inner
            .session
            .read()
            .expect("session lock")
            .clone()
            .ok_or_else(ApiError::no_session)
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: SessionRequest = parse_json(&body)?;
    req.intrinsics
        .validate()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let id = {
        let mut n = state.inner.sessions_started.lock().expect("counter lock");
        *n += 1;
        *n
    };
    let cfg = &state.inner.config;
    let session = Session::start(id, req.intrinsics, cfg.pipeline.clone(), cfg.queue_depth)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    *state.inner.session.write().expect("session lock") = Some(Arc::new(session));
    log::info!("session {id} started for {}x{} frames", req.intrinsics.width, req.intrinsics.height);
    Ok((
        StatusCode::CREATED,
        Json(SessionResponse {
            session_id: id,
            width: req.intrinsics.width,
            height: req.intrinsics.height,
        }),
    ))
}

async fn post_frame(State(state): State<AppState>, body: Bytes) -> Result<Json<FrameAck>, ApiError> {
    let session = state.session()?;
    let req: FrameRequest = parse_json(&body)?;
    if !req.timestamp.is_finite() {
        return Err(ApiError::bad_request("timestamp must be finite"));
    }
    let pose = HeadPose64 {
        timestamp: req.timestamp,
        ..req.pose
    };
    pose.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(req.depth.as_bytes())
        .map_err(|e| ApiError::bad_request(format!("depth is not base64: {e}")))?;
    let depth = decode_depth(&bytes, &session.intrinsics).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let frame = DepthFrame64::new(req.timestamp, depth, session.intrinsics).map_err(|e| ApiError::bad_request(e.to_string()))?;

    let (reply, answer) = oneshot::channel();
    match session.jobs.try_send(Job { frame, pose, reply }) {
        Ok(()) => {}
        Err(mpsc::error::TrySendError::Full(_)) => {
            return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "ingest queue is full"));
        }
        Err(mpsc::error::TrySendError::Closed(_)) => {
            return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "session writer stopped"));
        }
    }
    match answer.await {
        Ok(Ok(ack)) => Ok(Json(ack)),
        Ok(Err(e)) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e)),
        Err(_) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "session writer stopped")),
    }
}

async fn get_heading(
    State(state): State<AppState>,
    query: Result<Query<HeadingParams>, QueryRejection>,
) -> Result<Json<HeadingResult64>, ApiError> {
    let session = state.session()?;
    let Query(p) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    if !(p.x.is_finite() && p.y.is_finite() && p.desired.is_finite()) {
        return Err(ApiError::bad_request("x, y and desired must be finite"));
    }
    let snapshot = session.snapshot.borrow().clone();
    let query = HeadingQuery::new(Vec2::new(p.x, p.y), p.desired, snapshot.flat.clone());
    Ok(Json(find_safe_heading(&query, &state.inner.planner)))
}

async fn get_obstacles(State(state): State<AppState>) -> Result<Response, ApiError> {
    let session = state.session()?;
    let body = session.snapshot.borrow().obstacles_json.clone();
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn set_plan(State(state): State<AppState>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let req: PlanRequest = parse_json(&body)?;
    let origin = GeoCoord::new(req.lat, req.lon).map_err(|e| ApiError::bad_request(e.to_string()))?;
    if req.destination.is_empty() || req.destination.contains(['/', '\\', '.']) {
        return Err(ApiError::bad_request("destination must be a plain fixture name"));
    }
    let dir = state
        .inner
        .config
        .fixtures_dir
        .clone()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no fixtures_dir configured"))?;
    let plan = FixtureProvider { dir }
        .directions(origin, &req.destination)
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, e.to_string()))?;
    let steps = plan.steps.len();
    *state.inner.navigation.lock().expect("navigation lock") = Some(TriggerState::new(plan, DEFAULT_TRIGGER_RADIUS_M));
    Ok(Json(serde_json::json!({ "steps": steps })))
}

async fn post_fix(State(state): State<AppState>, body: Bytes) -> Result<Json<FixResponse>, ApiError> {
    let req: FixRequest = parse_json(&body)?;
    let fix = GeoCoord::new(req.lat, req.lon).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut nav = state.inner.navigation.lock().expect("navigation lock");
    let current = nav
        .as_mut()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "no navigation plan; POST /navigation/plan first"))?;
    let instruction = match next_instruction(current, fix) {
        Some((text, next)) => {
            *current = next;
            Some(text)
        }
        None => None,
    };
    Ok(Json(FixResponse {
        instruction,
        current_step: current.current_step,
        finished: current.is_finished(),
    }))
}

pub fn router(config: SessionConfig) -> Router {
    let limit = config.max_body_bytes;
    Router::new()
        .route("/session", post(create_session))
        .route("/frames", post(post_frame))
        .route("/heading", get(get_heading))
        .route("/obstacles", get(get_obstacles))
        .route("/navigation/plan", post(set_plan))
        .route("/navigation/fix", post(post_fix))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(AppState::new(config))
}

/// Binds `config.listen_address` and serves until Ctrl-C.
pub async fn serve(config: SessionConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(&config.listen_address).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
