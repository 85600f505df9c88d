//! Synthetic scenes, analytic depth rendering and closed-loop walks.
//!
//! Scenes are an optional infinite floor plus axis-aligned boxes. Depth is
//! rendered by casting one pinhole ray per pixel and intersecting it with the
//! floor plane and every box (slab method), so ground truth is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::frame_ingest::{CameraIntrinsics, DepthFrame, HeadPose, DEFAULT_HEIGHT, DEFAULT_MAX_DEPTH, DEFAULT_WIDTH};
use crate::geometry::{Aabb, Vec2, Vec3};
use crate::heading_planner::{HeadingResult, HeadingStatus};
use crate::obstacle_map::FlatObstacle;
use crate::pipeline::{Pipeline, PipelineConfig, PipelineError};
use crate::scalar::{angle_diff_degrees, normalize_degrees, Real};

/// Simulated sensor rate.
pub const STREAM_HZ: f64 = 5.0;
pub const DEFAULT_TURN_RATE: f64 = 120.0;
pub const DEFAULT_WALK_SPEED: f64 = 0.8;
pub const DEFAULT_EYE_HEIGHT: f64 = 1.6;
pub const DEFAULT_PITCH_DOWN: f64 = 20.0;
pub const DEFAULT_HFOV: f64 = 75.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SceneSpec<T: Real> {
    /// Height of the infinite floor plane, if the scene has one.
    pub floor_z: Option<T>,
    pub boxes: Vec<Aabb<T>>,
    pub walls: Vec<Aabb<T>>,
    pub noise_sigma: T,
    pub seed: u64,
    /// Surfaces farther than this along the optical axis read as invalid.
    pub max_range: T,
}

impl<T: Real> Default for SceneSpec<T> {
    fn default() -> Self {
        Self {
            floor_z: Some(T::zero()),
            boxes: Vec::new(),
            walls: Vec::new(),
            noise_sigma: T::zero(),
            seed: 0,
            max_range: T::lit(DEFAULT_MAX_DEPTH),
        }
    }
}

impl<T: Real> SceneSpec<T> {
    pub fn solids(&self) -> impl Iterator<Item = &Aabb<T>> {
        self.boxes.iter().chain(&self.walls)
    }

    /// Ground-plane distance from `p` to the nearest box or wall footprint.
    pub fn clearance_at(&self, p: Vec2<T>) -> T {
        self.solids()
            .map(|b| b.footprint().distance_to(p))
            .fold(T::infinity(), T::min)
    }

    /// Distance along `dir` from `origin` to the first surface, if any.
    pub fn cast_ray(&self, origin: Vec3<T>, dir: Vec3<T>) -> Option<T> {
        let mut best: Option<T> = None;
        if let Some(fz) = self.floor_z {
            if dir.z < T::zero() && origin.z > fz {
                best = Some((fz - origin.z) / dir.z);
            }
        }
        for b in self.solids() {
            if let Some(t) = b.ray_intersection(origin, dir, T::zero()) {
                if best.is_none_or(|cur| t < cur) {
                    best = Some(t);
                }
            }
        }
        best
    }
}

fn frame_rng(seed: u64, timestamp: f64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ timestamp.to_bits().rotate_left(29))
}

/// Renders a depth frame of `scene` seen from `pose`.
///
/// Each pixel holds the camera-z depth of the nearest surface along its ray
/// plus seeded Gaussian noise; misses and hits beyond `max_range` are `0.0`.
pub fn render_depth<T: Real>(scene: &SceneSpec<T>, pose: &HeadPose<T>, intrinsics: &CameraIntrinsics<T>) -> DepthFrame<T> {
    let (w, h) = (intrinsics.width as usize, intrinsics.height as usize);
    let origin = pose.translation;
    let sigma = scene.noise_sigma.as_f64();
    let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    let mut rng = frame_rng(scene.seed, pose.timestamp);

    // Only boxes in front of the camera can be hit.
    let forward = pose.rotation.column(2);
    let visible: Vec<Aabb<T>> = scene
        .solids()
        .filter(|b| {
            let corners = [b.min.x, b.max.x].into_iter().flat_map(|x| {
                [b.min.y, b.max.y]
                    .into_iter()
                    .flat_map(move |y| [b.min.z, b.max.z].into_iter().map(move |z| Vec3::new(x, y, z)))
            });
            corners.into_iter().any(|c| (c - origin).dot(forward) > T::zero())
        })
        .copied()
        .collect();
    let pruned = SceneSpec {
        boxes: visible,
        walls: Vec::new(),
        ..scene.clone()
    };

    let mut depth = Vec::with_capacity(w * h);
    for v in 0..h {
        let dy = (T::lit(v as f64) - intrinsics.cy) / intrinsics.fy;
        for u in 0..w {
            let dx = (T::lit(u as f64) - intrinsics.cx) / intrinsics.fx;
            let dir = pose.rotation.mul_vec(Vec3::new(dx, dy, T::one()));
            let mut d = match pruned.cast_ray(origin, dir) {
                Some(t) if t <= scene.max_range => t,
                _ => T::zero(),
            };
            if let Some(n) = &noise {
                // draw for every pixel so the noise pattern does not depend on hits
                let e = T::lit(n.sample(&mut rng));
                if d > T::zero() {
                    d = (d + e).max(T::zero());
                }
            }
            depth.push(d);
        }
    }
    DepthFrame {
        timestamp: pose.timestamp,
        depth,
        intrinsics: *intrinsics,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AgentState<T: Real> {
    pub position: Vec2<T>,
    /// Degrees, counter-clockwise from GRF +X.
    pub yaw: T,
    pub speed: T,
    pub goal: Vec2<T>,
}

impl<T: Real> AgentState<T> {
    pub fn bearing_to_goal(&self) -> T {
        normalize_degrees((self.goal - self.position).angle_degrees())
    }

    pub fn distance_to_goal(&self) -> T {
        self.position.distance(self.goal)
    }
}

/// Slews yaw toward the planner heading by at most `max_turn_rate·dt` degrees,
/// then advances `speed·dt` along the new yaw. A blocked result stops the agent.
pub fn step_agent<T: Real>(state: &AgentState<T>, result: &HeadingResult<T>, dt: T, max_turn_rate: T) -> AgentState<T> {
    let max_turn = max_turn_rate * dt;
    let wanted = angle_diff_degrees(state.yaw, result.heading);
    let turn = wanted.max(-max_turn).min(max_turn);
    let yaw = normalize_degrees(state.yaw + turn);
    let mut next = AgentState { yaw, ..*state };
    if result.status == HeadingStatus::Blocked {
        next.speed = T::zero();
    } else {
        next.position = state.position + Vec2::from_angle_degrees(yaw) * (state.speed * dt);
    }
    next
}

/// Replaces box `box_index` of the scene with `to` just before frame `frame`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoxMove<T: Real> {
    pub frame: usize,
    pub box_index: usize,
    pub to: Aabb<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig<T: Real> {
    pub intrinsics: CameraIntrinsics<T>,
    pub pipeline: PipelineConfig<T>,
    pub eye_height: T,
    pub pitch_down: T,
    /// Degrees per second.
    pub max_turn_rate: T,
    pub rate_hz: f64,
    pub goal_tolerance: T,
}

impl<T: Real> Default for WalkConfig<T> {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::with_horizontal_fov(DEFAULT_WIDTH, DEFAULT_HEIGHT, T::lit(DEFAULT_HFOV))
                .expect("default intrinsics are valid"),
            pipeline: PipelineConfig::default(),
            eye_height: T::lit(DEFAULT_EYE_HEIGHT),
            pitch_down: T::lit(DEFAULT_PITCH_DOWN),
            max_turn_rate: T::lit(DEFAULT_TURN_RATE),
            rate_hz: STREAM_HZ,
            goal_tolerance: T::lit(0.3),
        }
    }
}

impl<T: Real> WalkConfig<T> {
    pub fn head_pose(&self, agent: &AgentState<T>, timestamp: f64) -> HeadPose<T> {
        HeadPose::looking(agent.position.extend(self.eye_height), agent.yaw, self.pitch_down, timestamp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct WalkStep<T: Real> {
    pub t: f64,
    pub position: Vec2<T>,
    pub yaw: T,
    pub heading: T,
    pub status: HeadingStatus,
    /// Distance from the agent center to the nearest scene solid after the step.
    pub min_clearance: T,
    #[serde(skip)]
    pub obstacles: Vec<FlatObstacle<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace<T: Real> {
    pub steps: Vec<WalkStep<T>>,
    pub reached_goal: bool,
}

impl<T: Real> WalkTrace<T> {
    pub fn min_clearance(&self) -> T {
        self.steps.iter().map(|s| s.min_clearance).fold(T::infinity(), T::min)
    }

    pub fn was_blocked(&self) -> bool {
        self.steps.iter().any(|s| s.status == HeadingStatus::Blocked)
    }

    /// One JSON object per step: `{t, position, yaw, heading, status, min_clearance}`.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in &self.steps {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Closed-loop walk: render, run the pipeline, plan toward the goal, step.
/// Stops early once the agent is within `goal_tolerance` of its goal.
pub fn run_walk<T: Real>(
    scene: &SceneSpec<T>,
    start: &AgentState<T>,
    config: &WalkConfig<T>,
    frames: usize,
) -> Result<WalkTrace<T>, PipelineError> {
    run_walk_scripted(scene, start, config, frames, &[])
}

pub fn run_walk_scripted<T: Real>(
    scene: &SceneSpec<T>,
    start: &AgentState<T>,
    config: &WalkConfig<T>,
    frames: usize,
    moves: &[BoxMove<T>],
) -> Result<WalkTrace<T>, PipelineError> {
    let mut scene = scene.clone();
    let mut pipeline = Pipeline::new(config.pipeline.clone())?;
    let mut agent = *start;
    let dt = 1.0 / config.rate_hz;
    let mut steps = Vec::with_capacity(frames);
    let mut reached_goal = agent.distance_to_goal() <= config.goal_tolerance;

    for frame in 0..frames {
        if reached_goal {
            break;
        }
        for m in moves.iter().filter(|m| m.frame == frame) {
            if let Some(b) = scene.boxes.get_mut(m.box_index) {
                *b = m.to;
            }
        }
        let t = frame as f64 * dt;
        let pose = config.head_pose(&agent, t);
        let depth = render_depth(&scene, &pose, &config.intrinsics);
        pipeline.process_frame(&depth, &pose)?;
        let result = pipeline.heading(agent.position, agent.bearing_to_goal());
        let walker = AgentState {
            speed: start.speed,
            ..agent
        };
        agent = step_agent(&walker, &result, T::lit(dt), config.max_turn_rate);
        steps.push(WalkStep {
            t,
            position: agent.position,
            yaw: agent.yaw,
            heading: result.heading,
            status: result.status,
            min_clearance: scene.clearance_at(agent.position),
            obstacles: pipeline.flat_obstacles(),
        });
        reached_goal = agent.distance_to_goal() <= config.goal_tolerance;
    }
    Ok(WalkTrace { steps, reached_goal })
}

/// A corridor along +X with one person-sized box and one box that is moved
/// into the far half of the corridor partway through the walk.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorFixture<T: Real> {
    pub scene: SceneSpec<T>,
    pub start: AgentState<T>,
    pub moves: Vec<BoxMove<T>>,
}

pub const CORRIDOR_WIDTH: f64 = 2.4;
pub const CORRIDOR_GOAL_X: f64 = 9.0;

/// Deterministic corridor scene for `seed`.
pub fn corridor_fixture<T: Real>(seed: u64) -> CorridorFixture<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = |v: f64| T::lit(v);
    let half = CORRIDOR_WIDTH / 2.0;
    let wall_t = 0.1;
    let walls = vec![
        Aabb::new(Vec3::new(l(-1.0), l(half), l(0.0)), Vec3::new(l(12.0), l(half + wall_t), l(2.5))).unwrap(),
        Aabb::new(Vec3::new(l(-1.0), l(-half - wall_t), l(0.0)), Vec3::new(l(12.0), l(-half), l(2.5))).unwrap(),
    ];

    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let person_x = rng.random_range(3.0..4.5);
    let person_y = side * rng.random_range(0.3..0.5);
    let person = Aabb::from_center_size(Vec3::new(l(person_x), l(person_y), l(0.85)), Vec3::new(l(0.4), l(0.5), l(1.7)));

    let chair_size = Vec3::new(l(0.5), l(0.5), l(0.9));
    let parked = Aabb::from_center_size(Vec3::new(l(11.0), l(-side * 0.5), l(0.45)), chair_size);
    let moved_to = Aabb::from_center_size(
        Vec3::new(l(rng.random_range(6.3..7.3)), l(-side * rng.random_range(0.4..0.5)), l(0.45)),
        chair_size,
    );
    let move_frame = rng.random_range(5..15);

    CorridorFixture {
        scene: SceneSpec {
            floor_z: Some(T::zero()),
            boxes: vec![person, parked],
            walls,
            noise_sigma: l(0.01),
            seed,
            max_range: l(DEFAULT_MAX_DEPTH),
        },
        start: AgentState {
            position: Vec2::zero(),
            yaw: T::zero(),
            speed: l(DEFAULT_WALK_SPEED),
            goal: Vec2::new(l(CORRIDOR_GOAL_X), T::zero()),
        },
        moves: vec![BoxMove {
            frame: move_frame,
            box_index: 1,
            to: moved_to,
        }],
    }
}
