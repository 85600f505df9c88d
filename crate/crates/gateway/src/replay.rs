//! On-disk replay container.
//!
//! ```text
//! <dir>/intrinsics.json      CameraIntrinsics
//! <dir>/poses.jsonl          one HeadPose per line, frame order
//! <dir>/frames/000000.bin    little-endian f32 depth, row-major, width*height values
//! <dir>/meta.json            {"fps": 5.0, "frame_count": 100}
//! ```

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use navi_core::scene_sim::{corridor_fixture, WalkConfig};
use navi_core::{render_depth, step_agent, CameraIntrinsics, DepthFrame64, HeadPose64, Pipeline64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("depth payload has {found} bytes, expected {expected}")]
    DepthLength { found: usize, expected: usize },
    #[error(transparent)]
    Pipeline(#[from] navi_core::PipelineError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReplayError + '_ {
    move |source| ReplayError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, message: impl Into<String>) -> ReplayError {
    ReplayError::Malformed {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayMeta {
    pub fps: f64,
    pub frame_count: usize,
}

/// Decodes a little-endian f32 depth grid sized for `intrinsics`.
pub fn decode_depth(bytes: &[u8], intrinsics: &CameraIntrinsics<f64>) -> Result<Vec<f64>, ReplayError> {
    let expected = 4 * intrinsics.pixel_count();
    if bytes.len() != expected {
        return Err(ReplayError::DepthLength {
            found: bytes.len(),
            expected,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn encode_depth(depth: &[f64]) -> Vec<u8> {
    depth.iter().flat_map(|&d| (d as f32).to_le_bytes()).collect()
}

fn frame_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("frames").join(format!("{index:06}.bin"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ReplayError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| malformed(path, e.to_string()))
}

/// A validated container. Frames are read lazily.
#[derive(Debug, Clone)]
pub struct ReplayContainer {
    pub dir: PathBuf,
    pub intrinsics: CameraIntrinsics<f64>,
    pub poses: Vec<HeadPose64>,
    pub meta: ReplayMeta,
}

impl ReplayContainer {
    /// Checks the layout: pose count equals `frame_count`, and every frame file
    /// exists with exactly `4·width·height` bytes.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ReplayError> {
        let dir = dir.as_ref().to_path_buf();
        let intrinsics_path = dir.join("intrinsics.json");
        let intrinsics: CameraIntrinsics<f64> = read_json(&intrinsics_path)?;
        intrinsics
            .validate()
            .map_err(|e| malformed(&intrinsics_path, e.to_string()))?;
        let meta_path = dir.join("meta.json");
        let meta: ReplayMeta = read_json(&meta_path)?;
        if !(meta.fps > 0.0) {
            return Err(malformed(&meta_path, "fps must be positive"));
        }

        let poses_path = dir.join("poses.jsonl");
        let file = fs::File::open(&poses_path).map_err(io_err(&poses_path))?;
        let mut poses = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(&poses_path))?;
            if line.trim().is_empty() {
                continue;
            }
            let pose: HeadPose64 =
                serde_json::from_str(&line).map_err(|e| malformed(&poses_path, format!("line {}: {e}", i + 1)))?;
            pose.validate()
                .map_err(|e| malformed(&poses_path, format!("line {}: {e}", i + 1)))?;
            poses.push(pose);
        }
        if poses.len() != meta.frame_count {
            return Err(malformed(
                &poses_path,
                format!("{} poses but meta.json says {} frames", poses.len(), meta.frame_count),
            ));
        }
        let expected = 4 * intrinsics.pixel_count() as u64;
        for i in 0..meta.frame_count {
            let path = frame_path(&dir, i);
            let len = fs::metadata(&path).map_err(io_err(&path))?.len();
            if len != expected {
                return Err(malformed(&path, format!("{len} bytes, expected {expected}")));
            }
        }
        Ok(Self {
            dir,
            intrinsics,
            poses,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.meta.frame_count
    }

    pub fn is_empty(&self) -> bool {
        self.meta.frame_count == 0
    }

    pub fn frame_bytes(&self, index: usize) -> Result<Vec<u8>, ReplayError> {
        let path = frame_path(&self.dir, index);
        fs::read(&path).map_err(io_err(&path))
    }

    /// Depth frame `index`, stamped with its pose's timestamp.
    pub fn frame(&self, index: usize) -> Result<DepthFrame64, ReplayError> {
        let path = frame_path(&self.dir, index);
        let depth = decode_depth(&self.frame_bytes(index)?, &self.intrinsics)?;
        DepthFrame64::new(self.poses[index].timestamp, depth, self.intrinsics).map_err(|e| malformed(&path, e.to_string()))
    }
}

/// Streams frames into a new container directory.
pub struct ReplayWriter {
    dir: PathBuf,
    intrinsics: CameraIntrinsics<f64>,
    fps: f64,
    poses: BufWriter<fs::File>,
    count: usize,
}

impl ReplayWriter {
    pub fn create(dir: impl AsRef<Path>, intrinsics: CameraIntrinsics<f64>, fps: f64) -> Result<Self, ReplayError> {
        let dir = dir.as_ref().to_path_buf();
        let frames = dir.join("frames");
        fs::create_dir_all(&frames).map_err(io_err(&frames))?;
        let intrinsics_path = dir.join("intrinsics.json");
        let json = serde_json::to_vec_pretty(&intrinsics).expect("intrinsics serialize");
        fs::write(&intrinsics_path, json).map_err(io_err(&intrinsics_path))?;
        let poses_path = dir.join("poses.jsonl");
        let poses = BufWriter::new(fs::File::create(&poses_path).map_err(io_err(&poses_path))?);
        Ok(Self {
            dir,
            intrinsics,
            fps,
            poses,
            count: 0,
        })
    }

    pub fn push(&mut self, pose: &HeadPose64, depth: &[f64]) -> Result<(), ReplayError> {
        let expected = self.intrinsics.pixel_count();
        if depth.len() != expected {
            return Err(ReplayError::DepthLength {
                found: 4 * depth.len(),
                expected: 4 * expected,
            });
        }
        let path = frame_path(&self.dir, self.count);
        fs::write(&path, encode_depth(depth)).map_err(io_err(&path))?;
        let poses_path = self.dir.join("poses.jsonl");
        serde_json::to_writer(&mut self.poses, pose).expect("pose serializes");
        self.poses.write_all(b"\n").map_err(io_err(&poses_path))?;
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<ReplayMeta, ReplayError> {
        let poses_path = self.dir.join("poses.jsonl");
        self.poses.flush().map_err(io_err(&poses_path))?;
        let meta = ReplayMeta {
            fps: self.fps,
            frame_count: self.count,
        };
        let meta_path = self.dir.join("meta.json");
        fs::write(&meta_path, serde_json::to_vec_pretty(&meta).expect("meta serializes")).map_err(io_err(&meta_path))?;
        Ok(meta)
    }
}

/// Records `frames` frames of a closed-loop walk down the seeded corridor.
/// Once the goal is reached the walker stays put and sweeps its head ±30°.
pub fn synthesize_corridor(
    dir: impl AsRef<Path>,
    frames: usize,
    seed: u64,
    config: &WalkConfig<f64>,
) -> Result<ReplayMeta, ReplayError> {
    let fixture = corridor_fixture::<f64>(seed);
    let mut scene = fixture.scene;
    let mut agent = fixture.start;
    let mut pipeline = Pipeline64::new(config.pipeline.clone())?;
    let mut writer = ReplayWriter::create(dir, config.intrinsics, config.rate_hz)?;
    let dt = 1.0 / config.rate_hz;
    let mut arrived_at: Option<(usize, f64)> = None;

    for frame in 0..frames {
        for m in fixture.moves.iter().filter(|m| m.frame == frame) {
            scene.boxes[m.box_index] = m.to;
        }
        let t = frame as f64 * dt;
        let pose = config.head_pose(&agent, t);
        let depth = render_depth(&scene, &pose, &config.intrinsics);
        writer.push(&pose, &depth.depth)?;
        pipeline.process_frame(&depth, &pose)?;

        if arrived_at.is_none() && agent.distance_to_goal() <= config.goal_tolerance {
            arrived_at = Some((frame, agent.yaw));
        }
        if let Some((first, yaw)) = arrived_at {
            let phase = (frame - first) as f64 * std::f64::consts::TAU / 24.0;
            agent.yaw = navi_core::normalize_degrees(yaw + 30.0 * phase.sin());
        } else {
            let result = pipeline.heading(agent.position, agent.bearing_to_goal());
            agent = step_agent(&agent, &result, dt, config.max_turn_rate);
            agent.speed = fixture.start.speed;
        }
    }
    writer.finish()
}
