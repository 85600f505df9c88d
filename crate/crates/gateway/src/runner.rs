//! Offline replay of a container through the pipeline.

use std::fmt;
use std::time::{Duration, Instant};

use navi_core::{FrameReport, Pipeline64, PipelineConfig64, StageTimings};

use crate::replay::{ReplayContainer, ReplayError};

/// Body served by GET /obstacles and written by `navi replay --obstacles-out`.
pub fn obstacles_json(pipeline: &Pipeline64) -> Vec<u8> {
    serde_json::to_vec(pipeline.map().obstacles()).expect("obstacles serialize")
}

pub struct ReplayOutcome {
    pub pipeline: Pipeline64,
    /// Per-frame stage timings and end-to-end latency (read + decode + pipeline).
    pub timings: Vec<(StageTimings, Duration)>,
    pub elapsed: Duration,
    pub last_report: Option<FrameReport<f64>>,
    pub warnings: usize,
}

/// Streams every frame through a fresh pipeline as fast as possible. The last
/// frame's labeled cloud is kept when `keep_last_labels` is set.
pub fn run_replay(container: &ReplayContainer, config: &PipelineConfig64, keep_last_labels: bool) -> Result<ReplayOutcome, ReplayError> {
    let mut pipeline = Pipeline64::new(config.clone())?;
    let mut timings = Vec::with_capacity(container.len());
    let mut last_report = None;
    let mut warnings = 0;
    let start = Instant::now();
    for i in 0..container.len() {
        let t = Instant::now();
        let frame = container.frame(i)?;
        let pose = &container.poses[i];
        let report = if keep_last_labels && i + 1 == container.len() {
            pipeline.process_frame_labeled(&frame, pose)?
        } else {
            pipeline.process_frame(&frame, pose)?
        };
        timings.push((report.timings, t.elapsed()));
        warnings += report.warnings.len();
        last_report = Some(report);
    }
    Ok(ReplayOutcome {
        pipeline,
        timings,
        elapsed: start.elapsed(),
        last_report,
        warnings,
    })
}

/// Nearest-rank percentile of `values` (sorted in place), `q` in `[0, 1]`.
pub fn percentile(values: &mut [Duration], q: f64) -> Duration {
    if values.is_empty() {
        return Duration::ZERO;
    }
    values.sort();
    let rank = (q * values.len() as f64).ceil().max(1.0) as usize;
    values[rank.min(values.len()) - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchStats {
    pub frames: usize,
    /// `(stage, p50, p95)` for each pipeline stage, then `"end_to_end"`.
    pub stages: Vec<(&'static str, Duration, Duration)>,
    pub fps: f64,
}

impl BenchStats {
    pub fn from_outcome(outcome: &ReplayOutcome) -> Self {
        let mut stages = Vec::new();
        for (k, name) in StageTimings::NAMES.iter().enumerate() {
            let mut v: Vec<Duration> = outcome.timings.iter().map(|(t, _)| t.as_array()[k]).collect();
            stages.push((*name, percentile(&mut v, 0.5), percentile(&mut v, 0.95)));
        }
        let mut e2e: Vec<Duration> = outcome.timings.iter().map(|(_, d)| *d).collect();
        stages.push(("end_to_end", percentile(&mut e2e, 0.5), percentile(&mut e2e, 0.95)));
        let secs = outcome.elapsed.as_secs_f64();
        Self {
            frames: outcome.timings.len(),
            stages,
            fps: if secs > 0.0 { outcome.timings.len() as f64 / secs } else { 0.0 },
        }
    }

    pub fn p95_end_to_end(&self) -> Duration {
        self.stages.last().map(|s| s.2).unwrap_or_default()
    }
}

impl fmt::Display for BenchStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14} {:>10} {:>10}", "stage", "p50_ms", "p95_ms")?;
        for (name, p50, p95) in &self.stages {
            writeln!(f, "{:<14} {:>10.3} {:>10.3}", name, p50.as_secs_f64() * 1e3, p95.as_secs_f64() * 1e3)?;
        }
        writeln!(f, "frames: {}", self.frames)?;
        write!(f, "fps: {:.2}", self.fps)
    }
}
