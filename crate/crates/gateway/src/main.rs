use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use navi_core::pipeline::write_scene_csv;
use navi_core::scene_sim::{corridor_fixture, WalkConfig};
use navi_core::{run_walk_scripted, CameraIntrinsics};
use navi_gateway::{obstacles_json, run_replay, BenchStats, ReplayContainer, SessionConfig};

/// Exit code for bad input files and failed runs; clap usage errors exit with 1.
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "navi", version, about = "Obstacle map and safe-heading engine for depth streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream a replay container through the pipeline at full speed.
    Replay {
        dir: PathBuf,
        /// Session config file (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the labeled point cloud of the last frame as CSV.
        #[arg(long, value_name = "CSV")]
        dump_scene: Option<PathBuf>,
        /// Print per-stage p50/p95 latency and end-to-end fps.
        #[arg(long)]
        bench: bool,
        /// Write the final obstacle list (same body as GET /obstacles).
        #[arg(long, value_name = "JSON")]
        obstacles_out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Record a synthetic corridor walk as a replay container.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = navi_core::frame_ingest::DEFAULT_WIDTH)]
        width: u32,
        #[arg(long, default_value_t = navi_core::frame_ingest::DEFAULT_HEIGHT)]
        height: u32,
    },
    /// Closed-loop corridor walk; writes one JSON line per step.
    Walk {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 150)]
        frames: usize,
        #[arg(long, value_name = "JSONL")]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the default session config.
    Config,
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("navi: {message}");
    ExitCode::from(EXIT_INPUT)
}

fn create(path: &Path) -> Result<BufWriter<File>, String> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn replay(dir: &Path, config: Option<&Path>, dump_scene: Option<&Path>, bench: bool, obstacles_out: Option<&Path>) -> Result<(), String> {
    let config = SessionConfig::resolve(config).map_err(|e| e.to_string())?;
    let container = ReplayContainer::open(dir).map_err(|e| e.to_string())?;
    let outcome = run_replay(&container, &config.pipeline, dump_scene.is_some()).map_err(|e| e.to_string())?;

    if let Some(path) = dump_scene {
        let points = outcome
            .last_report
            .as_ref()
            .and_then(|r| r.labeled_points.as_deref())
            .unwrap_or_default();
        write_scene_csv(points, create(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = obstacles_out {
        std::fs::write(path, obstacles_json(&outcome.pipeline)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    println!(
        "replayed {} frames, {} obstacles, {} warnings",
        outcome.timings.len(),
        outcome.pipeline.map().len(),
        outcome.warnings
    );
    if bench {
        println!("{}", BenchStats::from_outcome(&outcome));
    }
    Ok(())
}

fn synth(dir: &Path, frames: usize, seed: u64, width: u32, height: u32) -> Result<(), String> {
    let intrinsics = CameraIntrinsics::with_horizontal_fov(width, height, navi_core::scene_sim::DEFAULT_HFOV).map_err(|e| e.to_string())?;
    let config = WalkConfig {
        intrinsics,
        ..WalkConfig::default()
    };
    let meta = navi_gateway::replay::synthesize_corridor(dir, frames, seed, &config).map_err(|e| e.to_string())?;
    println!("wrote {} frames to {}", meta.frame_count, dir.display());
    Ok(())
}

fn walk(seed: u64, frames: usize, out: Option<&Path>, config: Option<&Path>) -> Result<(), String> {
    let session = SessionConfig::resolve(config).map_err(|e| e.to_string())?;
    let walk = WalkConfig {
        pipeline: session.pipeline,
        ..WalkConfig::default()
    };
    let fixture = corridor_fixture::<f64>(seed);
    let trace = run_walk_scripted(&fixture.scene, &fixture.start, &walk, frames, &fixture.moves).map_err(|e| e.to_string())?;
    if let Some(path) = out {
        trace.write_jsonl(create(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    println!(
        "steps: {}, reached_goal: {}, min_clearance: {:.3}, blocked: {}",
        trace.steps.len(),
        trace.reached_goal,
        trace.min_clearance(),
        trace.was_blocked()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Replay {
            dir,
            config,
            dump_scene,
            bench,
            obstacles_out,
        } => replay(&dir, config.as_deref(), dump_scene.as_deref(), bench, obstacles_out.as_deref()),
        Command::Serve { config } => match SessionConfig::resolve(config.as_deref()) {
            Ok(config) => tokio::runtime::Runtime::new()
                .map_err(|e| e.to_string())
                .and_then(|rt| rt.block_on(navi_gateway::serve(config)).map_err(|e| e.to_string())),
            Err(e) => Err(e.to_string()),
        },
        Command::Synth {
            dir,
            frames,
            seed,
            width,
            height,
        } => synth(&dir, frames, seed, width, height),
        Command::Walk {
            seed,
            frames,
            out,
            config,
        } => walk(seed, frames, out.as_deref(), config.as_deref()),
        Command::Config => {
            print!("{}", SessionConfig::default().to_toml());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => fail(message),
    }
}
