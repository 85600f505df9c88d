//! Service and tooling around the navi obstacle pipeline: the session config
//! file, the replay container, offline replay/bench, and the HTTP API.

pub mod config;
pub mod replay;
pub mod runner;
pub mod server;

pub use config::{ConfigError, SessionConfig};
pub use replay::{ReplayContainer, ReplayError, ReplayMeta, ReplayWriter};
pub use runner::{obstacles_json, run_replay, BenchStats};
pub use server::{router, serve};
