//! Deterministic degradation synthesis, pair filtering, no-reference
//! restoration benchmarking and curriculum schedule math.

pub mod buffer;
pub mod cli;
pub mod corpus;
pub mod curriculum;
pub mod degrade;
pub mod error;
pub mod filter;
pub mod manifest;
pub mod metrics;
pub mod patterns;
pub mod seed;
pub mod task;

pub use buffer::{load_image, save_image, ImageBuffer, ImageFormat};
pub use error::{Error, Result};
pub use manifest::{dataset_stats, DatasetStats, Manifest, PairRecord};
pub use seed::SeedTree;
pub use task::{Origin, Severity, TaskKind};
