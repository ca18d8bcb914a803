//! Overlay assets: procedural generators, collected banks, and ingested
//! depth/segmentation sidecars.

pub mod bank;
pub mod flare;
pub mod haze;
pub mod moire;
pub mod rain;
pub mod sidecar;

pub use bank::{load_pattern_bank, PatternBank};
pub use flare::{gen_flare_sprite, FlareKind, FlareRecipe};
pub use haze::gen_haze_texture;
pub use moire::{gen_moire_pattern, MoireParams, MoireScale};
pub use rain::{gen_rain_streaks, RainLayer, RainStreakParams, Streak};
pub use sidecar::{DepthMap, SegMask};
