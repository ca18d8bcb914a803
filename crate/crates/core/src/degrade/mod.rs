//! The nine degradation operators, the web-style chain composer, and the
//! severity → parameter mapping.

pub mod blur;
pub mod chain;
pub mod composite;
pub mod compression;
pub mod filters;
pub mod haze;
pub mod jpeg;
pub mod noise;
pub mod params;
pub mod rain;
pub mod severity;
pub mod tone;

pub use blur::{apply_gaussian_blur, apply_motion_blur, apply_temporal_average};
pub use chain::{apply_web_chain, apply_web_stages, OrderPolicy, WebChainConfig, WebStage};
pub use composite::{apply_flare, apply_moire, apply_reflection};
pub use compression::{apply_compression, apply_resize_chain, ResizeStep};
pub use filters::Interp;
pub use haze::apply_haze;
pub use jpeg::{apply_jpeg, blockiness};
pub use noise::{apply_noise, NoiseSpec};
pub use params::{degrade, Assets, BlurMode, DegradeContext, DegradeParams, ReflectionSource};
pub use rain::{apply_rain, render_rain_layers, RainParams};
pub use severity::{severity_to_params, SeverityMap};
pub use tone::apply_lowlight;
