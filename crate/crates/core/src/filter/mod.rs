//! Pair-quality gates: semantic prompts, degradation-score delta, edge
//! alignment and external watermark verdicts.

pub mod gates;
pub mod pipeline;
pub mod semantic;
pub mod shift;
pub mod verdict;

pub use gates::{degradation_delta_filter, watermark_filter, WatermarkVerdicts};
pub use pipeline::{run_filter_pipeline, Backends, FilterConfig, FilterOutcome, GateKind, ReportLine};
pub use semantic::{prompt_config_default, semantic_filter, EmbedderBackend, IngestedSimilarity, NullEmbedder, PromptConfig};
pub use shift::{estimate_shift, skeleton_shift_filter, ShiftConfig};
pub use verdict::{FilterVerdict, Reason};
