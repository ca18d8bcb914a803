//! Degradation scoring, perceptual distance, RS / LPS / FS composition,
//! aggregation into leaderboards, and rank correlation.

pub mod aggregate;
pub mod correlation;
pub mod distance;
pub mod heuristic;
pub mod instruction;
pub mod score;

pub use aggregate::{aggregate, emit_leaderboard, round3, BoardFormat, Leaderboard, MethodBoard, OverallRow, TaskReport};
pub use correlation::{kendall_tau_b, pearson, rank_correlations, spearman, RankCorrelations};
pub use distance::{ms_ssim_distance, perceptual_distance, DistanceBackend, IngestedDistance, ReferenceDistance};
pub use heuristic::{heuristic_degradation_score, raw_statistic, HEURISTIC_TASKS};
pub use instruction::{render_scoring_instruction, BenchmarkInstructions};
pub use score::{final_score, restoration_score, DegradationScore, EvalRecord, HeuristicScorer, IngestedScorer, ScorerBackend};
