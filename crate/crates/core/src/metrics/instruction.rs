//! The degradation-scoring instruction and the per-task restoration
//! instructions used for benchmark runs.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::task::TaskKind;

pub const SCORING_TEMPLATE: &str = include_str!("../../assets/scoring_instruction.txt");
pub const SCORING_TEMPLATE_VERSION: u32 = 1;
pub const FINAL_LINE: &str = "Return only in the format ``Degradation Score: <1--5>''";

/// The scoring instruction with `{task}` replaced by the task's noun.
pub fn render_scoring_instruction(task: TaskKind) -> String {
    SCORING_TEMPLATE.replace("{task}", task.degradation_noun())
}

const BENCHMARK_INSTRUCTIONS: &str = include_str!("../../assets/benchmark_instructions.toml");

#[derive(Clone, Debug, Deserialize)]
pub struct BenchmarkInstructions {
    /// False for the shipped English stand-ins.
    pub canonical: bool,
    pub version: u32,
    pub instructions: BTreeMap<TaskKind, String>,
}

impl BenchmarkInstructions {
    pub fn shipped() -> Self {
        Self::from_toml(BENCHMARK_INSTRUCTIONS).expect("shipped instructions parse")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let b: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(t) = TaskKind::ALL.iter().find(|t| !b.instructions.contains_key(t)) {
            return Err(Error::Config(format!("no instruction for {t}")));
        }
        Ok(b)
    }

    pub fn get(&self, task: TaskKind) -> &str {
        &self.instructions[&task]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haze_instruction() {
        let s = render_scoring_instruction(TaskKind::Haze);
        assert!(s.contains("5 = No haze; the image is essentially clean"));
        assert!(!s.contains("{task}"));
        for marker in ["<= 20%", "20--50%", "50--80%", "> 80%"] {
            assert!(s.contains(marker), "{marker}");
        }
        assert_eq!(s.trim_end().lines().last().unwrap(), FINAL_LINE);
        assert_eq!(s, render_scoring_instruction(TaskKind::Haze));
    }

    #[test]
    fn shipped_instructions_are_marked() {
        let b = BenchmarkInstructions::shipped();
        assert!(!b.canonical);
        assert_eq!(b.instructions.len(), 9);
        assert!(b.get(TaskKind::Rain).contains("rain"));
    }
}
