//! Evolution strategy over LLM-generated optimizer programs.

pub mod archive;
pub mod candidate;
pub mod es;
pub mod evaluate;
pub mod extract;
pub mod llm;
pub mod mutation;
pub mod prompts;
pub mod select;

use photonopt_core::problems::ProblemError;
use thiserror::Error;

pub use candidate::{CandidateAlgorithm, CandidateStatus, Scores};
pub use es::{run_discovery, DiscoveryResult, EsConfig, GenerationRecord};
pub use evaluate::{EvaluationReport, Evaluator, SandboxEvaluator, ScriptedEvaluator};
pub use llm::{ChatClient, ChatConfig, LlmClient, LlmError, MockLlm};
pub use prompts::{PromptBundle, PromptSetting};

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("invalid discovery config: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("archive: {0}")]
    Csv(#[from] csv::Error),
}
