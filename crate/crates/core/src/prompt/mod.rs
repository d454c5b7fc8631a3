//! Prompt assembly for question answering.
//!
//! A prompt is one system message (video title plus, when the student asked
//! for it, the transcript around the question) followed by one user message
//! holding the question verbatim. No earlier conversation is replayed.

mod budget;
mod builder;
mod envelope;
mod template;
mod tokens;

pub use budget::{drop_order, enforce_token_budget, SubtitleContext};
pub use builder::{build_prompt, PromptBuilder, PromptSettings, DEFAULT_BUDGET_TOKENS, DEFAULT_MODEL_ID};
pub use envelope::{ChatMessage, ChatRole, PromptEnvelope};
pub use template::PromptTemplate;
pub use tokens::{estimate_tokens, CharRatioEstimator, TokenEstimator};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompts can only be built for Question responses")]
    NotAQuestion,
    #[error("prompt needs at least {needed} tokens but the budget is {budget}")]
    BudgetTooSmall { needed: usize, budget: usize },
    #[error("invalid prompt template: {0}")]
    InvalidTemplate(String),
}
