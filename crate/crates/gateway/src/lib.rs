//! Automatic answering of Question responses.
//!
//! A new question becomes a pending [`AnswerJob`](prepline_core::AnswerJob);
//! worker tasks build its prompt, call the configured
//! [`CompletionProvider`] with retries and exponential backoff, and record
//! the answer as a tentative assistant reply together with the exact prompt
//! that was sent.

mod config;
mod jobs;
mod provider;

pub use config::{CompletionProviderConfig, ProviderKind, RetryPolicy};
pub use jobs::{AnswerService, GatewayError, JobOutcome, WorkerHandle};
pub use provider::{
    mock_answer, provider_from_config, CompletionProvider, HttpProvider, MockProvider, ProviderError,
};
