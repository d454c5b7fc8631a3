use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use prepline_core::prompt::PromptEnvelope;

use crate::config::{CompletionProviderConfig, ProviderKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider call timed out")]
    Timeout,
    #[error("provider returned HTTP {status}: {body_excerpt}")]
    RemoteError { status: u16, body_excerpt: String },
    #[error("malformed provider response: {0}")]
    MalformedProviderResponse(String),
    #[error("credential variable `{0}` is not set")]
    MissingCredential(String),
    #[error("transport error: {0}")]
    Transport(String),
}

/// Anything that can turn a prompt envelope into answer text.
#[async_trait]
pub trait CompletionProvider: Send + Sync {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError>;
}

/// Offline provider: the answer is a pure function of the message contents.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockProvider;

/// `MOCK-ANSWER:` followed by the first 16 hex digits of the SHA-256 of all
/// message contents concatenated in order.
pub fn mock_answer(envelope: &PromptEnvelope) -> String {
    let mut hasher = Sha256::new();
    for message in &envelope.messages {
        hasher.update(message.content.as_bytes());
    }
    let digest = hasher.finalize();
    format!("MOCK-ANSWER:{}", hex::encode(&digest[..8]))
}

#[async_trait]
impl CompletionProvider for MockProvider {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        Ok(mock_answer(envelope))
    }
}

/// Chat-completions style HTTP endpoint with bearer auth.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    client: reqwest::Client,
    endpoint_url: String,
    api_key_ref: String,
}

const EXCERPT_CHARS: usize = 200;

impl HttpProvider {
    pub fn new(endpoint_url: impl Into<String>, api_key_ref: impl Into<String>, timeout: Duration) -> Self {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .expect("http client with default tls settings");
        Self {
            client,
            endpoint_url: endpoint_url.into(),
            api_key_ref: api_key_ref.into(),
        }
    }
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

fn transport(err: reqwest::Error) -> ProviderError {
    if err.is_timeout() {
        ProviderError::Timeout
    } else {
        ProviderError::Transport(err.to_string())
    }
}

#[async_trait]
impl CompletionProvider for HttpProvider {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        let key = std::env::var(&self.api_key_ref)
            .map_err(|_| ProviderError::MissingCredential(self.api_key_ref.clone()))?;
        let payload = json!({
            "model": envelope.model_id,
            "messages": envelope.messages,
        });
        let response = self
            .client
            .post(&self.endpoint_url)
            .bearer_auth(key)
            .json(&payload)
            .send()
            .await
            .map_err(transport)?;
        let status = response.status();
        let text = response.text().await.map_err(transport)?;
        if !status.is_success() {
            return Err(ProviderError::RemoteError {
                status: status.as_u16(),
                body_excerpt: text.chars().take(EXCERPT_CHARS).collect(),
            });
        }
        let body: CompletionBody = serde_json::from_str(&text)
            .map_err(|e| ProviderError::MalformedProviderResponse(e.to_string()))?;
        match body.choices.into_iter().next().and_then(|c| c.message.content) {
            Some(content) if !content.trim().is_empty() => Ok(content),
            _ => Err(ProviderError::MalformedProviderResponse("no answer content".into())),
        }
    }
}

pub fn provider_from_config(config: &CompletionProviderConfig) -> Result<Box<dyn CompletionProvider>, String> {
    config.validate()?;
    Ok(match config.provider_kind {
        ProviderKind::DeterministicMock => Box::new(MockProvider),
        ProviderKind::RemoteHttp => Box::new(HttpProvider::new(
            config.endpoint_url.clone().unwrap_or_default(),
            config.api_key_ref.clone().unwrap_or_default(),
            config.timeout(),
        )),
    })
}
