use std::time::Duration;

use serde::{Deserialize, Serialize};

use prepline_core::prompt::DEFAULT_MODEL_ID;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    RemoteHttp,
    DeterministicMock,
}

/// Provider selection plus call and retry limits. The API key itself never
/// appears here, only the name of the environment variable holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionProviderConfig {
    pub provider_kind: ProviderKind,
    pub endpoint_url: Option<String>,
    pub api_key_ref: Option<String>,
    pub model_id: String,
    pub timeout_s: f64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for CompletionProviderConfig {
    fn default() -> Self {
        Self {
            provider_kind: ProviderKind::DeterministicMock,
            endpoint_url: None,
            api_key_ref: None,
            model_id: DEFAULT_MODEL_ID.to_owned(),
            timeout_s: 30.0,
            max_attempts: 3,
            backoff_base_ms: 500,
        }
    }
}

impl CompletionProviderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.provider_kind == ProviderKind::RemoteHttp {
            if self.endpoint_url.as_deref().is_none_or(str::is_empty) {
                return Err("remote_http provider needs endpoint_url".into());
            }
            if self.api_key_ref.as_deref().is_none_or(str::is_empty) {
                return Err("remote_http provider needs api_key_ref (an environment variable name)".into());
            }
        }
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return Err("timeout_s must be positive".into());
        }
        if self.model_id.trim().is_empty() {
            return Err("model_id must not be empty".into());
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.max_attempts,
            backoff_base_ms: self.backoff_base_ms,
            timeout: self.timeout(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    /// Upper bound on a single provider call.
    pub timeout: Duration,
}

impl RetryPolicy {
    /// Pause after the `failed_attempt`-th failure (1-based):
    /// `backoff_base_ms * 2^(failed_attempt - 1)`.
    pub fn backoff_after(&self, failed_attempt: u32) -> Duration {
        let factor = 1u64 << failed_attempt.saturating_sub(1).min(20);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor))
    }
}
