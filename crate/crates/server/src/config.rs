use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use prepline_core::prompt::{PromptSettings, PromptTemplate, DEFAULT_BUDGET_TOKENS};
use prepline_core::subtitle::DEFAULT_WINDOW_RADIUS_S;
use prepline_core::{GroupId, Role, User, UserId, ValidationLimits};
use prepline_gateway::CompletionProviderConfig;

/// Service configuration, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default)]
    pub users: Vec<RosterEntry>,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default)]
    pub prompt: PromptConfig,
    #[serde(default)]
    pub captions: CaptionConfig,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

/// One user of the static roster and the bearer token they authenticate with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub user_id: UserId,
    pub role: Role,
    #[serde(default)]
    pub groups: BTreeSet<GroupId>,
    pub token: String,
}

impl RosterEntry {
    pub fn user(&self) -> User {
        User {
            user_id: self.user_id.clone(),
            role: self.role,
            group_ids: self.groups.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Answer jobs executed in parallel.
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(flatten)]
    pub provider: CompletionProviderConfig,
}

fn yes() -> bool {
    true
}

fn default_workers() -> usize {
    4
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            workers: default_workers(),
            provider: CompletionProviderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    pub window_radius_s: f64,
    pub budget_tokens: usize,
    pub max_question_chars: usize,
    pub template: PromptTemplate,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            window_radius_s: DEFAULT_WINDOW_RADIUS_S,
            budget_tokens: DEFAULT_BUDGET_TOKENS,
            max_question_chars: ValidationLimits::default().max_question_chars,
            template: PromptTemplate::default(),
        }
    }
}

/// Optional remote caption source used by `fetch-subtitles`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptionConfig {
    pub base_url: Option<String>,
    pub timeout_s: Option<f64>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            listen: default_listen(),
            data_dir: default_data_dir(),
            users: Vec::new(),
            llm: LlmConfig::default(),
            prompt: PromptConfig::default(),
            captions: CaptionConfig::default(),
        }
    }
}

impl ApiConfig {
    /// Reads a config file. A relative `data_dir` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let mut config = Self::from_toml(&text)?;
        if config.data_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.data_dir = base.join(&config.data_dir);
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.llm.provider.validate().map_err(anyhow::Error::msg)?;
        self.prompt.template.validate()?;
        if !(self.prompt.window_radius_s.is_finite() && self.prompt.window_radius_s > 0.0) {
            anyhow::bail!("prompt.window_radius_s must be positive");
        }
        if self.prompt.budget_tokens == 0 {
            anyhow::bail!("prompt.budget_tokens must be positive");
        }
        let mut tokens = HashMap::new();
        for entry in &self.users {
            if entry.token.len() < 8 {
                anyhow::bail!("token for `{}` is shorter than 8 characters", entry.user_id);
            }
            if let Some(other) = tokens.insert(entry.token.as_str(), &entry.user_id) {
                anyhow::bail!("`{}` and `{}` share a token", other, entry.user_id);
            }
        }
        Ok(())
    }

    pub fn prompt_settings(&self) -> PromptSettings {
        PromptSettings {
            budget_tokens: self.prompt.budget_tokens,
            window_radius_s: self.prompt.window_radius_s,
            model_id: self.llm.provider.model_id.clone(),
        }
    }

    pub fn limits(&self) -> ValidationLimits {
        ValidationLimits {
            max_question_chars: self.prompt.max_question_chars,
        }
    }
}
