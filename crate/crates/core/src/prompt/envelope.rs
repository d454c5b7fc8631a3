use serde::{Deserialize, Serialize};

use super::TokenEstimator;
use crate::domain::ResponseId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatRole {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::User,
            content: content.into(),
        }
    }
}

/// The exact message sequence sent to the completion provider. Persisted
/// verbatim next to the assistant reply it produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptEnvelope {
    pub messages: Vec<ChatMessage>,
    pub model_id: String,
    pub created_for_response_id: ResponseId,
}

impl PromptEnvelope {
    pub fn new(system: String, question: String, model_id: String, response_id: ResponseId) -> Self {
        Self {
            messages: vec![ChatMessage::system(system), ChatMessage::user(question)],
            model_id,
            created_for_response_id: response_id,
        }
    }

    /// Exactly one system message, first, and exactly one user message, last.
    pub fn is_well_formed(&self) -> bool {
        let count = |role| self.messages.iter().filter(|m| m.role == role).count();
        self.messages.len() >= 2
            && self.messages[0].role == ChatRole::System
            && self.messages[self.messages.len() - 1].role == ChatRole::User
            && count(ChatRole::System) == 1
            && count(ChatRole::User) == 1
    }

    pub fn system_message(&self) -> Option<&str> {
        self.messages.iter().find(|m| m.role == ChatRole::System).map(|m| m.content.as_str())
    }

    pub fn user_message(&self) -> Option<&str> {
        self.messages.iter().rev().find(|m| m.role == ChatRole::User).map(|m| m.content.as_str())
    }

    pub fn estimated_tokens(&self, estimator: &dyn TokenEstimator) -> usize {
        self.messages.iter().map(|m| estimator.estimate(&m.content)).sum()
    }
}
