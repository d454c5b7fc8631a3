use serde::{Deserialize, Serialize};

use super::{DomainError, ReplyId, ResponseId, SnapshotId, Timestamp, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorKind {
    Assistant,
    Teacher,
    Student,
}

/// An answer attached to a response.
///
/// Assistant replies are tentative and always carry the prompt that produced
/// them and the model that answered; human replies never do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub reply_id: ReplyId,
    pub response_id: ResponseId,
    pub author_kind: AuthorKind,
    #[serde(default)]
    pub author_id: Option<UserId>,
    pub body: String,
    #[serde(default)]
    pub prompt_snapshot: Option<SnapshotId>,
    #[serde(default)]
    pub model_id: Option<String>,
    pub created_at: Timestamp,
}

impl Reply {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.body.trim().is_empty() {
            return Err(DomainError::invalid("body", "must not be empty"));
        }
        let assistant = self.author_kind == AuthorKind::Assistant;
        if assistant != self.prompt_snapshot.is_some() || assistant != self.model_id.is_some() {
            return Err(DomainError::invalid(
                "author_kind",
                "prompt_snapshot and model_id are required for assistant replies and forbidden otherwise",
            ));
        }
        if assistant && self.author_id.is_some() {
            return Err(DomainError::invalid("author_id", "assistant replies have no author id"));
        }
        if !assistant && self.author_id.is_none() {
            return Err(DomainError::invalid("author_id", "human replies need an author id"));
        }
        Ok(())
    }

    /// Thread order: creation time, then id.
    pub fn thread_key(&self) -> (Timestamp, &ReplyId) {
        (self.created_at, &self.reply_id)
    }
}

/// Sorts a reply thread into its total order.
pub fn sort_thread(replies: &mut [Reply]) {
    replies.sort_by(|a, b| a.thread_key().cmp(&b.thread_key()));
}
