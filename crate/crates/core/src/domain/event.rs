use serde::{Deserialize, Serialize};

use super::{check_timeline, DomainError, EventId, ResponseId, Timestamp, UserId, VideoId, VideoRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WatchEventKind {
    StartWatching,
    StopWatching,
    ResponsePut,
}

/// A behavior record synced to the video timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchEvent {
    pub event_id: EventId,
    pub user_id: UserId,
    pub video_id: VideoId,
    pub kind: WatchEventKind,
    pub timeline_s: f64,
    pub created_at: Timestamp,
    #[serde(default)]
    pub response_id: Option<ResponseId>,
}

impl WatchEvent {
    /// Local checks only; whether `response_id` resolves is for the store.
    pub fn validate(&self, video: &VideoRecord) -> Result<(), DomainError> {
        check_timeline(self.timeline_s, video.duration_s)?;
        if (self.kind == WatchEventKind::ResponsePut) != self.response_id.is_some() {
            return Err(DomainError::invalid(
                "response_id",
                "present exactly for response_put events",
            ));
        }
        Ok(())
    }
}
