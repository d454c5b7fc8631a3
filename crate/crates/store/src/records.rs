use prepline_core::prompt::PromptEnvelope;
use prepline_core::subtitle::SubtitleTrack;
use prepline_core::{
    AnswerJob, ReplyId, Reply, Response, SnapshotId, TeacherAnnotation, Timestamp, User, VideoRecord,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// A record kept in its own journal.
pub trait Record: Serialize + DeserializeOwned + Clone + Send + Sync + 'static {
    const COLLECTION: &'static str;

    fn key(&self) -> &str;

    fn created_at(&self) -> Option<Timestamp> {
        None
    }
}

/// The exact envelope sent for an assistant reply, stored immutably.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSnapshot {
    pub snapshot_id: SnapshotId,
    pub reply_id: ReplyId,
    pub envelope: PromptEnvelope,
    pub created_at: Timestamp,
}

impl Record for VideoRecord {
    const COLLECTION: &'static str = "videos";
    fn key(&self) -> &str {
        self.video_id.as_str()
    }
}

impl Record for User {
    const COLLECTION: &'static str = "users";
    fn key(&self) -> &str {
        self.user_id.as_str()
    }
}

impl Record for Response {
    const COLLECTION: &'static str = "responses";
    fn key(&self) -> &str {
        self.response_id.as_str()
    }
    fn created_at(&self) -> Option<Timestamp> {
        Some(self.created_at)
    }
}

impl Record for Reply {
    const COLLECTION: &'static str = "replies";
    fn key(&self) -> &str {
        self.reply_id.as_str()
    }
    fn created_at(&self) -> Option<Timestamp> {
        Some(self.created_at)
    }
}

impl Record for TeacherAnnotation {
    const COLLECTION: &'static str = "annotations";
    fn key(&self) -> &str {
        self.annotation_id.as_str()
    }
}

impl Record for AnswerJob {
    const COLLECTION: &'static str = "jobs";
    fn key(&self) -> &str {
        self.job_id.as_str()
    }
    fn created_at(&self) -> Option<Timestamp> {
        Some(self.enqueued_at)
    }
}

impl Record for SubtitleTrack {
    const COLLECTION: &'static str = "tracks";
    fn key(&self) -> &str {
        self.track_id.as_str()
    }
}

impl Record for PromptSnapshot {
    const COLLECTION: &'static str = "prompt_snapshots";
    fn key(&self) -> &str {
        self.snapshot_id.as_str()
    }
    fn created_at(&self) -> Option<Timestamp> {
        Some(self.created_at)
    }
}
