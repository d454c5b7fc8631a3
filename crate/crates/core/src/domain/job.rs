use serde::{Deserialize, Serialize};

use super::{JobId, ResponseId, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    InFlight,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

/// One attempt-series at answering a question automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerJob {
    pub job_id: JobId,
    pub response_id: ResponseId,
    pub status: JobStatus,
    pub attempts: u32,
    #[serde(default)]
    pub last_error: Option<String>,
    pub enqueued_at: Timestamp,
    #[serde(default)]
    pub finished_at: Option<Timestamp>,
}

impl AnswerJob {
    pub fn pending(job_id: JobId, response_id: ResponseId, enqueued_at: Timestamp) -> Self {
        Self {
            job_id,
            response_id,
            status: JobStatus::Pending,
            attempts: 0,
            last_error: None,
            enqueued_at,
            finished_at: None,
        }
    }
}
