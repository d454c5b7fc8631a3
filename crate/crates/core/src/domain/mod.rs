//! Shared records and their validity rules.

mod annotation;
mod event;
mod ids;
mod job;
mod reply;
mod response;
mod time;
mod user;
mod video;

pub use annotation::{AnnotationKind, TeacherAnnotation};
pub use event::{WatchEvent, WatchEventKind};
pub use ids::*;
pub use job::{AnswerJob, JobStatus};
pub use reply::{sort_thread, AuthorKind, Reply};
pub use response::{validate_response, Response, ResponseCandidate, ResponseKind, ValidationLimits};
pub use time::Timestamp;
pub use user::{can_view, Role, User};
pub use video::VideoRecord;

/// Violations of the domain invariants.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("unknown response kind `{0}`")]
    UnknownKind(String),
    #[error("question responses require non-empty question text")]
    MissingQuestionText,
    #[error("only question responses may carry text")]
    UnexpectedText,
    #[error("question text has {len} characters, limit is {max}")]
    QuestionTooLong { len: usize, max: usize },
    #[error("timeline position {timeline_s}s is outside the video (0..={duration_s}s)")]
    TimelineOutOfRange { timeline_s: f64, duration_s: f64 },
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
}

impl DomainError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        DomainError::InvalidField {
            field,
            reason: reason.into(),
        }
    }
}

/// Checks that `timeline_s` lies on a video of `duration_s` seconds.
pub fn check_timeline(timeline_s: f64, duration_s: f64) -> Result<(), DomainError> {
    if timeline_s.is_finite() && (0.0..=duration_s).contains(&timeline_s) {
        Ok(())
    } else {
        Err(DomainError::TimelineOutOfRange {
            timeline_s,
            duration_s,
        })
    }
}
