use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_timeline, DomainError, ResponseId, Timestamp, UserId, VideoId, VideoRecord};

/// The four buttons a student can press while watching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResponseKind {
    Interesting,
    Important,
    Difficult,
    Question,
}

impl ResponseKind {
    pub const ALL: [ResponseKind; 4] = [
        ResponseKind::Interesting,
        ResponseKind::Important,
        ResponseKind::Difficult,
        ResponseKind::Question,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::Interesting => "Interesting",
            ResponseKind::Important => "Important",
            ResponseKind::Difficult => "Difficult",
            ResponseKind::Question => "Question",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ResponseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResponseKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResponseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| DomainError::UnknownKind(s.to_owned()))
    }
}

/// A timestamped student annotation on a video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub response_id: ResponseId,
    pub user_id: UserId,
    pub video_id: VideoId,
    pub timeline_s: f64,
    pub kind: ResponseKind,
    #[serde(default)]
    pub question_text: Option<String>,
    pub include_subtitles: bool,
    pub created_at: Timestamp,
}

impl Response {
    pub fn is_question(&self) -> bool {
        self.kind == ResponseKind::Question
    }
}

/// An unvalidated response as submitted. `kind` is still free text so that
/// unknown kinds surface as [`DomainError::UnknownKind`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCandidate {
    pub response_id: ResponseId,
    pub user_id: UserId,
    pub timeline_s: f64,
    pub kind: String,
    #[serde(default)]
    pub question_text: Option<String>,
    #[serde(default)]
    pub include_subtitles: Option<bool>,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationLimits {
    pub max_question_chars: usize,
}

impl Default for ValidationLimits {
    fn default() -> Self {
        Self {
            max_question_chars: 2000,
        }
    }
}

/// Turns a candidate into a [`Response`] on `video`.
///
/// Out-of-range timeline positions are rejected, never clamped. A missing
/// subtitle toggle on a question defaults to on; non-question kinds always
/// record `include_subtitles = false`. Question text is kept byte-for-byte.
pub fn validate_response(
    candidate: ResponseCandidate,
    video: &VideoRecord,
    limits: &ValidationLimits,
) -> Result<Response, DomainError> {
    let kind: ResponseKind = candidate.kind.parse()?;
    let question_text = match (kind, candidate.question_text) {
        (ResponseKind::Question, Some(text)) if !text.trim().is_empty() => {
            let len = text.chars().count();
            if len > limits.max_question_chars {
                return Err(DomainError::QuestionTooLong {
                    len,
                    max: limits.max_question_chars,
                });
            }
            Some(text)
        }
        (ResponseKind::Question, _) => return Err(DomainError::MissingQuestionText),
        (_, Some(text)) if !text.is_empty() => return Err(DomainError::UnexpectedText),
        (_, _) => None,
    };
    check_timeline(candidate.timeline_s, video.duration_s)?;

    let include_subtitles = kind == ResponseKind::Question && candidate.include_subtitles.unwrap_or(true);
    Ok(Response {
        response_id: candidate.response_id,
        user_id: candidate.user_id,
        video_id: video.video_id.clone(),
        timeline_s: candidate.timeline_s,
        kind,
        question_text,
        include_subtitles,
        created_at: candidate.created_at,
    })
}
