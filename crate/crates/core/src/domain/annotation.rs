use serde::{Deserialize, Serialize};

use super::{check_timeline, AnnotationId, DomainError, VideoId, VideoRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    /// A point marking what students are expected to learn at that moment.
    SteeringMark,
    /// Overlay text spanning a time range.
    Caption,
}

/// Teacher-designated response, kept apart from student responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherAnnotation {
    pub annotation_id: AnnotationId,
    pub video_id: VideoId,
    pub kind: AnnotationKind,
    pub timeline_start_s: f64,
    #[serde(default)]
    pub timeline_end_s: Option<f64>,
    pub body: String,
}

impl TeacherAnnotation {
    pub fn validate(&self, video: &VideoRecord) -> Result<(), DomainError> {
        check_timeline(self.timeline_start_s, video.duration_s)?;
        match (self.kind, self.timeline_end_s) {
            (AnnotationKind::SteeringMark, None) => {}
            (AnnotationKind::SteeringMark, Some(_)) => {
                return Err(DomainError::invalid("timeline_end_s", "steering marks are points"))
            }
            (AnnotationKind::Caption, None) => {
                return Err(DomainError::invalid("timeline_end_s", "captions need an end time"))
            }
            (AnnotationKind::Caption, Some(end)) => {
                check_timeline(end, video.duration_s)?;
                if end <= self.timeline_start_s {
                    return Err(DomainError::invalid(
                        "timeline_end_s",
                        format!("caption end {end}s must be after start {}s", self.timeline_start_s),
                    ));
                }
            }
        }
        if self.body.trim().is_empty() && self.kind == AnnotationKind::Caption {
            return Err(DomainError::invalid("body", "captions need text"));
        }
        Ok(())
    }
}
