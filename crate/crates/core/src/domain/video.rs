use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{DomainError, GroupId, TrackId, VideoId};

/// Auto-generated captions may run slightly past the end of the video.
pub const CUE_OVERRUN_SLACK_MS: u64 = 5_000;

/// A lecture video registered for preparation learning. The media itself
/// stays on the hosting platform; only its identifier is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: VideoId,
    pub title: String,
    pub external_source_id: String,
    pub duration_s: f64,
    pub group_ids: BTreeSet<GroupId>,
    #[serde(default)]
    pub subtitle_track_id: Option<TrackId>,
}

impl VideoRecord {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.title.trim().is_empty() {
            return Err(DomainError::invalid("title", "must not be empty"));
        }
        if !self.duration_s.is_finite() || self.duration_s < 0.0 {
            return Err(DomainError::invalid(
                "duration_s",
                format!("must be a non-negative number of seconds, got {}", self.duration_s),
            ));
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> u64 {
        (self.duration_s * 1000.0).round() as u64
    }

    /// Latest cue end a subtitle track for this video may have.
    pub fn max_cue_end_ms(&self) -> u64 {
        self.duration_ms() + CUE_OVERRUN_SLACK_MS
    }

    pub fn shares_group_with(&self, groups: &BTreeSet<GroupId>) -> bool {
        !self.group_ids.is_disjoint(groups)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(title: &str, duration_s: f64) -> VideoRecord {
        VideoRecord {
            video_id: "v1".into(),
            title: title.into(),
            external_source_id: "yt-abc".into(),
            duration_s,
            group_ids: BTreeSet::new(),
            subtitle_track_id: None,
        }
    }

    #[test]
    fn rejects_negative_duration_and_blank_title() {
        assert!(video("Lecture 1", 600.0).validate().is_ok());
        assert!(video("Lecture 1", 0.0).validate().is_ok());
        assert!(video("Lecture 1", -5.0).validate().is_err());
        assert!(video("Lecture 1", f64::NAN).validate().is_err());
        assert!(video("  ", 10.0).validate().is_err());
    }

    #[test]
    fn cue_slack() {
        assert_eq!(video("t", 600.0).max_cue_end_ms(), 605_000);
    }
}
