//! Operations shared by the HTTP handlers and the command-line tool.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use prepline_core::prompt::{PromptBuilder, PromptEnvelope};
use prepline_core::subtitle::SubtitleFormat;
use prepline_core::{GroupId, ResponseId, TrackId, VideoId, VideoRecord};
use prepline_store::Store;

use crate::error::ApiError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewVideo {
    #[serde(default)]
    pub video_id: Option<VideoId>,
    pub title: String,
    pub external_source_id: String,
    pub duration_s: f64,
    #[serde(default, alias = "groups")]
    pub group_ids: BTreeSet<GroupId>,
}

pub fn register_video(store: &Store, new: NewVideo) -> Result<VideoRecord, ApiError> {
    let video_id = new.video_id.unwrap_or_else(|| VideoId::new(Store::new_id("vid")));
    if store.video(&video_id).is_ok() {
        return Err(ApiError::conflict(format!("video `{video_id}` already exists")));
    }
    let record = VideoRecord {
        video_id,
        title: new.title,
        external_source_id: new.external_source_id,
        duration_s: new.duration_s,
        group_ids: new.group_ids,
        subtitle_track_id: None,
    };
    store.put_video(record.clone())?;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub video_id: VideoId,
    pub track_id: TrackId,
    pub language_tag: String,
    pub source_format: SubtitleFormat,
    pub cue_count: usize,
    /// Track that was linked before this one, now unlinked but kept.
    pub replaced_track_id: Option<TrackId>,
}

/// Parses `document` and makes it the video's subtitle track.
pub fn ingest_subtitles(
    store: &Store,
    video_id: &VideoId,
    document: &str,
    format: SubtitleFormat,
    language_tag: &str,
) -> Result<IngestSummary, ApiError> {
    let video = store.video(video_id)?;
    if language_tag.trim().is_empty() {
        return Err(ApiError::invalid("language_tag must not be empty"));
    }
    let track = format
        .parse(document)?
        .into_track(TrackId::new(Store::new_id("trk")), video_id.clone(), language_tag);
    track.check_fits(&video)?;
    let summary = IngestSummary {
        video_id: video_id.clone(),
        track_id: track.track_id.clone(),
        language_tag: track.language_tag.clone(),
        source_format: track.source_format,
        cue_count: track.cues.len(),
        replaced_track_id: video.subtitle_track_id.clone(),
    };
    let track_id = track.track_id.clone();
    store.put_track(track)?;
    store.link_track(video_id, &track_id)?;
    Ok(summary)
}

/// Both prompt variants for one question, for side-by-side comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptDump {
    pub response_id: ResponseId,
    pub include_subtitles: bool,
    pub with_subtitles: Option<PromptEnvelope>,
    pub without_subtitles: PromptEnvelope,
}

/// Builds the prompt for a stored question with the subtitle toggle forced
/// on and forced off, whatever the student chose.
pub fn dump_prompt(
    store: &Store,
    builder: &PromptBuilder,
    response_id: &ResponseId,
    without_subtitles_only: bool,
) -> Result<PromptDump, ApiError> {
    let response = store.response(response_id)?;
    let video = store.video(&response.video_id)?;
    let track = store.track_for_video(&video);
    let build = |include: bool| {
        let mut variant = response.clone();
        variant.include_subtitles = include;
        builder
            .build(&video, &variant, track.as_ref())
            .map_err(|e| ApiError::invalid(e.to_string()))
    };
    Ok(PromptDump {
        response_id: response.response_id.clone(),
        include_subtitles: response.include_subtitles,
        with_subtitles: if without_subtitles_only { None } else { Some(build(true)?) },
        without_subtitles: build(false)?,
    })
}
