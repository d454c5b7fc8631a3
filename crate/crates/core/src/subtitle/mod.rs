//! Subtitle ingestion and windowing.
//!
//! Both parsers normalize cue text the same way: markup is stripped, each
//! line has its whitespace collapsed, blank lines are dropped and the
//! remaining lines are joined with `\n`. Cues whose text is empty after
//! stripping are skipped. Cues end up stably sorted by `(start_ms, end_ms)`.

mod markup;
mod srt;
mod timecode;
mod webvtt;
mod window;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{TrackId, VideoId, VideoRecord};

pub use srt::{parse_srt, serialize_srt};
pub use webvtt::{parse_webvtt, serialize_webvtt};
pub use window::{extract_window, render_excerpt, TimelineWindow, DEFAULT_WINDOW_RADIUS_S};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubtitleCue {
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

impl SubtitleCue {
    pub fn new(start_ms: u64, end_ms: u64, text: impl Into<String>) -> Self {
        Self {
            start_ms,
            end_ms,
            text: text.into(),
        }
    }

    /// Whether the cue touches `[start_ms, end_ms]` (closed on both sides).
    pub fn overlaps(&self, start_ms: u64, end_ms: u64) -> bool {
        self.start_ms <= end_ms && self.end_ms >= start_ms
    }

    pub fn contains(&self, at_ms: u64) -> bool {
        self.start_ms <= at_ms && at_ms <= self.end_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtitleFormat {
    Webvtt,
    Srt,
}

impl SubtitleFormat {
    pub fn parse(self, document: &str) -> Result<ParsedSubtitles, SubtitleError> {
        match self {
            SubtitleFormat::Webvtt => parse_webvtt(document),
            SubtitleFormat::Srt => parse_srt(document),
        }
    }

    pub fn serialize(self, cues: &[SubtitleCue]) -> String {
        match self {
            SubtitleFormat::Webvtt => serialize_webvtt(cues),
            SubtitleFormat::Srt => serialize_srt(cues),
        }
    }
}

impl std::str::FromStr for SubtitleFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vtt" | "webvtt" => Ok(SubtitleFormat::Webvtt),
            "srt" => Ok(SubtitleFormat::Srt),
            other => Err(format!("unknown subtitle format `{other}` (expected vtt or srt)")),
        }
    }
}

impl fmt::Display for SubtitleFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubtitleFormat::Webvtt => "webvtt",
            SubtitleFormat::Srt => "srt",
        })
    }
}

/// Output of a parser, before it is attached to a video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSubtitles {
    pub source_format: SubtitleFormat,
    pub cues: Vec<SubtitleCue>,
}

impl ParsedSubtitles {
    pub(crate) fn new(source_format: SubtitleFormat, mut cues: Vec<SubtitleCue>) -> Self {
        sort_cues(&mut cues);
        Self { source_format, cues }
    }

    pub fn into_track(self, track_id: TrackId, video_id: VideoId, language_tag: impl Into<String>) -> SubtitleTrack {
        SubtitleTrack {
            track_id,
            video_id,
            language_tag: language_tag.into(),
            cues: self.cues,
            source_format: self.source_format,
        }
    }
}

/// Stable sort by start, ties broken by end.
pub fn sort_cues(cues: &mut [SubtitleCue]) {
    cues.sort_by_key(|c| (c.start_ms, c.end_ms));
}

/// Time-coded transcript of one video. Overlapping cues are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtitleTrack {
    pub track_id: TrackId,
    pub video_id: VideoId,
    pub language_tag: String,
    pub cues: Vec<SubtitleCue>,
    pub source_format: SubtitleFormat,
}

impl SubtitleTrack {
    /// Rejects tracks whose cues run more than the allowed slack past the
    /// end of `video`.
    pub fn check_fits(&self, video: &VideoRecord) -> Result<(), SubtitleError> {
        let limit = video.max_cue_end_ms();
        match self.cues.iter().find(|c| c.end_ms > limit) {
            Some(cue) => Err(SubtitleError::CueOverrunsVideo {
                end_ms: cue.end_ms,
                limit_ms: limit,
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubtitleError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("line 1: missing `WEBVTT` header")]
    MissingHeader,
    #[error("line {line}: malformed timestamp line `{content}`: {reason}")]
    MalformedTimestamp {
        line: usize,
        content: String,
        reason: String,
    },
    #[error("cue ending at {end_ms} ms runs past the video end (limit {limit_ms} ms)")]
    CueOverrunsVideo { end_ms: u64, limit_ms: u64 },
}

impl SubtitleError {
    /// 1-based source line the error points at, when there is one.
    pub fn line(&self) -> Option<usize> {
        match self {
            SubtitleError::MissingHeader => Some(1),
            SubtitleError::MalformedTimestamp { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// A block of consecutive non-blank lines, with the 1-based number of its
/// first line.
pub(crate) struct Block<'a> {
    pub first_line: usize,
    pub lines: Vec<&'a str>,
}

/// Splits a document into blank-line separated blocks. Handles a leading
/// byte-order mark and both LF and CRLF endings. With `strict_blank`, only
/// empty lines separate blocks (WebVTT); otherwise whitespace-only lines do
/// too.
pub(crate) fn blocks(document: &str, strict_blank: bool) -> Vec<Block<'_>> {
    let document = document.strip_prefix('\u{feff}').unwrap_or(document);
    let mut out = Vec::new();
    let mut current: Option<Block<'_>> = None;
    for (idx, line) in document.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let blank = if strict_blank { line.is_empty() } else { line.trim().is_empty() };
        if blank {
            if let Some(block) = current.take() {
                out.push(block);
            }
        } else {
            current
                .get_or_insert_with(|| Block {
                    first_line: idx + 1,
                    lines: Vec::new(),
                })
                .lines
                .push(line);
        }
    }
    out.extend(current);
    out
}

/// Normalizes already de-marked-up cue lines into stored cue text.
pub(crate) fn join_cue_lines<I, S>(lines: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for line in lines {
        let collapsed = collapse_whitespace(line.as_ref());
        if collapsed.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&collapsed);
    }
    out
}

pub(crate) fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Shared timing-line parse: `start --> end [settings]`.
pub(crate) fn parse_timing(
    line: &str,
    line_no: usize,
    parse_ts: fn(&str) -> Result<u64, String>,
) -> Result<(u64, u64), SubtitleError> {
    let malformed = |reason: String| SubtitleError::MalformedTimestamp {
        line: line_no,
        content: line.to_owned(),
        reason,
    };
    let (left, right) = line
        .split_once("-->")
        .ok_or_else(|| malformed("expected `start --> end`".into()))?;
    let start = parse_ts(left.trim()).map_err(&malformed)?;
    let end_token = right.split_whitespace().next().unwrap_or("");
    let end = parse_ts(end_token).map_err(&malformed)?;
    if start >= end {
        return Err(malformed(format!("start {start} ms is not before end {end} ms")));
    }
    Ok((start, end))
}
