use super::{collapse_whitespace, SubtitleCue, SubtitleTrack};

pub const DEFAULT_WINDOW_RADIUS_S: f64 = 30.0;

/// Closed interval on the video timeline, in milliseconds.
///
/// Seconds are quantized to whole milliseconds, the resolution of cue
/// timing. The start clamps at zero; the window is not re-centered near the
/// beginning or end of the video.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineWindow {
    pub start_ms: u64,
    pub end_ms: u64,
}

impl TimelineWindow {
    pub fn around(center_s: f64, radius_s: f64) -> Self {
        let center_ms = seconds_to_ms(center_s);
        let radius_ms = seconds_to_ms(radius_s);
        Self {
            start_ms: center_ms.saturating_sub(radius_ms),
            end_ms: center_ms.saturating_add(radius_ms),
        }
    }
}

pub(crate) fn seconds_to_ms(seconds: f64) -> u64 {
    if seconds.is_nan() || seconds <= 0.0 {
        0
    } else {
        (seconds * 1000.0).round() as u64
    }
}

/// Cues overlapping the window of `radius_s` seconds around `center_s`,
/// in track order.
pub fn extract_window(track: &SubtitleTrack, center_s: f64, radius_s: f64) -> Vec<SubtitleCue> {
    cues_in_window(&track.cues, TimelineWindow::around(center_s, radius_s))
}

/// `cues` must be sorted by start time.
pub(crate) fn cues_in_window(cues: &[SubtitleCue], window: TimelineWindow) -> Vec<SubtitleCue> {
    let candidates = cues.partition_point(|c| c.start_ms <= window.end_ms);
    cues[..candidates]
        .iter()
        .filter(|c| c.end_ms >= window.start_ms)
        .cloned()
        .collect()
}

/// Joins cue texts with single spaces. Newlines inside a cue collapse too;
/// repeated texts are kept.
pub fn render_excerpt(cues: &[SubtitleCue]) -> String {
    cues.iter()
        .map(|c| collapse_whitespace(&c.text))
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}
