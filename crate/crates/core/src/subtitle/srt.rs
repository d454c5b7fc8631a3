use super::markup::strip_srt_markup;
use super::timecode::{format_timestamp, parse_srt_timestamp};
use super::{blocks, join_cue_lines, parse_timing, ParsedSubtitles, SubtitleCue, SubtitleError, SubtitleFormat};

/// Parses a SubRip document. Counter lines are optional and their values
/// ignored.
pub fn parse_srt(document: &str) -> Result<ParsedSubtitles, SubtitleError> {
    let blocks = blocks(document, false);
    if blocks.is_empty() {
        return Err(SubtitleError::EmptyDocument);
    }
    let mut cues = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let first = block.lines[0].trim();
        let timing_idx = if first.contains("-->") {
            0
        } else if first.bytes().all(|b| b.is_ascii_digit()) {
            1
        } else {
            return Err(SubtitleError::MalformedTimestamp {
                line: block.first_line,
                content: block.lines[0].to_owned(),
                reason: "expected a cue counter or timing line".into(),
            });
        };
        let Some(timing) = block.lines.get(timing_idx) else {
            return Err(SubtitleError::MalformedTimestamp {
                line: block.first_line,
                content: block.lines[0].to_owned(),
                reason: "cue counter without a timing line".into(),
            });
        };
        let (start_ms, end_ms) = parse_timing(timing, block.first_line + timing_idx, parse_srt_timestamp)?;
        let text = join_cue_lines(block.lines[timing_idx + 1..].iter().map(|l| strip_srt_markup(l)));
        if !text.is_empty() {
            cues.push(SubtitleCue { start_ms, end_ms, text });
        }
    }
    Ok(ParsedSubtitles::new(SubtitleFormat::Srt, cues))
}

/// Writes cues as SRT with counters re-derived from position.
pub fn serialize_srt(cues: &[SubtitleCue]) -> String {
    let mut out = String::new();
    for (idx, cue) in cues.iter().enumerate() {
        if idx > 0 {
            out.push('\n');
        }
        out.push_str(&format!(
            "{}\n{} --> {}\n",
            idx + 1,
            format_timestamp(cue.start_ms, ','),
            format_timestamp(cue.end_ms, ',')
        ));
        for line in cue.text.lines() {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}
