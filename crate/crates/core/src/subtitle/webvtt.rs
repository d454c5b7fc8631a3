use super::markup::{escape_vtt, strip_vtt_markup};
use super::timecode::{format_timestamp, parse_vtt_timestamp};
use super::{blocks, join_cue_lines, parse_timing, ParsedSubtitles, SubtitleCue, SubtitleError, SubtitleFormat};

fn is_header(line: &str) -> bool {
    line.strip_prefix("WEBVTT")
        .is_some_and(|rest| rest.is_empty() || rest.starts_with([' ', '\t']))
}

fn is_ignored_block(first: &str) -> bool {
    ["NOTE", "STYLE", "REGION"].iter().any(|kw| {
        first
            .strip_prefix(kw)
            .is_some_and(|rest| rest.is_empty() || rest.starts_with([' ', '\t']))
    })
}

fn looks_like_timing(line: &str) -> bool {
    line.starts_with(|c: char| c.is_ascii_digit()) && line.contains(':')
}

/// Parses a WebVTT document.
///
/// A cue block may start with an identifier line; the line after it must
/// then be the timing line. NOTE, STYLE and REGION blocks and header
/// metadata are skipped.
pub fn parse_webvtt(document: &str) -> Result<ParsedSubtitles, SubtitleError> {
    if document.trim_start_matches('\u{feff}').trim().is_empty() {
        return Err(SubtitleError::EmptyDocument);
    }
    let blocks = blocks(document, true);
    let Some((header, body)) = blocks.split_first() else {
        return Err(SubtitleError::EmptyDocument);
    };
    if header.first_line != 1 || !is_header(header.lines[0]) {
        return Err(SubtitleError::MissingHeader);
    }

    let mut cues = Vec::new();
    for block in body {
        if is_ignored_block(block.lines[0]) {
            continue;
        }
        let timing_idx = match block.lines.get(1) {
            _ if block.lines[0].contains("-->") => 0,
            Some(next) if next.contains("-->") => 1,
            // no arrow anywhere: blame whichever line looks like a broken timing line
            _ if looks_like_timing(block.lines[0]) => 0,
            _ => 1,
        };
        let Some(timing) = block.lines.get(timing_idx) else {
            return Err(SubtitleError::MalformedTimestamp {
                line: block.first_line,
                content: block.lines[0].to_owned(),
                reason: "cue identifier without a timing line".into(),
            });
        };
        let (start_ms, end_ms) = parse_timing(timing, block.first_line + timing_idx, parse_vtt_timestamp)?;
        let text = join_cue_lines(block.lines[timing_idx + 1..].iter().map(|l| strip_vtt_markup(l)));
        if !text.is_empty() {
            cues.push(SubtitleCue { start_ms, end_ms, text });
        }
    }
    Ok(ParsedSubtitles::new(SubtitleFormat::Webvtt, cues))
}

/// Writes cues as WebVTT with LF endings, full `HH:MM:SS.mmm` timestamps and
/// escaped payloads.
pub fn serialize_webvtt(cues: &[SubtitleCue]) -> String {
    let mut out = String::from("WEBVTT\n");
    for cue in cues {
        out.push('\n');
        out.push_str(&format_timestamp(cue.start_ms, '.'));
        out.push_str(" --> ");
        out.push_str(&format_timestamp(cue.end_ms, '.'));
        out.push('\n');
        for line in cue.text.lines() {
            out.push_str(&escape_vtt(line));
            out.push('\n');
        }
    }
    out
}
