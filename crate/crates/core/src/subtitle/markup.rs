//! Cue-text markup handling. Prompts need plain text, so styling, voice
//! spans and in-cue timestamps are dropped.

/// Removes every `<...>` span and decodes character references.
pub(crate) fn strip_vtt_markup(line: &str) -> String {
    let mut plain = String::with_capacity(line.len());
    let mut in_tag = false;
    for ch in line.chars() {
        match (in_tag, ch) {
            (false, '<') => in_tag = true,
            (true, '>') => in_tag = false,
            (false, _) => plain.push(ch),
            (true, _) => {}
        }
    }
    decode_entities(&plain)
}

fn decode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        match tail.find(';').filter(|&end| end <= 10).and_then(|end| Some((decode_one(&tail[1..end])?, end))) {
            Some((decoded, end)) => {
                out.push_str(decoded.as_str());
                rest = &tail[end + 1..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_one(name: &str) -> Option<String> {
    let named = match name {
        "amp" => "&",
        "lt" => "<",
        "gt" => ">",
        "quot" => "\"",
        "apos" => "'",
        "nbsp" => " ",
        "lrm" | "rlm" => "",
        _ => {
            let code = if let Some(hex) = name.strip_prefix("#x").or_else(|| name.strip_prefix("#X")) {
                u32::from_str_radix(hex, 16).ok()?
            } else {
                name.strip_prefix('#')?.parse().ok()?
            };
            return char::from_u32(code).map(String::from);
        }
    };
    Some(named.to_owned())
}

/// Escapes text for a WebVTT cue payload.
pub(crate) fn escape_vtt(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(ch),
        }
    }
    out
}

/// SRT has no escaping; only HTML-style formatting tags (`<i>`, `</b>`,
/// `<font color=..>`) and `{\an8}`-style override blocks are removed. A bare
/// `<` that does not open such a tag is kept.
pub(crate) fn strip_srt_markup(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut rest = line;
    while let Some(pos) = rest.find(['<', '{']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        let skip = if let Some(body) = tail.strip_prefix('<') {
            let body = body.strip_prefix('/').unwrap_or(body);
            let opens_tag = body.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
            tail.find('>').filter(|&end| opens_tag && !tail[1..end].contains('<'))
        } else if tail.starts_with("{\\") {
            tail.find('}')
        } else {
            None
        };
        match skip {
            Some(end) => rest = &tail[end + 1..],
            None => {
                let first = tail.chars().next().expect("non-empty tail");
                out.push(first);
                rest = &tail[first.len_utf8()..];
            }
        }
    }
    out.push_str(rest);
    out
}
