//! Timestamp parsing and formatting for both formats.

fn two_digits(field: &str, name: &str) -> Result<u64, String> {
    if field.len() != 2 || !field.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("{name} must be two digits, got `{field}`"));
    }
    let value: u64 = field.parse().map_err(|_| format!("bad {name} `{field}`"))?;
    if value >= 60 {
        return Err(format!("{name} out of range: {value}"));
    }
    Ok(value)
}

fn hours(field: &str) -> Result<u64, String> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("bad hours `{field}`"));
    }
    field.parse().map_err(|_| format!("hours out of range `{field}`"))
}

fn seconds_and_millis(field: &str, separator: char) -> Result<(u64, u64), String> {
    let (secs, millis) = field
        .split_once(separator)
        .ok_or_else(|| format!("expected `SS{separator}mmm`, got `{field}`"))?;
    let secs = two_digits(secs, "seconds")?;
    if millis.len() != 3 || !millis.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("milliseconds must be three digits, got `{millis}`"));
    }
    Ok((secs, millis.parse().expect("three ascii digits")))
}

fn total_ms(h: u64, m: u64, s: u64, ms: u64) -> Result<u64, String> {
    h.checked_mul(3_600_000)
        .and_then(|v| v.checked_add(m * 60_000 + s * 1000 + ms))
        .ok_or_else(|| "timestamp overflows".to_owned())
}

/// `[HH:]MM:SS.mmm`
pub(crate) fn parse_vtt_timestamp(raw: &str) -> Result<u64, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    let (h, m, rest) = match parts.as_slice() {
        [m, rest] => (0, two_digits(m, "minutes")?, *rest),
        [h, m, rest] => (hours(h)?, two_digits(m, "minutes")?, *rest),
        _ => return Err(format!("expected `[HH:]MM:SS.mmm`, got `{raw}`")),
    };
    let (s, ms) = seconds_and_millis(rest, '.')?;
    total_ms(h, m, s, ms)
}

/// `HH:MM:SS,mmm`
pub(crate) fn parse_srt_timestamp(raw: &str) -> Result<u64, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [h, m, rest] = parts.as_slice() else {
        return Err(format!("expected `HH:MM:SS,mmm`, got `{raw}`"));
    };
    let (s, ms) = seconds_and_millis(rest, ',')?;
    total_ms(hours(h)?, two_digits(m, "minutes")?, s, ms)
}

pub(crate) fn format_timestamp(ms: u64, separator: char) -> String {
    let h = ms / 3_600_000;
    let m = ms / 60_000 % 60;
    let s = ms / 1000 % 60;
    format!("{h:02}:{m:02}:{s:02}{separator}{:03}", ms % 1000)
}
