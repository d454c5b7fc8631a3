//! Timeline analytics over collected behavior: how responses of each kind
//! spread over the video, and how much of it each student watched.

use serde::{Deserialize, Serialize};

use crate::domain::{Response, ResponseKind, WatchEvent, WatchEventKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("bucket width must be positive, got {0}")]
    InvalidBucket(f64),
}

/// Response counts keyed by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    #[serde(rename = "Interesting")]
    pub interesting: u64,
    #[serde(rename = "Important")]
    pub important: u64,
    #[serde(rename = "Difficult")]
    pub difficult: u64,
    #[serde(rename = "Question")]
    pub question: u64,
}

impl KindCounts {
    pub fn get(&self, kind: ResponseKind) -> u64 {
        match kind {
            ResponseKind::Interesting => self.interesting,
            ResponseKind::Important => self.important,
            ResponseKind::Difficult => self.difficult,
            ResponseKind::Question => self.question,
        }
    }

    fn bump(&mut self, kind: ResponseKind) {
        match kind {
            ResponseKind::Interesting => self.interesting += 1,
            ResponseKind::Important => self.important += 1,
            ResponseKind::Difficult => self.difficult += 1,
            ResponseKind::Question => self.question += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.interesting + self.important + self.difficult + self.question
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub start_s: f64,
    pub counts: KindCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineHistogram {
    pub bucket_s: f64,
    pub buckets: Vec<HistogramBucket>,
    pub totals: KindCounts,
}

/// Number of buckets covering a video. A zero-length video still gets one
/// bucket so that responses at 0 s are counted.
pub fn bucket_count(duration_s: f64, bucket_s: f64) -> usize {
    ((duration_s / bucket_s).ceil() as usize).max(1)
}

/// Counts `responses` into buckets of `bucket_s` seconds by
/// `floor(timeline_s / bucket_s)`. A response exactly at the end of a video
/// whose length is a multiple of the bucket width lands in the last bucket.
pub fn response_histogram<'a, I>(duration_s: f64, bucket_s: f64, responses: I) -> Result<TimelineHistogram, AnalyticsError>
where
    I: IntoIterator<Item = &'a Response>,
{
    if !(bucket_s.is_finite() && bucket_s > 0.0) {
        return Err(AnalyticsError::InvalidBucket(bucket_s));
    }
    let n = bucket_count(duration_s, bucket_s);
    let mut buckets: Vec<HistogramBucket> = (0..n)
        .map(|i| HistogramBucket {
            start_s: i as f64 * bucket_s,
            counts: KindCounts::default(),
        })
        .collect();
    let mut totals = KindCounts::default();
    for response in responses {
        let idx = ((response.timeline_s.max(0.0) / bucket_s).floor() as usize).min(n - 1);
        buckets[idx].counts.bump(response.kind);
        totals.bump(response.kind);
    }
    Ok(TimelineHistogram {
        bucket_s,
        buckets,
        totals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WatchInterval {
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchCoverage {
    pub fraction: f64,
    pub intervals: Vec<WatchInterval>,
}

/// Watched portion of a video for one student's events, given in log order.
///
/// A start opens an interval; the interval reaches as far as the furthest
/// position observed until the next stop (inclusive) or start. A start that
/// is never stopped closes at the furthest position observed after it.
/// Intervals are clipped to the video and merged before measuring.
pub fn watch_coverage<'a, I>(duration_s: f64, events: I) -> WatchCoverage
where
    I: IntoIterator<Item = &'a WatchEvent>,
{
    let mut raw = Vec::new();
    let mut open: Option<WatchInterval> = None;
    for event in events {
        let t = event.timeline_s;
        match event.kind {
            WatchEventKind::StartWatching => {
                raw.extend(open.take());
                open = Some(WatchInterval { start_s: t, end_s: t });
            }
            WatchEventKind::StopWatching => {
                if let Some(mut iv) = open.take() {
                    iv.end_s = iv.end_s.max(t);
                    raw.push(iv);
                }
            }
            WatchEventKind::ResponsePut => {
                if let Some(iv) = open.as_mut() {
                    iv.end_s = iv.end_s.max(t);
                }
            }
        }
    }
    raw.extend(open);

    let intervals = merge(raw, duration_s);
    let covered: f64 = intervals.iter().map(|iv| iv.end_s - iv.start_s).sum();
    let fraction = if duration_s > 0.0 {
        (covered / duration_s).clamp(0.0, 1.0)
    } else {
        0.0
    };
    WatchCoverage { fraction, intervals }
}

fn merge(mut raw: Vec<WatchInterval>, duration_s: f64) -> Vec<WatchInterval> {
    for iv in &mut raw {
        iv.start_s = iv.start_s.clamp(0.0, duration_s.max(0.0));
        iv.end_s = iv.end_s.clamp(iv.start_s, duration_s.max(0.0));
    }
    raw.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut merged: Vec<WatchInterval> = Vec::with_capacity(raw.len());
    for iv in raw {
        match merged.last_mut() {
            Some(last) if iv.start_s <= last.end_s => last.end_s = last.end_s.max(iv.end_s),
            _ => merged.push(iv),
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Timestamp;

    fn response(kind: ResponseKind, timeline_s: f64) -> Response {
        Response {
            response_id: "r".into(),
            user_id: "u".into(),
            video_id: "v".into(),
            timeline_s,
            kind,
            question_text: (kind == ResponseKind::Question).then(|| "q".into()),
            include_subtitles: false,
            created_at: Timestamp::from_millis(0),
        }
    }

    fn event(kind: WatchEventKind, timeline_s: f64) -> WatchEvent {
        WatchEvent {
            event_id: "e".into(),
            user_id: "u".into(),
            video_id: "v".into(),
            kind,
            timeline_s,
            created_at: Timestamp::from_millis(0),
            response_id: (kind == WatchEventKind::ResponsePut).then(|| "r".into()),
        }
    }

    #[test]
    fn empty_histogram() {
        let h = response_histogram(100.0, 30.0, &[]).unwrap();
        assert_eq!(h.buckets.len(), 4);
        assert!(h.buckets.iter().all(|b| b.counts.total() == 0));
        assert_eq!(h.buckets[3].start_s, 90.0);
    }

    #[test]
    fn floor_rule() {
        let rs = [response(ResponseKind::Important, 0.0), response(ResponseKind::Question, 29.9)];
        let h = response_histogram(100.0, 30.0, &rs).unwrap();
        assert_eq!(h.buckets[0].counts.total(), 2);
        assert_eq!(h.buckets[0].counts.question, 1);
        assert_eq!(h.totals.important, 1);
    }

    #[test]
    fn end_of_video_lands_in_last_bucket() {
        let rs = [response(ResponseKind::Difficult, 90.0)];
        let h = response_histogram(90.0, 30.0, &rs).unwrap();
        assert_eq!(h.buckets.len(), 3);
        assert_eq!(h.buckets[2].counts.difficult, 1);
        assert_eq!(response_histogram(0.0, 30.0, &rs[..0]).unwrap().buckets.len(), 1);
    }

    #[test]
    fn bad_bucket() {
        assert!(response_histogram(10.0, 0.0, &[]).is_err());
        assert!(response_histogram(10.0, -1.0, &[]).is_err());
        assert!(response_histogram(10.0, f64::NAN, &[]).is_err());
    }

    #[test]
    fn coverage_examples() {
        use WatchEventKind::*;
        let full = [event(StartWatching, 0.0), event(StopWatching, 100.0)];
        assert_eq!(watch_coverage(100.0, &full).fraction, 1.0);
        assert_eq!(watch_coverage(100.0, &[]).fraction, 0.0);
        let overlap = [
            event(StartWatching, 0.0),
            event(StopWatching, 30.0),
            event(StartWatching, 20.0),
            event(StopWatching, 50.0),
        ];
        let c = watch_coverage(100.0, &overlap);
        assert_eq!(c.fraction, 0.5);
        assert_eq!(c.intervals, vec![WatchInterval { start_s: 0.0, end_s: 50.0 }]);
    }

    #[test]
    fn dangling_start_closes_at_last_observed_position() {
        use WatchEventKind::*;
        let evs = [event(StartWatching, 10.0), event(ResponsePut, 40.0)];
        assert_eq!(watch_coverage(100.0, &evs).fraction, 0.3);
        let evs = [event(StartWatching, 10.0), event(ResponsePut, 40.0), event(StartWatching, 70.0)];
        let c = watch_coverage(100.0, &evs);
        assert_eq!(c.intervals.len(), 2);
        assert!((c.fraction - 0.3).abs() < 1e-12);
        // a stop before the start (backwards seek) adds nothing
        let evs = [event(StartWatching, 50.0), event(StopWatching, 20.0)];
        assert_eq!(watch_coverage(100.0, &evs).fraction, 0.0);
    }
}
