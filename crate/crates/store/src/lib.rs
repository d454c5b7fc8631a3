//! Embedded single-node storage for prepline.
//!
//! Each collection lives in `<data_dir>/<collection>.jsonl`, an append-only
//! journal of full records (last line per key wins). Watch events go to
//! `events.jsonl` and are never rewritten. Every completed write is flushed
//! to the OS before the call returns; with [`StoreOptions::sync_writes`] it is
//! also fsynced. Journals are compacted offline with [`Store::compact`].
//!
//! The store enforces referential integrity and is the serialization point
//! for answer-job state transitions.

mod events;
mod journal;
mod records;

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use prepline_core::prompt::PromptEnvelope;
use prepline_core::subtitle::SubtitleTrack;
use prepline_core::{
    can_view, AnnotationId, AnswerJob, AuthorKind, DomainError, EventId, JobId, JobStatus, Reply, ReplyId, Response, ResponseId,
    ResponseKind, SnapshotId, TeacherAnnotation, TrackId, User, UserId, VideoId, VideoRecord, WatchEvent,
    WatchEventKind,
};

use events::EventLog;
use journal::Collection;
pub use records::{PromptSnapshot, Record};

/// Names accepted by [`Store::export`].
pub const COLLECTIONS: &[&str] = &[
    "videos",
    "users",
    "responses",
    "replies",
    "annotations",
    "jobs",
    "tracks",
    "prompt_snapshots",
    "events",
];

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{collection} `{id}` not found")]
    NotFound { collection: &'static str, id: String },
    #[error("integrity violation: {0}")]
    IntegrityViolation(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error(transparent)]
    Invalid(#[from] DomainError),
    #[error("unknown collection `{0}`")]
    UnknownCollection(String),
    #[error("{path}: line {line} is corrupt: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("encoding failed: {0}")]
    Encode(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.to_owned(),
            source,
        }
    }

    fn not_found(collection: &'static str, id: impl ToString) -> Self {
        StoreError::NotFound {
            collection,
            id: id.to_string(),
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, Default)]
pub struct StoreOptions {
    /// fsync after every write instead of only flushing to the OS.
    pub sync_writes: bool,
}

/// Filter for [`Store::list_responses`].
#[derive(Debug, Clone, Default)]
pub struct ResponseQuery {
    pub video_id: Option<VideoId>,
    pub kind: Option<ResponseKind>,
    /// Keep only responses this user may see.
    pub visible_to: Option<UserId>,
}

#[derive(Debug, Clone, Default)]
pub struct EventQuery {
    pub video_id: Option<VideoId>,
    pub user_id: Option<UserId>,
}

pub struct Store {
    dir: PathBuf,
    videos: Collection<VideoRecord>,
    users: Collection<User>,
    responses: Collection<Response>,
    replies: Collection<Reply>,
    annotations: Collection<TeacherAnnotation>,
    jobs: Collection<AnswerJob>,
    tracks: Collection<SubtitleTrack>,
    snapshots: Collection<PromptSnapshot>,
    events: EventLog,
}

impl Store {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(dir, StoreOptions::default())
    }

    pub fn open_with(dir: impl AsRef<Path>, options: StoreOptions) -> Result<Self> {
        let dir = dir.as_ref().to_owned();
        std::fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
        let sync = options.sync_writes;
        Ok(Self {
            videos: Collection::open(&dir, sync)?,
            users: Collection::open(&dir, sync)?,
            responses: Collection::open(&dir, sync)?,
            replies: Collection::open(&dir, sync)?,
            annotations: Collection::open(&dir, sync)?,
            jobs: Collection::open(&dir, sync)?,
            tracks: Collection::open(&dir, sync)?,
            snapshots: Collection::open(&dir, sync)?,
            events: EventLog::open(&dir, sync)?,
            dir,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Fresh opaque id. Ids from one process sort in creation order.
    pub fn new_id(prefix: &str) -> String {
        format!("{prefix}_{}", uuid::Uuid::now_v7().simple())
    }

    // videos

    pub fn put_video(&self, video: VideoRecord) -> Result<()> {
        video.validate()?;
        if let Some(track_id) = &video.subtitle_track_id {
            let track = self
                .tracks
                .get(track_id.as_str())
                .ok_or_else(|| StoreError::IntegrityViolation(format!("video links unknown track `{track_id}`")))?;
            if track.video_id != video.video_id {
                return Err(StoreError::IntegrityViolation(format!(
                    "track `{track_id}` belongs to video `{}`",
                    track.video_id
                )));
            }
        }
        self.videos.put(video)
    }

    pub fn video(&self, id: &VideoId) -> Result<VideoRecord> {
        self.videos.get(id.as_str()).ok_or_else(|| StoreError::not_found("videos", id))
    }

    pub fn list_videos(&self) -> Vec<VideoRecord> {
        self.videos.snapshot_in_insertion_order()
    }

    // users

    pub fn put_user(&self, user: User) -> Result<()> {
        self.users.put(user)
    }

    pub fn user(&self, id: &UserId) -> Result<User> {
        self.users.get(id.as_str()).ok_or_else(|| StoreError::not_found("users", id))
    }

    // responses

    /// Inserts a validated response. Responses are immutable once stored.
    pub fn put_response(&self, response: Response) -> Result<()> {
        let video = self.require_video(&response.video_id)?;
        self.require_user(&response.user_id)?;
        prepline_core::check_timeline(response.timeline_s, video.duration_s)?;
        if response.is_question() != response.question_text.is_some() {
            return Err(DomainError::MissingQuestionText.into());
        }
        self.responses.put_checked(response, |existing, _| match existing {
            Some(r) => Err(StoreError::Conflict(format!("response `{}` already exists", r.response_id))),
            None => Ok(()),
        })
    }

    pub fn response(&self, id: &ResponseId) -> Result<Response> {
        self.responses.get(id.as_str()).ok_or_else(|| StoreError::not_found("responses", id))
    }

    /// Matching responses ordered by `created_at`.
    pub fn list_responses(&self, query: &ResponseQuery) -> Result<Vec<Response>> {
        let viewer = query.visible_to.as_ref().map(|id| self.user(id)).transpose()?;
        let mut authors: HashMap<UserId, Option<User>> = HashMap::new();
        let mut videos: HashMap<VideoId, Option<VideoRecord>> = HashMap::new();
        let candidates = self.responses.list(|r| {
            query.video_id.as_ref().is_none_or(|v| &r.video_id == v) && query.kind.is_none_or(|k| r.kind == k)
        });
        let Some(viewer) = viewer else {
            return Ok(candidates);
        };
        Ok(candidates
            .into_iter()
            .filter(|r| {
                let author = authors
                    .entry(r.user_id.clone())
                    .or_insert_with(|| self.users.get(r.user_id.as_str()));
                let video = videos
                    .entry(r.video_id.clone())
                    .or_insert_with(|| self.videos.get(r.video_id.as_str()));
                match (author.as_ref(), video.as_ref()) {
                    (Some(author), Some(video)) => can_view(&viewer, author, video),
                    _ => false,
                }
            })
            .collect())
    }

    // replies

    /// Stores a teacher or student reply.
    pub fn put_reply(&self, reply: Reply) -> Result<()> {
        reply.validate()?;
        if reply.author_kind == AuthorKind::Assistant {
            return Err(StoreError::IntegrityViolation(
                "assistant replies must be stored with their prompt snapshot".into(),
            ));
        }
        self.require_response(&reply.response_id)?;
        if let Some(author) = &reply.author_id {
            self.require_user(author)?;
        }
        self.replies.put_checked(reply, |existing, _| match existing {
            Some(r) => Err(StoreError::Conflict(format!("reply `{}` already exists", r.reply_id))),
            None => Ok(()),
        })
    }

    /// Stores an assistant reply together with the envelope that produced
    /// it. A response never gets a second assistant reply.
    pub fn put_assistant_reply(&self, reply: Reply, envelope: PromptEnvelope) -> Result<()> {
        reply.validate()?;
        let snapshot_id = match (&reply.author_kind, &reply.prompt_snapshot) {
            (AuthorKind::Assistant, Some(id)) => id.clone(),
            _ => return Err(StoreError::IntegrityViolation("not an assistant reply".into())),
        };
        self.require_response(&reply.response_id)?;
        if envelope.created_for_response_id != reply.response_id {
            return Err(StoreError::IntegrityViolation(format!(
                "envelope was built for response `{}`",
                envelope.created_for_response_id
            )));
        }
        let snapshot = PromptSnapshot {
            snapshot_id,
            reply_id: reply.reply_id.clone(),
            envelope,
            created_at: reply.created_at,
        };
        let response_id = reply.response_id.clone();
        self.replies.put_checked(reply, |existing, all| {
            if existing.is_some() {
                return Err(StoreError::Conflict("reply id already used".into()));
            }
            for other in all {
                if other.response_id == response_id && other.author_kind == AuthorKind::Assistant {
                    return Err(StoreError::IntegrityViolation(format!(
                        "response `{response_id}` already has an assistant reply"
                    )));
                }
            }
            // snapshot first so a stored reply always resolves its prompt
            self.snapshots.put_checked(snapshot, |existing, _| match existing {
                Some(s) => Err(StoreError::Conflict(format!("snapshot `{}` already exists", s.snapshot_id))),
                None => Ok(()),
            })
        })
    }

    pub fn reply(&self, id: &ReplyId) -> Result<Reply> {
        self.replies.get(id.as_str()).ok_or_else(|| StoreError::not_found("replies", id))
    }

    /// The reply thread of a response in `(created_at, reply_id)` order.
    pub fn replies_for(&self, response_id: &ResponseId) -> Vec<Reply> {
        let mut thread = self.replies.list(|r| &r.response_id == response_id);
        prepline_core::sort_thread(&mut thread);
        thread
    }

    pub fn snapshot(&self, id: &SnapshotId) -> Result<PromptSnapshot> {
        self.snapshots
            .get(id.as_str())
            .ok_or_else(|| StoreError::not_found("prompt_snapshots", id))
    }

    // annotations

    pub fn put_annotation(&self, annotation: TeacherAnnotation) -> Result<()> {
        let video = self.require_video(&annotation.video_id)?;
        annotation.validate(&video)?;
        self.annotations.put(annotation)
    }

    /// Replaces an existing annotation; its video cannot change.
    pub fn update_annotation(&self, annotation: TeacherAnnotation) -> Result<()> {
        let video = self.require_video(&annotation.video_id)?;
        annotation.validate(&video)?;
        let id = annotation.annotation_id.clone();
        let video_id = annotation.video_id.clone();
        self.annotations.put_checked(annotation, |existing, _| match existing {
            Some(a) if a.video_id == video_id => Ok(()),
            _ => Err(StoreError::not_found("annotations", &id)),
        })
    }

    /// Deletes an annotation of `video_id`.
    pub fn delete_annotation(&self, video_id: &VideoId, id: &AnnotationId) -> Result<TeacherAnnotation> {
        self.annotations.remove(id.as_str(), |a| {
            if &a.video_id == video_id {
                Ok(())
            } else {
                Err(StoreError::not_found("annotations", id))
            }
        })
    }

    pub fn list_annotations(&self, video_id: &VideoId) -> Vec<TeacherAnnotation> {
        let mut list = self.annotations.list(|a| &a.video_id == video_id);
        list.sort_by(|a, b| a.timeline_start_s.total_cmp(&b.timeline_start_s));
        list
    }

    // subtitle tracks

    pub fn put_track(&self, track: SubtitleTrack) -> Result<()> {
        let video = self.require_video(&track.video_id)?;
        track
            .check_fits(&video)
            .map_err(|e| StoreError::IntegrityViolation(e.to_string()))?;
        self.tracks.put(track)
    }

    pub fn track(&self, id: &TrackId) -> Result<SubtitleTrack> {
        self.tracks.get(id.as_str()).ok_or_else(|| StoreError::not_found("tracks", id))
    }

    /// Points the video at `track_id`, unlinking any previous track. The old
    /// track stays stored.
    pub fn link_track(&self, video_id: &VideoId, track_id: &TrackId) -> Result<VideoRecord> {
        let track = self.track(track_id)?;
        if &track.video_id != video_id {
            return Err(StoreError::IntegrityViolation(format!(
                "track `{track_id}` belongs to video `{}`",
                track.video_id
            )));
        }
        self.videos.compare_and_update(video_id.as_str(), |_| Ok(()), |v| {
            v.subtitle_track_id = Some(track_id.clone());
        })
    }

    pub fn track_for_video(&self, video: &VideoRecord) -> Option<SubtitleTrack> {
        video.subtitle_track_id.as_ref().and_then(|id| self.tracks.get(id.as_str()))
    }

    // answer jobs

    /// Inserts a new job; fails with `Conflict` while another job for the
    /// same response is still pending or in flight.
    pub fn insert_job(&self, job: AnswerJob) -> Result<()> {
        self.require_response(&job.response_id)?;
        let response_id = job.response_id.clone();
        self.jobs.put_checked(job, |existing, all| {
            if existing.is_some() {
                return Err(StoreError::Conflict("job id already used".into()));
            }
            for active in all {
                if active.response_id == response_id && !active.status.is_terminal() {
                    return Err(StoreError::Conflict(format!(
                        "response `{response_id}` already has active job `{}`",
                        active.job_id
                    )));
                }
            }
            Ok(())
        })
    }

    pub fn job(&self, id: &JobId) -> Result<AnswerJob> {
        self.jobs.get(id.as_str()).ok_or_else(|| StoreError::not_found("jobs", id))
    }

    /// Jobs for a response, oldest first.
    pub fn jobs_for(&self, response_id: &ResponseId) -> Vec<AnswerJob> {
        self.jobs.list(|j| &j.response_id == response_id)
    }

    pub fn latest_job_for(&self, response_id: &ResponseId) -> Option<AnswerJob> {
        self.jobs_for(response_id).pop()
    }

    pub fn jobs_with_status(&self, status: JobStatus) -> Vec<AnswerJob> {
        self.jobs.list(|j| j.status == status)
    }

    /// Compare-and-set on job status: applies `update` only if the job is
    /// currently in `expected`.
    pub fn transition_job<F>(&self, id: &JobId, expected: JobStatus, update: F) -> Result<AnswerJob>
    where
        F: FnOnce(&mut AnswerJob),
    {
        self.jobs.compare_and_update(
            id.as_str(),
            |job| {
                if job.status == expected {
                    Ok(())
                } else {
                    Err(StoreError::Conflict(format!(
                        "job `{id}` is {:?}, expected {expected:?}",
                        job.status
                    )))
                }
            },
            update,
        )
    }

    // watch events

    pub fn append_event(&self, event: WatchEvent) -> Result<EventId> {
        let video = self.require_video(&event.video_id)?;
        self.require_user(&event.user_id)?;
        event.validate(&video)?;
        if let Some(response_id) = &event.response_id {
            let response = self.require_response(response_id)?;
            if response.video_id != event.video_id || event.kind != WatchEventKind::ResponsePut {
                return Err(StoreError::IntegrityViolation(format!(
                    "event references response `{response_id}` of another video"
                )));
            }
        }
        let id = event.event_id.clone();
        self.events.append(event)?;
        Ok(id)
    }

    /// Matching events in append order.
    pub fn events(&self, query: &EventQuery) -> Vec<WatchEvent> {
        self.events.filter(|e| {
            query.video_id.as_ref().is_none_or(|v| &e.video_id == v)
                && query.user_id.as_ref().is_none_or(|u| &e.user_id == u)
        })
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    // maintenance

    /// Writes one JSON document per line for every record in `collection`.
    pub fn export(&self, collection: &str, out: &mut dyn Write) -> Result<usize> {
        fn dump<T: serde::Serialize>(items: Vec<T>, out: &mut dyn Write) -> Result<usize> {
            let n = items.len();
            for item in items {
                let line = serde_json::to_string(&item).map_err(|e| StoreError::Encode(e.to_string()))?;
                writeln!(out, "{line}").map_err(|e| StoreError::io(Path::new("<export>"), e))?;
            }
            Ok(n)
        }
        match collection {
            "videos" => dump(self.videos.snapshot_in_insertion_order(), out),
            "users" => dump(self.users.snapshot_in_insertion_order(), out),
            "responses" => dump(self.responses.list(|_| true), out),
            "replies" => dump(self.replies.list(|_| true), out),
            "annotations" => dump(self.annotations.snapshot_in_insertion_order(), out),
            "jobs" => dump(self.jobs.list(|_| true), out),
            "tracks" => dump(self.tracks.snapshot_in_insertion_order(), out),
            "prompt_snapshots" => dump(self.snapshots.list(|_| true), out),
            "events" => dump(self.events(&EventQuery::default()), out),
            other => Err(StoreError::UnknownCollection(other.to_owned())),
        }
    }

    /// Rewrites every collection journal to one line per record. Returns
    /// the number of live records per collection. Meant to run while no
    /// server has the data directory open.
    pub fn compact(&self) -> Result<Vec<(&'static str, usize)>> {
        Ok(vec![
            ("videos", self.videos.compact()?),
            ("users", self.users.compact()?),
            ("responses", self.responses.compact()?),
            ("replies", self.replies.compact()?),
            ("annotations", self.annotations.compact()?),
            ("jobs", self.jobs.compact()?),
            ("tracks", self.tracks.compact()?),
            ("prompt_snapshots", self.snapshots.compact()?),
        ])
    }

    pub fn record_counts(&self) -> Vec<(&'static str, usize)> {
        vec![
            ("videos", self.videos.len()),
            ("users", self.users.len()),
            ("responses", self.responses.len()),
            ("replies", self.replies.len()),
            ("annotations", self.annotations.len()),
            ("jobs", self.jobs.len()),
            ("tracks", self.tracks.len()),
            ("prompt_snapshots", self.snapshots.len()),
            ("events", self.events.len()),
        ]
    }

    fn require_video(&self, id: &VideoId) -> Result<VideoRecord> {
        self.videos
            .get(id.as_str())
            .ok_or_else(|| StoreError::IntegrityViolation(format!("unknown video `{id}`")))
    }

    fn require_user(&self, id: &UserId) -> Result<User> {
        self.users
            .get(id.as_str())
            .ok_or_else(|| StoreError::IntegrityViolation(format!("unknown user `{id}`")))
    }

    fn require_response(&self, id: &ResponseId) -> Result<Response> {
        self.responses
            .get(id.as_str())
            .ok_or_else(|| StoreError::IntegrityViolation(format!("unknown response `{id}`")))
    }
}
