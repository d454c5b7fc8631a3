use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use prepline_core::analytics::{response_histogram, watch_coverage, TimelineHistogram, WatchInterval};
use prepline_core::subtitle::SubtitleFormat;
use prepline_core::*;
use prepline_gateway::AnswerService;
use prepline_store::{EventQuery, ResponseQuery, Store};

use crate::error::ApiError;
use crate::ops::{self, NewVideo};

/// Shared handler state. Everything mutable lives in the store.
#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub answers: Arc<AnswerService>,
    pub tokens: Arc<HashMap<String, UserId>>,
    pub limits: ValidationLimits,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/videos", post(create_video).get(list_videos))
        .route("/videos/{id}", get(get_video))
        .route("/videos/{id}/subtitles", axum::routing::put(put_subtitles))
        .route("/videos/{id}/responses", post(submit_response).get(list_responses))
        .route("/videos/{id}/questions", get(questions))
        .route("/videos/{id}/events", post(record_event))
        .route("/videos/{id}/analytics", get(analytics))
        .route("/videos/{id}/annotations", post(create_annotation).get(list_annotations))
        .route(
            "/videos/{id}/annotations/{annotation_id}",
            axum::routing::put(update_annotation).delete(delete_annotation),
        )
        .route("/responses/{id}/replies", post(manual_reply))
        .route("/responses/{id}/retry", post(retry))
        .route("/replies/{id}/prompt", get(reply_prompt))
        .with_state(state)
}

/// The authenticated user behind the request's bearer token.
pub struct Caller(pub User);

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, ApiError> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .ok_or_else(ApiError::unauthorized)?;
        let user_id = state.tokens.get(token).ok_or_else(ApiError::unauthorized)?;
        let user = state.store.user(user_id).map_err(|_| ApiError::unauthorized())?;
        Ok(Caller(user))
    }
}

impl Caller {
    fn require_teacher(&self) -> Result<(), ApiError> {
        if self.0.is_teacher() {
            Ok(())
        } else {
            Err(ApiError::forbidden("teacher role required"))
        }
    }

    fn require_member(&self, video: &VideoRecord) -> Result<(), ApiError> {
        if self.0.is_teacher() || self.0.is_member_of(video) {
            Ok(())
        } else {
            Err(ApiError::forbidden("not a member of a group assigned to this video"))
        }
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(format!("invalid request body: {e}")))
}

type ApiResult<T> = Result<T, ApiError>;

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "llm_enabled": state.answers.is_enabled() }))
}

// videos

async fn create_video(State(state): State<AppState>, caller: Caller, body: Bytes) -> ApiResult<impl IntoResponse> {
    caller.require_teacher()?;
    let new: NewVideo = parse_body(&body)?;
    let video = ops::register_video(&state.store, new)?;
    Ok((StatusCode::CREATED, Json(video)))
}

async fn list_videos(State(state): State<AppState>, caller: Caller) -> Json<Vec<VideoRecord>> {
    let videos = state.store.list_videos();
    Json(videos.into_iter().filter(|v| caller.require_member(v).is_ok()).collect())
}

async fn get_video(State(state): State<AppState>, caller: Caller, Path(id): Path<VideoId>) -> ApiResult<Json<VideoRecord>> {
    let video = state.store.video(&id)?;
    caller.require_member(&video)?;
    Ok(Json(video))
}

#[derive(Deserialize)]
struct IngestRequest {
    document: String,
    format: String,
    #[serde(default = "english")]
    language_tag: String,
}

fn english() -> String {
    "en".to_owned()
}

async fn put_subtitles(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<VideoId>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    caller.require_teacher()?;
    state.store.video(&id)?;
    let request: IngestRequest = parse_body(&body)?;
    let format: SubtitleFormat = request.format.parse().map_err(ApiError::invalid)?;
    let summary = ops::ingest_subtitles(&state.store, &id, &request.document, format, &request.language_tag)?;
    Ok(Json(summary))
}

// responses

#[derive(Deserialize)]
struct SubmitRequest {
    kind: String,
    timeline_s: f64,
    #[serde(default)]
    question_text: Option<String>,
    #[serde(default)]
    include_subtitles: Option<bool>,
}

/// Answer-job status as shown next to a response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub job_id: JobId,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

impl JobView {
    /// Teachers see the real state. Students only learn whether an answer
    /// is still outstanding, so a failed job reads as pending to them.
    fn of(job: AnswerJob, viewer: &User) -> Self {
        if viewer.is_teacher() {
            Self {
                job_id: job.job_id,
                status: job.status,
                attempts: Some(job.attempts),
                last_error: job.last_error,
            }
        } else {
            Self {
                job_id: job.job_id,
                status: if job.status == JobStatus::Failed { JobStatus::Pending } else { job.status },
                attempts: None,
                last_error: None,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmittedResponse {
    #[serde(flatten)]
    pub response: Response,
    pub job: Option<JobView>,
}

async fn submit_response(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<VideoId>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let video = state.store.video(&id)?;
    caller.require_member(&video)?;
    let request: SubmitRequest = parse_body(&body)?;
    let now = Timestamp::now();
    let candidate = ResponseCandidate {
        response_id: ResponseId::new(Store::new_id("resp")),
        user_id: caller.0.user_id.clone(),
        timeline_s: request.timeline_s,
        kind: request.kind,
        question_text: request.question_text,
        include_subtitles: request.include_subtitles,
        created_at: now,
    };
    let response = validate_response(candidate, &video, &state.limits)?;
    state.store.put_response(response.clone())?;
    state.store.append_event(WatchEvent {
        event_id: EventId::new(Store::new_id("evt")),
        user_id: response.user_id.clone(),
        video_id: video.video_id.clone(),
        kind: WatchEventKind::ResponsePut,
        timeline_s: response.timeline_s,
        created_at: now,
        response_id: Some(response.response_id.clone()),
    })?;
    let job = if response.is_question() && state.answers.is_enabled() {
        Some(JobView::of(state.answers.enqueue_answer_job(&response.response_id)?, &caller.0))
    } else {
        None
    };
    Ok((StatusCode::CREATED, Json(SubmittedResponse { response, job })))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseView {
    #[serde(flatten)]
    pub response: Response,
    pub replies: Vec<Reply>,
    pub job: Option<JobView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseList {
    pub video_id: VideoId,
    pub responses: Vec<ResponseView>,
    pub annotations: Vec<TeacherAnnotation>,
}

fn view(store: &Store, response: Response, viewer: &User) -> ResponseView {
    ResponseView {
        replies: store.replies_for(&response.response_id),
        job: store.latest_job_for(&response.response_id).map(|j| JobView::of(j, viewer)),
        response,
    }
}

async fn list_responses(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<VideoId>,
) -> ApiResult<Json<ResponseList>> {
    let video = state.store.video(&id)?;
    let responses = state.store.list_responses(&ResponseQuery {
        video_id: Some(id.clone()),
        kind: None,
        visible_to: Some(caller.0.user_id.clone()),
    })?;
    Ok(Json(ResponseList {
        responses: responses.into_iter().map(|r| view(&state.store, r, &caller.0)).collect(),
        annotations: state.store.list_annotations(&video.video_id),
        video_id: video.video_id,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRow {
    #[serde(flatten)]
    pub view: ResponseView,
    /// The latest answer job failed and needs a teacher.
    pub failed: bool,
}

async fn questions(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<VideoId>,
) -> ApiResult<Json<serde_json::Value>> {
    caller.require_teacher()?;
    state.store.video(&id)?;
    let list = state.store.list_responses(&ResponseQuery {
        video_id: Some(id.clone()),
        kind: Some(ResponseKind::Question),
        visible_to: None,
    })?;
    let rows: Vec<QuestionRow> = list
        .into_iter()
        .map(|r| {
            let view = view(&state.store, r, &caller.0);
            let failed = view.job.as_ref().is_some_and(|j| j.status == JobStatus::Failed);
            QuestionRow { view, failed }
        })
        .collect();
    Ok(Json(json!({ "video_id": id, "questions": rows })))
}

// replies

#[derive(Deserialize)]
struct ReplyRequest {
    body: String,
}

async fn manual_reply(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<ResponseId>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let response = state.store.response(&id)?;
    let video = state.store.video(&response.video_id)?;
    let author = state.store.user(&response.user_id)?;
    // responses the caller cannot see do not exist for them
    if !can_view(&caller.0, &author, &video) {
        return Err(ApiError::not_found(format!("response `{id}`")));
    }
    let request: ReplyRequest = parse_body(&body)?;
    let reply = Reply {
        reply_id: ReplyId::new(Store::new_id("rep")),
        response_id: id,
        author_kind: if caller.0.is_teacher() { AuthorKind::Teacher } else { AuthorKind::Student },
        author_id: Some(caller.0.user_id.clone()),
        body: request.body,
        prompt_snapshot: None,
        model_id: None,
        created_at: Timestamp::now(),
    };
    state.store.put_reply(reply.clone())?;
    Ok((StatusCode::CREATED, Json(reply)))
}

async fn retry(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<ResponseId>,
) -> ApiResult<impl IntoResponse> {
    caller.require_teacher()?;
    state.store.response(&id)?;
    let job = state.answers.retry_job(&id, &caller.0)?;
    Ok((StatusCode::ACCEPTED, Json(JobView::of(job, &caller.0))))
}

async fn reply_prompt(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<ReplyId>,
) -> ApiResult<impl IntoResponse> {
    caller.require_teacher()?;
    let reply = state.store.reply(&id)?;
    let snapshot_id = reply
        .prompt_snapshot
        .ok_or_else(|| ApiError::not_found(format!("prompt for reply `{id}`")))?;
    Ok(Json(state.store.snapshot(&snapshot_id)?))
}

// behavior events

#[derive(Deserialize)]
struct EventRequest {
    kind: String,
    timeline_s: f64,
}

async fn record_event(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<VideoId>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let video = state.store.video(&id)?;
    caller.require_member(&video)?;
    let request: EventRequest = parse_body(&body)?;
    let kind = match request.kind.as_str() {
        "start_watching" => WatchEventKind::StartWatching,
        "stop_watching" => WatchEventKind::StopWatching,
        "response_put" => return Err(ApiError::invalid("response_put events are recorded when a response is submitted")),
        other => return Err(ApiError::invalid(format!("unknown event kind `{other}`"))),
    };
    let event = WatchEvent {
        event_id: EventId::new(Store::new_id("evt")),
        user_id: caller.0.user_id.clone(),
        video_id: id,
        kind,
        timeline_s: request.timeline_s,
        created_at: Timestamp::now(),
        response_id: None,
    };
    event.validate(&video)?;
    let event_id = state.store.append_event(event)?;
    Ok((StatusCode::CREATED, Json(json!({ "event_id": event_id }))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserCoverage {
    pub user_id: UserId,
    pub fraction: f64,
    pub intervals: Vec<WatchInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAnalytics {
    pub video_id: VideoId,
    pub duration_s: f64,
    pub histogram: TimelineHistogram,
    pub coverage: Vec<UserCoverage>,
}

pub const DEFAULT_BUCKET_S: f64 = 30.0;

async fn analytics(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<VideoId>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Json<VideoAnalytics>> {
    caller.require_teacher()?;
    let video = state.store.video(&id)?;
    let bucket_s = match params.get("bucket_s") {
        None => DEFAULT_BUCKET_S,
        Some(raw) => raw
            .parse::<f64>()
            .map_err(|_| ApiError::invalid(format!("bucket_s `{raw}` is not a number")))?,
    };
    let responses = state.store.list_responses(&ResponseQuery {
        video_id: Some(id.clone()),
        ..Default::default()
    })?;
    let histogram = response_histogram(video.duration_s, bucket_s, &responses)
        .map_err(|e| ApiError::invalid(e.to_string()))?;

    let events = state.store.events(&EventQuery {
        video_id: Some(id.clone()),
        user_id: None,
    });
    let mut per_user: BTreeMap<&UserId, Vec<&WatchEvent>> = BTreeMap::new();
    for event in &events {
        per_user.entry(&event.user_id).or_default().push(event);
    }
    let coverage = per_user
        .into_iter()
        .map(|(user_id, events)| {
            let c = watch_coverage(video.duration_s, events);
            UserCoverage {
                user_id: user_id.clone(),
                fraction: c.fraction,
                intervals: c.intervals,
            }
        })
        .collect();
    Ok(Json(VideoAnalytics {
        video_id: video.video_id,
        duration_s: video.duration_s,
        histogram,
        coverage,
    }))
}

// teacher annotations

#[derive(Deserialize)]
struct AnnotationRequest {
    kind: AnnotationKind,
    timeline_start_s: f64,
    #[serde(default)]
    timeline_end_s: Option<f64>,
    #[serde(default)]
    body: String,
}

async fn create_annotation(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<VideoId>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    caller.require_teacher()?;
    state.store.video(&id)?;
    let request: AnnotationRequest = parse_body(&body)?;
    let annotation = TeacherAnnotation {
        annotation_id: AnnotationId::new(Store::new_id("ann")),
        video_id: id,
        kind: request.kind,
        timeline_start_s: request.timeline_start_s,
        timeline_end_s: request.timeline_end_s,
        body: request.body,
    };
    state.store.put_annotation(annotation.clone())?;
    Ok((StatusCode::CREATED, Json(annotation)))
}

async fn list_annotations(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<VideoId>,
) -> ApiResult<Json<Vec<TeacherAnnotation>>> {
    let video = state.store.video(&id)?;
    caller.require_member(&video)?;
    Ok(Json(state.store.list_annotations(&id)))
}

async fn update_annotation(
    State(state): State<AppState>,
    caller: Caller,
    Path((id, annotation_id)): Path<(VideoId, AnnotationId)>,
    body: Bytes,
) -> ApiResult<Json<TeacherAnnotation>> {
    caller.require_teacher()?;
    state.store.video(&id)?;
    let request: AnnotationRequest = parse_body(&body)?;
    let annotation = TeacherAnnotation {
        annotation_id,
        video_id: id,
        kind: request.kind,
        timeline_start_s: request.timeline_start_s,
        timeline_end_s: request.timeline_end_s,
        body: request.body,
    };
    state.store.update_annotation(annotation.clone())?;
    Ok(Json(annotation))
}

async fn delete_annotation(
    State(state): State<AppState>,
    caller: Caller,
    Path((id, annotation_id)): Path<(VideoId, AnnotationId)>,
) -> ApiResult<StatusCode> {
    caller.require_teacher()?;
    state.store.delete_annotation(&id, &annotation_id)?;
    Ok(StatusCode::NO_CONTENT)
}
