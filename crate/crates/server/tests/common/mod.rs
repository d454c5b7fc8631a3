#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use prepline_core::prompt::PromptEnvelope;
use prepline_core::{GroupId, Role, UserId};
use prepline_gateway::{mock_answer, CompletionProvider, ProviderError};
use prepline_server::config::RosterEntry;
use prepline_server::{build_state, start, ApiConfig, RunningServer};
use reqwest::Method;
use serde_json::{json, Value};

pub const TEACHER: &str = "token-t1";
pub const S1: &str = "token-s1"; // g1
pub const S2: &str = "token-s2"; // g1
pub const S3: &str = "token-s3"; // g2

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name);
    std::fs::read_to_string(path).unwrap()
}

/// Two groups, one teacher, three students.
pub fn roster() -> Vec<RosterEntry> {
    let entry = |id: &str, role, groups: &[&str]| RosterEntry {
        user_id: UserId::from(id),
        role,
        groups: groups.iter().map(|g| GroupId::from(*g)).collect(),
        token: format!("token-{id}"),
    };
    vec![
        entry("t1", Role::Teacher, &[]),
        entry("s1", Role::Student, &["g1"]),
        entry("s2", Role::Student, &["g1"]),
        entry("s3", Role::Student, &["g2"]),
    ]
}

pub fn test_config(dir: &std::path::Path, llm_enabled: bool) -> ApiConfig {
    let mut config = ApiConfig {
        listen: "127.0.0.1:0".parse().unwrap(),
        data_dir: dir.to_path_buf(),
        users: roster(),
        ..Default::default()
    };
    config.llm.enabled = llm_enabled;
    config.llm.provider.backoff_base_ms = 10;
    config
}

/// Provider stub: optional delay, and failures for questions containing
/// `[fail]` (or every question while `always_fail` is set) until healed.
#[derive(Default)]
pub struct Stub {
    pub delay: Duration,
    pub always_fail: AtomicBool,
    pub healed: AtomicBool,
    pub calls: AtomicU32,
}

impl Stub {
    pub fn sleeping(delay: Duration) -> Arc<Self> {
        Arc::new(Self {
            delay,
            ..Default::default()
        })
    }
}

#[async_trait]
impl CompletionProvider for Stub {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        tokio::time::sleep(self.delay).await;
        let marked = envelope.user_message().unwrap_or("").contains("[fail]");
        if !self.healed.load(Ordering::SeqCst) && (marked || self.always_fail.load(Ordering::SeqCst)) {
            return Err(ProviderError::RemoteError {
                status: 500,
                body_excerpt: "stub failure".into(),
            });
        }
        Ok(mock_answer(envelope))
    }
}

pub struct Harness {
    pub dir: tempfile::TempDir,
    pub server: RunningServer,
    pub client: reqwest::Client,
}

impl Harness {
    pub async fn start(llm_enabled: bool, provider: Option<Arc<dyn CompletionProvider>>) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = test_config(dir.path(), llm_enabled);
        let state = build_state(&config, provider).unwrap();
        let server = start(state, config.listen, 4).await.unwrap();
        Self {
            dir,
            server,
            client: reqwest::Client::new(),
        }
    }

    pub async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> (u16, Value) {
        let mut request = self.client.request(method, self.server.url(path));
        if let Some(token) = token {
            request = request.bearer_auth(token);
        }
        if let Some(body) = body {
            request = request.json(&body);
        }
        let response = request.send().await.unwrap();
        let status = response.status().as_u16();
        let text = response.text().await.unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    pub async fn get(&self, path: &str, token: &str) -> (u16, Value) {
        self.call(Method::GET, path, Some(token), None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> (u16, Value) {
        self.call(Method::POST, path, Some(token), Some(body)).await
    }

    pub async fn put(&self, path: &str, token: &str, body: Value) -> (u16, Value) {
        self.call(Method::PUT, path, Some(token), Some(body)).await
    }

    /// Registers a 10-minute video for both groups with the lecture fixture
    /// as its subtitle track.
    pub async fn lecture(&self, video_id: &str) -> String {
        let (status, _) = self
            .post(
                "/videos",
                TEACHER,
                json!({"video_id": video_id, "title": "What ChatGPT can do", "external_source_id": "yt-abc",
                       "duration_s": 600.0, "group_ids": ["g1", "g2"]}),
            )
            .await;
        assert_eq!(status, 201);
        let (status, body) = self
            .put(
                &format!("/videos/{video_id}/subtitles"),
                TEACHER,
                json!({"document": fixture("chatgpt_lecture.srt"), "format": "srt"}),
            )
            .await;
        assert_eq!(status, 200, "{body}");
        video_id.to_owned()
    }

    pub async fn ask(&self, video: &str, token: &str, text: &str, include_subtitles: bool) -> Value {
        let (status, body) = self
            .post(
                &format!("/videos/{video}/responses"),
                token,
                json!({"kind": "Question", "timeline_s": 100.0, "question_text": text,
                       "include_subtitles": include_subtitles}),
            )
            .await;
        assert_eq!(status, 201, "{body}");
        body
    }

    /// The response's entry in the teacher's listing.
    pub async fn response_view(&self, video: &str, response_id: &str) -> Value {
        let (_, list) = self.get(&format!("/videos/{video}/responses"), TEACHER).await;
        list["responses"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["response_id"] == response_id)
            .cloned()
            .unwrap()
    }

    /// Polls until the response's latest job is terminal.
    pub async fn wait_for_job(&self, video: &str, response_id: &str, limit: Duration) -> Value {
        let deadline = Instant::now() + limit;
        loop {
            let view = self.response_view(video, response_id).await;
            let status = view["job"]["status"].as_str().unwrap_or("");
            if status == "done" || status == "failed" {
                return view;
            }
            assert!(Instant::now() < deadline, "job for {response_id} still {status}");
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
    }

    pub fn job_count(&self) -> usize {
        let store = &self.server.state.store;
        store
            .list_responses(&Default::default())
            .unwrap()
            .iter()
            .map(|r| store.jobs_for(&r.response_id).len())
            .sum()
    }
}

/// Every non-LLM endpoint with its success and error cases. Passes the same
/// way whether automatic answering is on or off; with it off, no job may
/// ever be created.
pub async fn endpoint_suite(h: &Harness) {
    let llm = h.server.state.answers.is_enabled();

    // videos
    let body = json!({"title": "T", "external_source_id": "yt", "duration_s": 300.0, "group_ids": ["g1"]});
    assert_eq!(h.call(Method::POST, "/videos", None, Some(body.clone())).await.0, 401);
    assert_eq!(h.call(Method::POST, "/videos", Some("nope-nope"), Some(body.clone())).await.0, 401);
    assert_eq!(h.post("/videos", S1, body.clone()).await.0, 403);
    let (status, video) = h.post("/videos", TEACHER, body).await;
    assert_eq!(status, 201);
    assert!(video["video_id"].as_str().unwrap().starts_with("vid_"));
    let bad = json!({"title": "T", "external_source_id": "yt", "duration_s": -5.0});
    assert_eq!(h.post("/videos", TEACHER, bad).await.0, 422);
    assert_eq!(h.post("/videos", TEACHER, json!({"title": 1})).await.0, 422);
    let v = h.lecture("lec").await;
    assert_eq!(h.post("/videos", TEACHER, json!({"video_id": "lec", "title": "again", "external_source_id": "x", "duration_s": 5.0})).await.0, 409);
    let (_, listed) = h.get("/videos", S3).await;
    assert_eq!(listed.as_array().unwrap().len(), 1, "s3 (g2) sees only the lecture");
    assert_eq!(h.get("/videos/nope", S1).await.0, 404);

    // subtitles
    let (status, first) = h
        .put("/videos/lec/subtitles", TEACHER, json!({"document": fixture("hourless.vtt"), "format": "vtt"}))
        .await;
    assert_eq!(status, 200);
    assert_eq!(first["cue_count"], 3);
    let (status, err) = h
        .put("/videos/lec/subtitles", TEACHER, json!({"document": "WEBVTT\n\n00:01.000 --> 00:xx.000\nhi\n", "format": "vtt"}))
        .await;
    assert_eq!(status, 422);
    assert_eq!(err["line"], 3);
    let (status, second) = h
        .put("/videos/lec/subtitles", TEACHER, json!({"document": fixture("chatgpt_lecture.srt"), "format": "srt"}))
        .await;
    assert_eq!(status, 200);
    assert_ne!(second["track_id"], first["track_id"]);
    assert_eq!(second["replaced_track_id"], first["track_id"]);
    assert_eq!(h.get("/videos/lec", TEACHER).await.1["subtitle_track_id"], second["track_id"]);
    assert_eq!(h.put("/videos/lec/subtitles", S1, json!({"document": "", "format": "srt"})).await.0, 403);
    assert_eq!(h.put("/videos/zzz/subtitles", TEACHER, json!({"document": "", "format": "srt"})).await.0, 404);
    assert_eq!(h.put("/videos/lec/subtitles", TEACHER, json!({"document": "x", "format": "ass"})).await.0, 422);

    // responses
    let path = format!("/videos/{v}/responses");
    let (status, mark) = h.post(&path, S1, json!({"kind": "Interesting", "timeline_s": 42.0})).await;
    assert_eq!(status, 201);
    assert_eq!(mark["job"], Value::Null);
    assert_eq!(mark["include_subtitles"], false);
    let q = h.ask(&v, S2, "Why do relationships matter here?", true).await;
    assert_eq!(q["job"].is_object(), llm, "{q}");
    assert_eq!(q["question_text"], "Why do relationships matter here?");
    for bad in [
        json!({"kind": "Confusing", "timeline_s": 1.0}),
        json!({"kind": "Question", "timeline_s": 1.0}),
        json!({"kind": "Important", "timeline_s": 601.0}),
        json!({"kind": "Important", "timeline_s": 1.0, "question_text": "?"}),
        json!({"kind": "Question", "timeline_s": 1.0, "question_text": "x".repeat(2001)}),
    ] {
        assert_eq!(h.post(&path, S1, bad.clone()).await.0, 422, "{bad}");
    }
    let (status, g2only) = h.post("/videos", TEACHER, json!({"title": "g2 only", "external_source_id": "y", "duration_s": 60.0, "group_ids": ["g2"]})).await;
    assert_eq!(status, 201);
    let g2path = format!("/videos/{}/responses", g2only["video_id"].as_str().unwrap());
    assert_eq!(h.post(&g2path, S1, json!({"kind": "Important", "timeline_s": 1.0})).await.0, 403);
    assert_eq!(h.get(&g2path, TEACHER).await.1["responses"], json!([]));
    assert_eq!(h.get("/videos/zzz/responses", S1).await.0, 404);

    // replies
    let qid = q["response_id"].as_str().unwrap().to_owned();
    let (status, reply) = h.post(&format!("/responses/{qid}/replies"), S1, json!({"body": "same question here"})).await;
    assert_eq!(status, 201);
    assert_eq!(reply["author_kind"], "student");
    let (status, reply) = h.post(&format!("/responses/{qid}/replies"), TEACHER, json!({"body": "see 1:32"})).await;
    assert_eq!(status, 201);
    assert_eq!(reply["author_kind"], "teacher");
    assert_eq!(h.post(&format!("/responses/{qid}/replies"), TEACHER, json!({"body": "  "})).await.0, 422);
    assert_eq!(h.post(&format!("/responses/{qid}/replies"), S3, json!({"body": "hi"})).await.0, 404);
    assert_eq!(h.post("/responses/nope/replies", TEACHER, json!({"body": "hi"})).await.0, 404);
    let view = h.response_view(&v, &qid).await;
    let humans: Vec<_> = view["replies"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["author_kind"] != "assistant")
        .map(|r| r["body"].as_str().unwrap())
        .collect();
    assert_eq!(humans, ["same question here", "see 1:32"]);

    // teacher question view
    let (status, dash) = h.get(&format!("/videos/{v}/questions"), TEACHER).await;
    assert_eq!(status, 200);
    let rows = dash["questions"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0]["user_id"].clone(), rows[0]["timeline_s"].clone()), (json!("s2"), json!(100.0)));
    assert_eq!(rows[0]["include_subtitles"], true);
    assert_eq!(h.get(&format!("/videos/{v}/questions"), S1).await.0, 403);
    let g2q = format!("/videos/{}/questions", g2only["video_id"].as_str().unwrap());
    assert_eq!(h.get(&g2q, TEACHER).await.1["questions"], json!([]));

    // events
    let events = format!("/videos/{v}/events");
    assert_eq!(h.post(&events, S1, json!({"kind": "start_watching", "timeline_s": 0.0})).await.0, 201);
    assert_eq!(h.post(&events, S1, json!({"kind": "stop_watching", "timeline_s": 600.0})).await.0, 201);
    assert_eq!(h.post(&events, S1, json!({"kind": "stop_watching", "timeline_s": 600.5})).await.0, 422);
    assert_eq!(h.post(&events, S1, json!({"kind": "pause", "timeline_s": 1.0})).await.0, 422);
    assert_eq!(h.post(&events, S1, json!({"kind": "response_put", "timeline_s": 1.0})).await.0, 422);
    assert_eq!(h.post(&events, S3, json!({"kind": "start_watching", "timeline_s": 0.0})).await.0, 201);

    // analytics
    let (status, stats) = h.get(&format!("/videos/{v}/analytics?bucket_s=60"), TEACHER).await;
    assert_eq!(status, 200);
    assert_eq!(stats["histogram"]["buckets"].as_array().unwrap().len(), 10);
    assert_eq!(stats["histogram"]["totals"], json!({"Interesting": 1, "Important": 0, "Difficult": 0, "Question": 1}));
    assert_eq!(stats["histogram"]["buckets"][0]["counts"]["Interesting"], 1);
    assert_eq!(stats["histogram"]["buckets"][1]["counts"]["Question"], 1);
    let coverage = stats["coverage"].as_array().unwrap();
    let s1 = coverage.iter().find(|c| c["user_id"] == "s1").unwrap();
    assert_eq!(s1["fraction"], 1.0);
    for bucket in ["0", "-1", "abc"] {
        assert_eq!(h.get(&format!("/videos/{v}/analytics?bucket_s={bucket}"), TEACHER).await.0, 422);
    }
    assert_eq!(h.get(&format!("/videos/{v}/analytics"), S1).await.0, 403);

    // annotations
    let ann = format!("/videos/{v}/annotations");
    assert_eq!(h.post(&ann, TEACHER, json!({"kind": "steering_mark", "timeline_start_s": 120.0})).await.0, 201);
    assert_eq!(h.post(&ann, TEACHER, json!({"kind": "caption", "timeline_start_s": 10.0, "timeline_end_s": 5.0, "body": "x"})).await.0, 422);
    assert_eq!(h.post(&ann, TEACHER, json!({"kind": "caption", "timeline_start_s": 10.0, "timeline_end_s": 20.0, "body": "Key idea"})).await.0, 201);
    assert_eq!(h.post(&ann, S1, json!({"kind": "steering_mark", "timeline_start_s": 1.0})).await.0, 403);
    let (_, list) = h.get(&path, S1).await;
    assert_eq!(list["annotations"].as_array().unwrap().len(), 2);
    let listed = h.get(&ann, S1).await.1;
    assert_eq!(listed.as_array().unwrap().len(), 2);
    let mark_id = listed[1]["annotation_id"].as_str().unwrap().to_owned();
    let one = format!("{ann}/{mark_id}");
    let moved = json!({"kind": "steering_mark", "timeline_start_s": 130.0, "body": "recap"});
    assert_eq!(h.put(&one, S1, moved.clone()).await.0, 403);
    assert_eq!(h.put(&format!("{ann}/nope"), TEACHER, moved.clone()).await.0, 404);
    assert_eq!(h.put(&one, TEACHER, json!({"kind": "caption", "timeline_start_s": 5.0})).await.0, 422);
    let (status, updated) = h.put(&one, TEACHER, moved).await;
    assert_eq!((status, updated["timeline_start_s"].clone()), (200, json!(130.0)));
    assert_eq!(h.call(Method::DELETE, &one, Some(S1), None).await.0, 403);
    assert_eq!(h.call(Method::DELETE, &one, Some(TEACHER), None).await.0, 204);
    assert_eq!(h.call(Method::DELETE, &one, Some(TEACHER), None).await.0, 404);
    let listed = h.get(&ann, S1).await.1;
    assert_eq!(listed.as_array().unwrap().len(), 1);
    assert_eq!(listed[0]["kind"], "caption");

    // retry is teacher-only whatever the mode
    assert_eq!(h.call(Method::POST, &format!("/responses/{qid}/retry"), Some(S1), None).await.0, 403);
    assert_eq!(h.call(Method::POST, "/responses/nope/retry", Some(TEACHER), None).await.0, 404);
    let (status, _) = h.call(Method::POST, &format!("/responses/{qid}/retry"), Some(TEACHER), None).await;
    assert_eq!(status, 409);

    if !llm {
        assert_eq!(h.job_count(), 0);
    }
}
