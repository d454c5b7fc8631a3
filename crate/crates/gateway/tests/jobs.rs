use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use prepline_core::prompt::{PromptBuilder, PromptEnvelope, PromptSettings, PromptTemplate};
use prepline_core::subtitle::{SubtitleCue, SubtitleFormat, SubtitleTrack};
use prepline_core::*;
use prepline_gateway::*;
use prepline_store::Store;
use rand::{Rng, SeedableRng};

fn groups(gs: &[&str]) -> BTreeSet<GroupId> {
    gs.iter().map(|g| GroupId::from(*g)).collect()
}

fn seeded(dir: &std::path::Path) -> Arc<Store> {
    let store = Store::open(dir).unwrap();
    store
        .put_video(VideoRecord {
            video_id: "v1".into(),
            title: "Intro to Prompting".into(),
            external_source_id: "yt-v1".into(),
            duration_s: 600.0,
            group_ids: groups(&["g1"]),
            subtitle_track_id: None,
        })
        .unwrap();
    store
        .put_track(SubtitleTrack {
            track_id: "t1".into(),
            video_id: "v1".into(),
            language_tag: "en".into(),
            cues: vec![
                SubtitleCue::new(95_000, 99_000, "tokens are pieces of words"),
                SubtitleCue::new(99_000, 104_000, "the model predicts the next token"),
            ],
            source_format: SubtitleFormat::Webvtt,
        })
        .unwrap();
    store.link_track(&"v1".into(), &"t1".into()).unwrap();
    for (id, role) in [("s1", Role::Student), ("t1", Role::Teacher)] {
        store
            .put_user(User {
                user_id: id.into(),
                role,
                group_ids: groups(&["g1"]),
            })
            .unwrap();
    }
    Arc::new(store)
}

fn put_response(store: &Store, id: &str, kind: ResponseKind) -> ResponseId {
    let question = kind == ResponseKind::Question;
    store
        .put_response(Response {
            response_id: id.into(),
            user_id: "s1".into(),
            video_id: "v1".into(),
            timeline_s: 100.0,
            kind,
            question_text: question.then(|| "What exactly is a token here?".to_owned()),
            include_subtitles: question,
            created_at: Timestamp::now(),
        })
        .unwrap();
    id.into()
}

fn policy(max_attempts: u32, backoff_base_ms: u64) -> RetryPolicy {
    RetryPolicy {
        max_attempts,
        backoff_base_ms,
        timeout: Duration::from_secs(5),
    }
}

fn service(store: &Arc<Store>, provider: Arc<dyn CompletionProvider>, policy: RetryPolicy) -> Arc<AnswerService> {
    let builder = PromptBuilder::new(PromptTemplate::default(), PromptSettings::default()).unwrap();
    Arc::new(AnswerService::new(store.clone(), provider, builder, policy, true))
}

/// Fails the first `fail_first` calls, or every call while `broken` is set.
#[derive(Default)]
struct Flaky {
    calls: AtomicU32,
    fail_first: u32,
    broken: AtomicBool,
}

#[async_trait]
impl CompletionProvider for Flaky {
    async fn complete(&self, envelope: &PromptEnvelope) -> Result<String, ProviderError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        tokio::task::yield_now().await;
        if n < self.fail_first || self.broken.load(Ordering::SeqCst) {
            Err(ProviderError::RemoteError {
                status: 503,
                body_excerpt: "overloaded".into(),
            })
        } else {
            Ok(mock_answer(envelope))
        }
    }
}

fn assistant_replies(store: &Store, rid: &ResponseId) -> Vec<Reply> {
    store
        .replies_for(rid)
        .into_iter()
        .filter(|r| r.author_kind == AuthorKind::Assistant)
        .collect()
}

#[tokio::test]
async fn happy_path_stores_reply_with_its_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded(dir.path());
    let svc = service(&store, Arc::new(MockProvider), policy(3, 0));
    let rid = put_response(&store, "r1", ResponseKind::Question);
    let job = svc.enqueue_answer_job(&rid).unwrap();
    assert_eq!((job.status, job.attempts), (JobStatus::Pending, 0));

    let JobOutcome::Done { job, reply } = svc.execute_job(&job.job_id).await.unwrap() else {
        panic!("job did not finish");
    };
    assert_eq!((job.status, job.attempts), (JobStatus::Done, 1));
    assert!(job.finished_at.is_some());
    let snapshot = store.snapshot(reply.prompt_snapshot.as_ref().unwrap()).unwrap();
    assert_eq!(reply.body, mock_answer(&snapshot.envelope));
    assert_eq!(reply.model_id.as_deref(), Some("gpt-3.5-turbo"));
    let system = snapshot.envelope.system_message().unwrap();
    assert!(system.contains("tokens are pieces of words the model predicts the next token"));
    assert_eq!(snapshot.envelope.user_message(), Some("What exactly is a token here?"));
    assert_eq!(assistant_replies(&store, &rid), vec![reply]);
}

#[tokio::test]
async fn rejects_non_questions_duplicates_and_disabled_mode() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded(dir.path());
    let svc = service(&store, Arc::new(MockProvider), policy(3, 0));
    let mark = put_response(&store, "r0", ResponseKind::Difficult);
    assert!(matches!(svc.enqueue_answer_job(&mark), Err(GatewayError::NotAQuestion)));

    let rid = put_response(&store, "r1", ResponseKind::Question);
    svc.enqueue_answer_job(&rid).unwrap();
    assert!(matches!(svc.enqueue_answer_job(&rid), Err(GatewayError::DuplicateActiveJob)));

    let builder = PromptBuilder::new(PromptTemplate::default(), PromptSettings::default()).unwrap();
    let off = AnswerService::new(store.clone(), Arc::new(MockProvider), builder, policy(3, 0), false);
    let other = put_response(&store, "r2", ResponseKind::Question);
    assert!(matches!(off.enqueue_answer_job(&other), Err(GatewayError::LlmDisabled)));
    assert!(store.jobs_for(&other).is_empty());
}

#[tokio::test]
async fn transient_failures_are_retried() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded(dir.path());
    let flaky = Arc::new(Flaky {
        fail_first: 2,
        ..Default::default()
    });
    let svc = service(&store, flaky.clone(), policy(3, 20));
    let rid = put_response(&store, "r1", ResponseKind::Question);
    let job = svc.enqueue_answer_job(&rid).unwrap();
    let started = Instant::now();
    let outcome = svc.execute_job(&job.job_id).await.unwrap();
    // 20ms + 40ms of backoff
    assert!(started.elapsed() >= Duration::from_millis(60));
    let JobOutcome::Done { job, .. } = outcome else { panic!("{outcome:?}") };
    assert_eq!((job.status, job.attempts), (JobStatus::Done, 3));
    assert_eq!(flaky.calls.load(Ordering::SeqCst), 3);
    assert_eq!(assistant_replies(&store, &rid).len(), 1);
}

#[tokio::test]
async fn exhausted_job_fails_and_teacher_can_retry() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded(dir.path());
    let flaky = Arc::new(Flaky::default());
    flaky.broken.store(true, Ordering::SeqCst);
    let svc = service(&store, flaky.clone(), policy(3, 0));
    let rid = put_response(&store, "r1", ResponseKind::Question);
    let teacher = store.user(&"t1".into()).unwrap();
    let student = store.user(&"s1".into()).unwrap();

    assert!(matches!(svc.retry_job(&rid, &teacher), Err(GatewayError::NoFailedJob)));
    let job = svc.enqueue_answer_job(&rid).unwrap();
    let JobOutcome::Failed(failed) = svc.execute_job(&job.job_id).await.unwrap() else { panic!() };
    assert_eq!((failed.status, failed.attempts), (JobStatus::Failed, 3));
    assert!(failed.last_error.as_deref().unwrap().contains("503"));
    assert!(assistant_replies(&store, &rid).is_empty());

    assert!(matches!(svc.retry_job(&rid, &student), Err(GatewayError::Forbidden)));
    flaky.broken.store(false, Ordering::SeqCst);
    let again = svc.retry_job(&rid, &teacher).unwrap();
    assert_ne!(again.job_id, failed.job_id);
    assert!(matches!(svc.execute_job(&again.job_id).await.unwrap(), JobOutcome::Done { .. }));
    assert_eq!(assistant_replies(&store, &rid).len(), 1);
    assert!(matches!(svc.retry_job(&rid, &teacher), Err(GatewayError::NoFailedJob)));
    assert_eq!(store.jobs_for(&rid).len(), 2);
}

#[tokio::test]
async fn recovery_requeues_interrupted_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let rid;
    let job_id;
    {
        let store = seeded(dir.path());
        let svc = service(&store, Arc::new(MockProvider), policy(3, 0));
        rid = put_response(&store, "r1", ResponseKind::Question);
        job_id = svc.enqueue_answer_job(&rid).unwrap().job_id;
        store
            .transition_job(&job_id, JobStatus::Pending, |j| {
                j.status = JobStatus::InFlight;
                j.attempts = 1;
            })
            .unwrap();
    }
    // simulated restart
    let store = Arc::new(Store::open(dir.path()).unwrap());
    let svc = service(&store, Arc::new(MockProvider), policy(3, 0));
    let _workers = svc.start(2).unwrap();
    let deadline = Instant::now() + Duration::from_secs(5);
    while store.job(&job_id).unwrap().status != JobStatus::Done {
        assert!(Instant::now() < deadline, "recovered job never finished");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    assert_eq!(store.job(&job_id).unwrap().attempts, 2);
    assert_eq!(assistant_replies(&store, &rid).len(), 1);
}

#[tokio::test]
async fn job_for_already_answered_response_finishes_without_calling_provider() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded(dir.path());
    let flaky = Arc::new(Flaky::default());
    let svc = service(&store, flaky.clone(), policy(3, 0));
    let rid = put_response(&store, "r1", ResponseKind::Question);
    let first = svc.enqueue_answer_job(&rid).unwrap();
    svc.execute_job(&first.job_id).await.unwrap();
    // a stale job record, as if left behind by a crash after the reply was written
    store
        .insert_job(AnswerJob::pending("job_stale".into(), rid.clone(), Timestamp::now()))
        .unwrap();
    let outcome = svc.execute_job(&"job_stale".into()).await.unwrap();
    assert!(matches!(outcome, JobOutcome::Done { .. }));
    assert_eq!(flaky.calls.load(Ordering::SeqCst), 1);
    assert_eq!(assistant_replies(&store, &rid).len(), 1);
}

#[tokio::test]
async fn workers_answer_in_background() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded(dir.path());
    let svc = service(&store, Arc::new(MockProvider), policy(3, 0));
    let _workers = svc.start(4).unwrap();
    let ids: Vec<_> = (0..20)
        .map(|i| put_response(&store, &format!("r{i}"), ResponseKind::Question))
        .collect();
    for rid in &ids {
        svc.enqueue_answer_job(rid).unwrap();
    }
    let deadline = Instant::now() + Duration::from_secs(5);
    for rid in &ids {
        while assistant_replies(&store, rid).is_empty() {
            assert!(Instant::now() < deadline);
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
    }
}

// Concurrent executions, retries and enqueues on the same response never
// produce a second assistant reply or a second active job.
#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn randomized_interleavings_keep_single_answer() {
    for seed in 0..100u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let dir = tempfile::tempdir().unwrap();
        let store = seeded(dir.path());
        let flaky = Arc::new(Flaky {
            fail_first: rng.gen_range(0..6),
            ..Default::default()
        });
        let max_attempts = rng.gen_range(1..4);
        let svc = service(&store, flaky.clone(), policy(max_attempts, 0));
        let rid = put_response(&store, "r1", ResponseKind::Question);
        let teacher = store.user(&"t1".into()).unwrap();
        let first = svc.enqueue_answer_job(&rid).unwrap();

        let mut tasks = Vec::new();
        for _ in 0..rng.gen_range(2..8) {
            let svc = svc.clone();
            let store = store.clone();
            let rid = rid.clone();
            let teacher = teacher.clone();
            let op = rng.gen_range(0..3);
            let first = first.job_id.clone();
            tasks.push(tokio::spawn(async move {
                match op {
                    0 => {
                        svc.execute_job(&first).await.unwrap();
                    }
                    1 => {
                        if let Ok(job) = svc.retry_job(&rid, &teacher) {
                            svc.execute_job(&job.job_id).await.unwrap();
                        }
                    }
                    _ => {
                        let _ = svc.enqueue_answer_job(&rid);
                        for job in store.jobs_with_status(JobStatus::Pending) {
                            svc.execute_job(&job.job_id).await.unwrap();
                        }
                    }
                }
            }));
        }
        for t in tasks {
            t.await.unwrap();
        }
        // drain whatever is left
        loop {
            let pending = store.jobs_with_status(JobStatus::Pending);
            if pending.is_empty() {
                break;
            }
            for job in pending {
                svc.execute_job(&job.job_id).await.unwrap();
            }
        }

        let jobs = store.jobs_for(&rid);
        let answers = assistant_replies(&store, &rid);
        assert!(answers.len() <= 1, "seed {seed}: {} assistant replies", answers.len());
        assert!(jobs.iter().all(|j| j.status.is_terminal()), "seed {seed}");
        let done = jobs.iter().filter(|j| j.status == JobStatus::Done).count();
        assert_eq!(done > 0, answers.len() == 1, "seed {seed}");
        for job in jobs.iter().filter(|j| j.status == JobStatus::Failed) {
            assert_eq!(job.attempts, max_attempts, "seed {seed}");
        }
    }
}

