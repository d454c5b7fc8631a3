use std::sync::{Arc, OnceLock};

use tokio::sync::{mpsc, Semaphore};
use tokio::task::JoinHandle;

use prepline_core::prompt::{PromptBuilder, PromptEnvelope};
use prepline_core::{AnswerJob, AuthorKind, JobId, JobStatus, Reply, ReplyId, ResponseId, SnapshotId, Timestamp, User};
use prepline_store::{Store, StoreError};

use crate::config::RetryPolicy;
use crate::provider::{CompletionProvider, ProviderError};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("automatic answering is disabled")]
    LlmDisabled,
    #[error("response is not a question")]
    NotAQuestion,
    #[error("an answer job for this response is already pending or in flight")]
    DuplicateActiveJob,
    #[error("no failed answer job to retry")]
    NoFailedJob,
    #[error("only teachers may retry answer jobs")]
    Forbidden,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// How a call to [`AnswerService::execute_job`] ended.
#[derive(Debug, Clone, PartialEq)]
pub enum JobOutcome {
    Done { job: AnswerJob, reply: Reply },
    Failed(AnswerJob),
    /// The job was not pending (another worker owns it, or it already ended).
    Skipped(AnswerJob),
}

pub struct AnswerService {
    store: Arc<Store>,
    provider: Arc<dyn CompletionProvider>,
    builder: PromptBuilder,
    policy: RetryPolicy,
    enabled: bool,
    dispatch: OnceLock<mpsc::UnboundedSender<JobId>>,
}

/// Handles of the spawned worker tasks.
pub struct WorkerHandle {
    tasks: Vec<JoinHandle<()>>,
}

impl WorkerHandle {
    pub fn abort(&self) {
        for task in &self.tasks {
            task.abort();
        }
    }
}

impl Drop for WorkerHandle {
    fn drop(&mut self) {
        self.abort();
    }
}

impl AnswerService {
    pub fn new(
        store: Arc<Store>,
        provider: Arc<dyn CompletionProvider>,
        builder: PromptBuilder,
        policy: RetryPolicy,
        enabled: bool,
    ) -> Self {
        Self {
            store,
            provider,
            builder,
            policy,
            enabled,
            dispatch: OnceLock::new(),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn builder(&self) -> &PromptBuilder {
        &self.builder
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    /// Spawns up to `concurrency` parallel job executions fed from an
    /// internal queue, then re-queues work left over from a previous run.
    /// Must be called from within a tokio runtime, at most once.
    pub fn start(self: &Arc<Self>, concurrency: usize) -> Result<WorkerHandle, GatewayError> {
        let (tx, mut rx) = mpsc::unbounded_channel::<JobId>();
        if self.dispatch.set(tx).is_err() {
            panic!("answer workers already started");
        }
        let permits = Arc::new(Semaphore::new(concurrency.max(1)));
        let service = Arc::clone(self);
        let dispatcher = tokio::spawn(async move {
            while let Some(job_id) = rx.recv().await {
                let Ok(permit) = Arc::clone(&permits).acquire_owned().await else { break };
                let service = Arc::clone(&service);
                tokio::spawn(async move {
                    if let Err(err) = service.execute_job(&job_id).await {
                        tracing::error!(job = %job_id, error = %err, "answer job crashed");
                    }
                    drop(permit);
                });
            }
        });
        self.recover()?;
        Ok(WorkerHandle { tasks: vec![dispatcher] })
    }

    /// Resets jobs interrupted mid-flight to pending and queues every
    /// pending job. Returns how many were queued.
    pub fn recover(&self) -> Result<usize, GatewayError> {
        for job in self.store.jobs_with_status(JobStatus::InFlight) {
            match self.store.transition_job(&job.job_id, JobStatus::InFlight, |j| j.status = JobStatus::Pending) {
                Ok(_) | Err(StoreError::Conflict(_)) => {}
                Err(err) => return Err(err.into()),
            }
        }
        let pending = self.store.jobs_with_status(JobStatus::Pending);
        for job in &pending {
            self.queue(&job.job_id);
        }
        Ok(pending.len())
    }

    fn queue(&self, job_id: &JobId) {
        if let Some(tx) = self.dispatch.get() {
            let _ = tx.send(job_id.clone());
        }
    }

    /// Records a pending job for a question and hands it to the workers.
    /// Returns immediately; the answer arrives later as a reply.
    pub fn enqueue_answer_job(&self, response_id: &ResponseId) -> Result<AnswerJob, GatewayError> {
        if !self.enabled {
            return Err(GatewayError::LlmDisabled);
        }
        let response = self.store.response(response_id)?;
        if !response.is_question() {
            return Err(GatewayError::NotAQuestion);
        }
        self.insert_pending(response_id)
    }

    fn insert_pending(&self, response_id: &ResponseId) -> Result<AnswerJob, GatewayError> {
        let job = AnswerJob::pending(JobId::new(Store::new_id("job")), response_id.clone(), Timestamp::now());
        match self.store.insert_job(job.clone()) {
            Ok(()) => {}
            Err(StoreError::Conflict(_)) => return Err(GatewayError::DuplicateActiveJob),
            Err(err) => return Err(err.into()),
        }
        self.queue(&job.job_id);
        Ok(job)
    }

    /// Teacher-triggered retry after the latest job for a response failed.
    pub fn retry_job(&self, response_id: &ResponseId, actor: &User) -> Result<AnswerJob, GatewayError> {
        if !actor.is_teacher() {
            return Err(GatewayError::Forbidden);
        }
        if !self.enabled {
            return Err(GatewayError::LlmDisabled);
        }
        self.store.response(response_id)?;
        match self.store.latest_job_for(response_id) {
            Some(job) if job.status == JobStatus::Failed => self.insert_pending(response_id),
            _ => Err(GatewayError::NoFailedJob),
        }
    }

    /// Runs one job to completion: claim it, then attempt up to
    /// `max_attempts` provider calls with backoff in between.
    pub async fn execute_job(&self, job_id: &JobId) -> Result<JobOutcome, GatewayError> {
        let claimed = match self.store.transition_job(job_id, JobStatus::Pending, |j| j.status = JobStatus::InFlight) {
            Ok(job) => job,
            Err(StoreError::Conflict(_)) => return Ok(JobOutcome::Skipped(self.store.job(job_id)?)),
            Err(err) => return Err(err.into()),
        };
        let response_id = claimed.response_id.clone();

        if let Some(reply) = self.existing_answer(&response_id) {
            let job = self.finish(job_id, JobStatus::Done, None)?;
            return Ok(JobOutcome::Done { job, reply });
        }

        let mut attempt = claimed.attempts;
        let mut last_error = String::from("interrupted");
        while attempt < self.policy.max_attempts {
            attempt += 1;
            self.store.transition_job(job_id, JobStatus::InFlight, |j| j.attempts = attempt)?;
            match self.attempt(&response_id).await {
                Ok((answer, envelope)) => return self.store_answer(job_id, &response_id, answer, envelope),
                Err(err) => {
                    tracing::warn!(job = %job_id, attempt, error = %err, "answer attempt failed");
                    last_error = err;
                    self.store
                        .transition_job(job_id, JobStatus::InFlight, |j| j.last_error = Some(last_error.clone()))?;
                }
            }
            if attempt < self.policy.max_attempts {
                tokio::time::sleep(self.policy.backoff_after(attempt)).await;
            }
        }
        let job = self.finish(job_id, JobStatus::Failed, Some(last_error))?;
        Ok(JobOutcome::Failed(job))
    }

    async fn attempt(&self, response_id: &ResponseId) -> Result<(String, PromptEnvelope), String> {
        let response = self.store.response(response_id).map_err(|e| e.to_string())?;
        let video = self.store.video(&response.video_id).map_err(|e| e.to_string())?;
        let track = self.store.track_for_video(&video);
        let envelope = self
            .builder
            .build(&video, &response, track.as_ref())
            .map_err(|e| format!("prompt: {e}"))?;
        let answer = match tokio::time::timeout(self.policy.timeout, self.provider.complete(&envelope)).await {
            Ok(result) => result,
            Err(_) => Err(ProviderError::Timeout),
        }
        .map_err(|e| e.to_string())?;
        if answer.trim().is_empty() {
            return Err(ProviderError::MalformedProviderResponse("empty answer".into()).to_string());
        }
        Ok((answer, envelope))
    }

    fn store_answer(
        &self,
        job_id: &JobId,
        response_id: &ResponseId,
        answer: String,
        envelope: PromptEnvelope,
    ) -> Result<JobOutcome, GatewayError> {
        let reply_id = Store::new_id("rep");
        let reply = Reply {
            reply_id: ReplyId::new(reply_id.clone()),
            response_id: response_id.clone(),
            author_kind: AuthorKind::Assistant,
            author_id: None,
            body: answer,
            prompt_snapshot: Some(SnapshotId::new(format!("snap_{}", &reply_id[4..]))),
            model_id: Some(envelope.model_id.clone()),
            created_at: Timestamp::now(),
        };
        let reply = match self.store.put_assistant_reply(reply.clone(), envelope) {
            Ok(()) => reply,
            // someone else answered in the meantime; keep theirs
            Err(StoreError::IntegrityViolation(_)) => match self.existing_answer(response_id) {
                Some(existing) => existing,
                None => return Err(StoreError::IntegrityViolation("assistant reply vanished".into()).into()),
            },
            Err(err) => return Err(err.into()),
        };
        let job = self.finish(job_id, JobStatus::Done, None)?;
        Ok(JobOutcome::Done { job, reply })
    }

    fn existing_answer(&self, response_id: &ResponseId) -> Option<Reply> {
        self.store
            .replies_for(response_id)
            .into_iter()
            .find(|r| r.author_kind == AuthorKind::Assistant)
    }

    fn finish(&self, job_id: &JobId, status: JobStatus, error: Option<String>) -> Result<AnswerJob, GatewayError> {
        let max = self.policy.max_attempts;
        Ok(self.store.transition_job(job_id, JobStatus::InFlight, |j| {
            j.status = status;
            j.finished_at = Some(Timestamp::now());
            if status == JobStatus::Failed {
                j.attempts = max;
                j.last_error = error;
            }
        })?)
    }
}
