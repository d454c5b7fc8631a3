//! HTTP service and offline tooling: video registration, subtitle
//! ingestion, responses with asynchronous assistant answers, reply threads,
//! the teacher question view, behavior events and analytics.

pub mod api;
pub mod captions;
pub mod cli;
pub mod config;
pub mod error;
pub mod ops;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use prepline_core::prompt::PromptBuilder;
use prepline_gateway::{provider_from_config, AnswerService, CompletionProvider, WorkerHandle};
use prepline_store::Store;

pub use api::{router, AppState};
pub use config::ApiConfig;
pub use error::ApiError;

/// Opens the store, upserts the roster and wires the answer service.
/// `provider` overrides the configured completion provider.
pub fn build_state(config: &ApiConfig, provider: Option<Arc<dyn CompletionProvider>>) -> anyhow::Result<AppState> {
    config.validate()?;
    let store = Arc::new(Store::open(&config.data_dir)?);
    let mut tokens = HashMap::new();
    for entry in &config.users {
        store.put_user(entry.user())?;
        tokens.insert(entry.token.clone(), entry.user_id.clone());
    }
    let provider = match provider {
        Some(p) => p,
        None => Arc::from(provider_from_config(&config.llm.provider).map_err(anyhow::Error::msg)?),
    };
    let builder = PromptBuilder::new(config.prompt.template.clone(), config.prompt_settings())?;
    let answers = Arc::new(AnswerService::new(
        store.clone(),
        provider,
        builder,
        config.llm.provider.retry_policy(),
        config.llm.enabled,
    ));
    Ok(AppState {
        store,
        answers,
        tokens: Arc::new(tokens),
        limits: config.limits(),
    })
}

/// A server running on a background task.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub state: AppState,
    _workers: Option<WorkerHandle>,
    task: tokio::task::JoinHandle<()>,
}

impl RunningServer {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn shutdown(self) {
        self.task.abort();
    }
}

/// Binds `listen` (port 0 picks a free port), starts answer workers when
/// the LLM is enabled and serves in the background.
pub async fn start(state: AppState, listen: SocketAddr, workers: usize) -> anyhow::Result<RunningServer> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    let addr = listener.local_addr()?;
    let handle = if state.answers.is_enabled() {
        Some(state.answers.start(workers)?)
    } else {
        None
    };
    let app = router(state.clone());
    let task = tokio::spawn(async move {
        if let Err(err) = axum::serve(listener, app).await {
            tracing::error!(error = %err, "server stopped");
        }
    });
    Ok(RunningServer {
        addr,
        state,
        _workers: handle,
        task,
    })
}

/// Runs the service until Ctrl-C.
pub async fn serve(config: ApiConfig) -> anyhow::Result<()> {
    let state = build_state(&config, None)?;
    let server = start(state, config.listen, config.llm.workers).await?;
    tracing::info!(addr = %server.addr, llm = config.llm.enabled, "listening");
    tokio::signal::ctrl_c().await?;
    tracing::info!("shutting down");
    server.shutdown();
    Ok(())
}
