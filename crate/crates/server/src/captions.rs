//! Optional adapter for a remote caption server.
//!
//! Requests `GET {base_url}?v={external_source_id}&lang={language}&fmt=vtt`
//! and returns the raw document for the normal ingestion path.

use std::time::Duration;

use reqwest::{StatusCode, Url};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaptionError {
    RemoteUnavailable(String),
    NoTrackForLanguage { source_id: String, language: String },
}

impl std::fmt::Display for CaptionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CaptionError::RemoteUnavailable(why) => write!(f, "caption server unavailable: {why}"),
            CaptionError::NoTrackForLanguage { source_id, language } => {
                write!(f, "no `{language}` captions for `{source_id}`")
            }
        }
    }
}

impl std::error::Error for CaptionError {}

#[derive(Debug, Clone)]
pub struct CaptionClient {
    base_url: String,
    client: reqwest::Client,
}

impl CaptionClient {
    pub fn new(base_url: impl Into<String>, timeout: Duration) -> Self {
        Self {
            base_url: base_url.into(),
            client: reqwest::Client::builder()
                .timeout(timeout)
                .build()
                .expect("http client with default settings"),
        }
    }

    pub async fn fetch_remote_track(&self, external_source_id: &str, language_tag: &str) -> Result<String, CaptionError> {
        let url = Url::parse_with_params(
            &self.base_url,
            [("v", external_source_id), ("lang", language_tag), ("fmt", "vtt")],
        )
        .map_err(|e| CaptionError::RemoteUnavailable(format!("bad base url: {e}")))?;
        let response = self
            .client
            .get(url)
            .send()
            .await
            .map_err(|e| CaptionError::RemoteUnavailable(e.to_string()))?;
        let missing = || CaptionError::NoTrackForLanguage {
            source_id: external_source_id.to_owned(),
            language: language_tag.to_owned(),
        };
        match response.status() {
            StatusCode::NOT_FOUND => return Err(missing()),
            status if !status.is_success() => {
                return Err(CaptionError::RemoteUnavailable(format!("HTTP {}", status.as_u16())))
            }
            _ => {}
        }
        let body = response
            .text()
            .await
            .map_err(|e| CaptionError::RemoteUnavailable(e.to_string()))?;
        // the caption server answers unknown languages with an empty 200
        if body.trim().is_empty() {
            return Err(missing());
        }
        Ok(body)
    }
}
