use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use prepline_core::subtitle::SubtitleError;
use prepline_core::DomainError;
use prepline_gateway::GatewayError;
use prepline_store::StoreError;

/// An error as reported to API clients: `{"error": code, "message": ...}`,
/// plus `line` for subtitle parse errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub line: Option<usize>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            line: None,
        }
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or unknown bearer token")
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.code, self.status.as_u16(), self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(line) = self.line {
            body["line"] = json!(line);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<DomainError> for ApiError {
    fn from(err: DomainError) -> Self {
        Self::invalid(err.to_string())
    }
}

impl From<SubtitleError> for ApiError {
    fn from(err: SubtitleError) -> Self {
        Self {
            line: err.line(),
            ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "subtitle_parse", err.to_string())
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        match err {
            StoreError::NotFound { .. } => Self::new(StatusCode::NOT_FOUND, "not_found", err.to_string()),
            StoreError::Conflict(msg) => Self::conflict(msg),
            StoreError::Invalid(inner) => inner.into(),
            StoreError::IntegrityViolation(msg) => Self::invalid(msg),
            StoreError::UnknownCollection(name) => Self::invalid(format!("unknown collection `{name}`")),
            other => {
                tracing::error!(error = %other, "storage failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", other.to_string())
            }
        }
    }
}

impl From<GatewayError> for ApiError {
    fn from(err: GatewayError) -> Self {
        match err {
            GatewayError::Forbidden => Self::forbidden(err.to_string()),
            GatewayError::LlmDisabled => Self::new(StatusCode::CONFLICT, "llm_disabled", err.to_string()),
            GatewayError::NoFailedJob => Self::new(StatusCode::CONFLICT, "no_failed_job", err.to_string()),
            GatewayError::DuplicateActiveJob => Self::new(StatusCode::CONFLICT, "job_active", err.to_string()),
            GatewayError::NotAQuestion => Self::new(StatusCode::CONFLICT, "not_a_question", err.to_string()),
            GatewayError::Store(inner) => inner.into(),
        }
    }
}
