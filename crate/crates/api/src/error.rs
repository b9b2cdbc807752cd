use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use preassess_core::ErrorCode;
use serde::{Deserialize, Serialize};

/// Error payload returned by every endpoint: `{"status": 409, "code": "SESSION_COMPLETE", "message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ApiError { status: status_for(code).as_u16(), code: code.to_string(), message: message.into() }
    }

    pub fn invalid_request(message: impl Into<String>) -> Self {
        ApiError::new("INVALID_REQUEST", message)
    }

    pub fn session_not_found(id: &str) -> Self {
        ApiError::new("SESSION_NOT_FOUND", format!("no session {id}"))
    }

    pub fn from_domain<E: ErrorCode + std::fmt::Display>(e: &E) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

/// HTTP status for a module error code.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "INVALID_REQUEST" | "PARSE_ERROR" | "UNKNOWN_LABEL" | "DUPLICATE_ROW" | "INVALID_PERFORMANCE_STRING" => {
            StatusCode::BAD_REQUEST
        }
        "UNKNOWN_NODE" | "UNKNOWN_LEAF" | "SESSION_NOT_FOUND" | "SESSION_NOT_COMPLETE" | "NOT_FOUND" => StatusCode::NOT_FOUND,
        "SESSION_COMPLETE" | "ALREADY_RECORDED_DIFFERENTLY" | "SEQUENCE_GAP" => StatusCode::CONFLICT,
        "STORAGE_FAILURE" | "CORRUPT_LOG" | "IO_ERROR" | "INTERNAL" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            log::error!("{}: {}", self.code, self.message);
        }
        (status, Json(self)).into_response()
    }
}

macro_rules! from_domain {
    ($($t:ty),*) => {
        $(impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                ApiError::from_domain(&e)
            }
        })*
    };
}

from_domain!(
    preassess_core::graph::GraphError,
    preassess_core::probability::ProbabilityError,
    preassess_core::infotheory::InfoError,
    preassess_core::dtree::DtreeError,
    preassess_core::session::SessionError,
    preassess_core::store::StoreError
);
