use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::{Deserialize, Serialize};

use previz_core::behaviors::Violation;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>, field_path: Option<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                field_path,
            },
        }
    }

    pub fn validation(field_path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = field_path.into();
        Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "validation",
            message,
            (!path.is_empty()).then_some(path),
        )
    }

    /// First violation becomes the field path; all of them go into the message.
    pub fn violations(prefix: &str, violations: &[Violation]) -> Self {
        let message = violations
            .iter()
            .map(|v| format!("{}: {}", v.path, v.message))
            .collect::<Vec<_>>()
            .join("; ");
        let path = violations.first().map(|v| join_path(prefix, &v.path)).unwrap_or_default();
        Self::validation(path, message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"), None)
    }

    pub fn conflict(expected: u64, found: u64) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "conflict",
            format!("stale revision {found}; project is at revision {expected}"),
            Some("revision".into()),
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message, None)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, None)
    }
}

pub(crate) fn join_path(prefix: &str, path: &str) -> String {
    match (prefix.is_empty(), path.is_empty()) {
        (true, _) => path.to_string(),
        (false, true) => prefix.to_string(),
        (false, false) if path.starts_with('[') => format!("{prefix}{path}"),
        (false, false) => format!("{prefix}.{path}"),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::to_vec(&self.body).expect("error bodies serialize");
        (self.status, [("content-type", "application/json")], body).into_response()
    }
}

/// Parses a JSON body, reporting the failing field as a path.
pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ApiError::validation(path, e.into_inner().to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Deserialize)]
    struct Body {
        #[allow(dead_code)]
        inner: Inner,
    }

    #[derive(Debug, Deserialize)]
    struct Inner {
        #[allow(dead_code)]
        values: Vec<u32>,
    }

    #[test]
    fn parse_errors_carry_field_paths() {
        let err = parse_json::<Body>(br#"{"inner": {"values": [1, "x"]}}"#).unwrap_err();
        assert_eq!(err.status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(err.body.field_path.as_deref(), Some("inner.values[1]"));
        let err = parse_json::<Body>(b"not json").unwrap_err();
        assert_eq!(err.body.field_path, None);
    }

    #[test]
    fn violation_paths_are_prefixed() {
        let err = ApiError::violations("storyboard", &[Violation::new("behaviors[1].duration_s", "must be positive")]);
        assert_eq!(err.body.field_path.as_deref(), Some("storyboard.behaviors[1].duration_s"));
        assert_eq!(join_path("cameras", "[x]"), "cameras[x]");
        assert_eq!(join_path("", "d"), "d");
    }
}
