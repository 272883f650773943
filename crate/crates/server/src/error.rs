use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Request};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use hapticmap_core::api::ErrorBody;
use hapticmap_core::ingest::IngestError;
use serde::de::DeserializeOwned;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Conflict(String),
    Unprocessable(String),
    BadGateway(String),
    Internal(String),
}

impl ApiError {
    fn parts(&self) -> (StatusCode, &'static str, &str) {
        match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, "not_found", m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, "conflict", m),
            ApiError::Unprocessable(m) => (StatusCode::UNPROCESSABLE_ENTITY, "unprocessable", m),
            ApiError::BadGateway(m) => (StatusCode::BAD_GATEWAY, "upstream_failure", m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m),
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (status, _, message) = self.parts();
        write!(f, "{}: {message}", status.as_u16())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error, message) = self.parts();
        let body = ErrorBody {
            error: error.to_string(),
            message: message.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidQuery(_) | IngestError::GeocodeFailure(_) => ApiError::Unprocessable(e.to_string()),
            IngestError::NetworkFailure(_) | IngestError::OverpassRateLimited { .. } | IngestError::MalformedResponse(_) => {
                ApiError::BadGateway(e.to_string())
            }
            IngestError::Io(_) => ApiError::Internal(e.to_string()),
        }
    }
}

/// `Json` whose every rejection (syntax, schema, content type) is a 422.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rejection) => Err(ApiError::Unprocessable(rejection_message(rejection))),
        }
    }
}

fn rejection_message(r: JsonRejection) -> String {
    r.body_text()
}
