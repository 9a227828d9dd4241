//! HTTP transport for labeling sessions.

use std::sync::Arc;

use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pairclust::clustering::PairKey;
use serde::{Deserialize, Serialize};

use crate::session::{LabeledPair, SessionConfig, SessionManager, SessionSnapshot, SessionState};
use crate::HarnessError;

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Batch {
    pub pairs: Vec<PairKey>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Submitted {
    pub pending_remaining: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for HarnessError {
    fn into_response(self) -> Response {
        let status = match &self {
            HarnessError::NotFound(_) => StatusCode::NOT_FOUND,
            HarnessError::Protocol(_) => StatusCode::CONFLICT,
            HarnessError::Input(_) | HarnessError::Core(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

/// `Json` whose rejections use the same error body as everything else.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    Json<T>: FromRequest<S, Rejection = axum::extract::rejection::JsonRejection>,
    S: Send + Sync,
{
    type Rejection = HarnessError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|e| HarnessError::Input(e.body_text()))
    }
}

type Shared = Arc<SessionManager>;

pub fn router(manager: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/batch", get(batch))
        .route("/sessions/{id}/labels", post(labels))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .with_state(manager)
}

async fn create(
    State(m): State<Shared>,
    Body(config): Body<SessionConfig>,
) -> Result<(StatusCode, Json<Created>), HarnessError> {
    let id = m.create(config)?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn batch(State(m): State<Shared>, Path(id): Path<String>) -> Result<Json<Batch>, HarnessError> {
    m.with(&id, |s| {
        Ok(Json(Batch {
            pairs: s.next_batch().to_vec(),
        }))
    })
}

async fn labels(
    State(m): State<Shared>,
    Path(id): Path<String>,
    Body(body): Body<LabeledPair>,
) -> Result<Json<Submitted>, HarnessError> {
    let pair = PairKey::new(body.u, body.v)?;
    m.with(&id, |s| {
        Ok(Json(Submitted {
            pending_remaining: s.submit(pair, body.label)?,
        }))
    })
}

async fn state(State(m): State<Shared>, Path(id): Path<String>) -> Result<Json<SessionState>, HarnessError> {
    m.with(&id, |s| Ok(Json(s.state())))
}

async fn snapshot(
    State(m): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<SessionSnapshot>, HarnessError> {
    m.with(&id, |s| Ok(Json(s.snapshot())))
}

pub async fn serve(addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(SessionManager::new()))).await?;
    Ok(())
}
