//! HTTP front-end: a thin axum wrapper around the classification pipeline.
//!
//! Routes:
//!
//! * `POST /classify` — body is JSON carrying either an inline fixture
//!   (`{"fixture": { … }}`) or a hash to fetch (`{"tx_hash": "0x…",
//!   "rpc": "http://…"}`; `rpc` may be omitted when the server was started
//!   with a default endpoint). Success returns the classification response
//!   document; failures return `{"error", "phase"}` with a status matching
//!   the failed phase. Bodies over the configured limit get 413.
//! * `GET /health` — liveness plus the identity of the loaded model.
//!
//! All state is immutable after startup and shared behind an [`Arc`], so any
//! number of concurrent requests see the same model and account database.

use std::sync::Arc;

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::value::RawValue;

use pmascan_core::features::AccountDb;
use pmascan_core::gnn::ModelParams;
use pmascan_core::pipeline::{classify_fixture, classify_rpc, PipelineError};
use pmascan_core::txparse::TxHash;

/// Everything a request handler needs, fixed at startup.
pub struct AppState {
    /// Trained model weights.
    pub params: ModelParams,
    /// Account database for node typing.
    pub db: AccountDb,
    /// Endpoint used for `tx_hash` requests that do not carry their own.
    pub default_rpc: Option<String>,
    /// Where the checkpoint was loaded from, echoed by `/health`.
    pub model_path: String,
}

/// `POST /classify` request body. Exactly one of `fixture` / `tx_hash` must
/// be present. The fixture is kept as raw JSON so the pipeline parses the
/// exact bytes the client sent (error offsets refer to the client's text).
#[derive(Deserialize)]
struct ClassifyRequest {
    fixture: Option<Box<RawValue>>,
    tx_hash: Option<String>,
    rpc: Option<String>,
}

/// Builds the application router. Exposed separately from [`serve`] so tests
/// can bind an ephemeral port and drive the exact production routes.
pub fn build_router(state: Arc<AppState>, max_body_bytes: usize) -> Router {
    Router::new()
        .route("/classify", post(classify_handler))
        .route("/health", get(health_handler))
        .layer(DefaultBodyLimit::max(max_body_bytes))
        .with_state(state)
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(addr: &str, state: AppState, max_body_bytes: usize) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(addr = %listener.local_addr()?, model = %state.model_path, "serving");
    axum::serve(listener, build_router(Arc::new(state), max_body_bytes))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .context("serving HTTP")
}

/// Error document: `{"error": …, "phase": …}`.
fn error_response(status: StatusCode, phase: &str, message: &str) -> Response {
    let body = serde_json::json!({ "error": message, "phase": phase });
    (status, Json(body)).into_response()
}

/// Maps a pipeline failure to an HTTP status: client-side input problems are
/// 4xx (bad fixture text 400, a decodable but ill-formed graph 422), upstream
/// RPC trouble is 502, and a model/feature mismatch is a server-side 500.
fn pipeline_status(err: &PipelineError) -> StatusCode {
    match err {
        PipelineError::Parse(_) => StatusCode::BAD_REQUEST,
        PipelineError::Build(_) => StatusCode::UNPROCESSABLE_ENTITY,
        PipelineError::Fetch(_) => StatusCode::BAD_GATEWAY,
        PipelineError::Classify(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

async fn classify_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let request: ClassifyRequest = match serde_json::from_slice(&body) {
        Ok(req) => req,
        Err(e) => {
            return error_response(
                StatusCode::BAD_REQUEST,
                "parse",
                &format!("malformed request body: {e}"),
            )
        }
    };

    let result = match (&request.fixture, &request.tx_hash) {
        (Some(raw), None) => classify_fixture(raw.get().as_bytes(), &state.params, &state.db),
        (None, Some(hash)) => {
            let tx_hash: TxHash = match hash.parse() {
                Ok(h) => h,
                Err(e) => {
                    return error_response(
                        StatusCode::BAD_REQUEST,
                        "parse",
                        &format!("invalid transaction hash: {e}"),
                    )
                }
            };
            let endpoint = request
                .rpc
                .as_deref()
                .or(state.default_rpc.as_deref());
            let Some(endpoint) = endpoint else {
                return error_response(
                    StatusCode::BAD_REQUEST,
                    "parse",
                    "tx_hash requests need \"rpc\" (server has no default endpoint)",
                );
            };
            classify_rpc(tx_hash, endpoint, &state.params, &state.db).await
        }
        (Some(_), Some(_)) => {
            return error_response(
                StatusCode::BAD_REQUEST,
                "parse",
                "request must carry exactly one of \"fixture\" or \"tx_hash\"",
            )
        }
        (None, None) => {
            return error_response(
                StatusCode::BAD_REQUEST,
                "parse",
                "request must carry \"fixture\" or \"tx_hash\"",
            )
        }
    };

    match result {
        Ok(response) => {
            tracing::debug!(tx = %response.tx_hash, prediction = response.prediction, "classified");
            (StatusCode::OK, Json(response)).into_response()
        }
        Err(e) => {
            tracing::debug!(phase = e.phase(), error = %e, "classification failed");
            error_response(pipeline_status(&e), e.phase(), &e.to_string())
        }
    }
}

async fn health_handler(State(state): State<Arc<AppState>>) -> Response {
    let config = &state.params.config;
    let body = serde_json::json!({
        "status": "ok",
        "model": {
            "path": state.model_path,
            "arch": config.arch.as_str(),
            "num_layers": config.num_layers,
            "in_dim": config.in_dim,
            "hidden_dim": config.hidden_dim,
            "out_dim": config.out_dim,
            "direction": config.direction,
            "seed": state.params.seed,
            "param_count": state.params.param_count(),
        },
    });
    (StatusCode::OK, Json(body)).into_response()
}
