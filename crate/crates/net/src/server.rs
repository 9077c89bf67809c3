//! Corpus-backed oracle server.
//!
//! Endpoints:
//! - `POST /session` with `{"v":1,"seed":<u64>}` creates a seeded session.
//! - `GET /query?tag=<t>&session=<s>` answers from that session's oracle.
//! - `GET /health` reports corpus statistics.
//!
//! Sessions are serialized (one in-flight query each) and rate limited per
//! session with a fixed window: within any window at most `max_calls`
//! queries are granted; the rest get 429 with `retry_after_ms`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tagseek_core::env::{Oracle, OracleSession};
use tagseek_core::Corpus;

use crate::wire::{WireError, WireHealth, WireReply, WireSessionReply, WireSessionRequest, WIRE_VERSION};
use crate::NetError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLimit {
    pub max_calls: u32,
    pub window: Duration,
}

struct SessionSlot {
    oracle: OracleSession,
    window_start: Instant,
    granted: u32,
}

struct AppState {
    corpus: Arc<Corpus>,
    limit: Option<RateLimit>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionSlot>>>>,
    next_session: AtomicU64,
}

fn error_body(status: StatusCode, message: impl Into<String>) -> Response {
    let body = WireError { v: WIRE_VERSION, error: message.into(), retry_after_ms: None };
    (status, Json(body)).into_response()
}

async fn create_session(State(state): State<Arc<AppState>>, body: String) -> Response {
    let request: WireSessionRequest = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return error_body(StatusCode::BAD_REQUEST, format!("bad session request: {e}")),
    };
    if request.v != WIRE_VERSION {
        return error_body(
            StatusCode::BAD_REQUEST,
            format!("unsupported wire version {}", request.v),
        );
    }
    let id = format!("s-{}", state.next_session.fetch_add(1, Ordering::Relaxed));
    let slot = SessionSlot {
        oracle: OracleSession::new(Arc::clone(&state.corpus), request.seed),
        window_start: Instant::now(),
        granted: 0,
    };
    state.sessions.write().expect("lock").insert(id.clone(), Arc::new(Mutex::new(slot)));
    Json(WireSessionReply { v: WIRE_VERSION, session_id: id }).into_response()
}

async fn query(
    State(state): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let Some(tag) = params.get("tag") else {
        return error_body(StatusCode::BAD_REQUEST, "missing parameter: tag");
    };
    let Some(session_id) = params.get("session") else {
        return error_body(StatusCode::BAD_REQUEST, "missing parameter: session");
    };
    let slot = {
        let sessions = state.sessions.read().expect("lock");
        match sessions.get(session_id) {
            Some(slot) => Arc::clone(slot),
            None => {
                return error_body(
                    StatusCode::NOT_FOUND,
                    format!("unknown session: {session_id}"),
                )
            }
        }
    };
    // One in-flight query per session; the rate-limit check-and-increment
    // shares the lock, so concurrent callers cannot overdraw the window.
    let mut slot = slot.lock().expect("lock");
    if let Some(limit) = state.limit {
        let elapsed = slot.window_start.elapsed();
        if elapsed >= limit.window {
            slot.window_start = Instant::now();
            slot.granted = 0;
        } else if slot.granted >= limit.max_calls {
            let retry_after = limit.window.saturating_sub(elapsed);
            let body = WireError {
                v: WIRE_VERSION,
                error: "rate limited".into(),
                retry_after_ms: Some(retry_after.as_millis().max(1) as u64),
            };
            return (StatusCode::TOO_MANY_REQUESTS, Json(body)).into_response();
        }
        slot.granted += 1;
    }
    match slot.oracle.query(tag) {
        Ok(outcome) => Json(WireReply::from_outcome(&outcome)).into_response(),
        Err(e) => error_body(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Json<WireHealth> {
    Json(WireHealth {
        v: WIRE_VERSION,
        items: state.corpus.items().len(),
        tags: state.corpus.tag_count(),
        feature_dim: state.corpus.feature_dim(),
    })
}

fn router(corpus: Arc<Corpus>, limit: Option<RateLimit>) -> Router {
    let state = Arc::new(AppState {
        corpus,
        limit,
        sessions: RwLock::new(HashMap::new()),
        next_session: AtomicU64::new(1),
    });
    Router::new()
        .route("/session", post(create_session))
        .route("/query", get(query))
        .route("/health", get(health))
        .with_state(state)
}

/// A server running on its own thread; shuts down gracefully when dropped
/// (or via [`OracleServer::shutdown`]).
pub struct OracleServer {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl OracleServer {
    /// Binds (an ephemeral port is fine) and serves in the background.
    pub fn spawn(
        corpus: Arc<Corpus>,
        bind: SocketAddr,
        limit: Option<RateLimit>,
    ) -> Result<Self, NetError> {
        let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let (ready_tx, ready_rx) = std::sync::mpsc::channel::<Result<SocketAddr, String>>();
        let app = router(corpus, limit);
        let thread = std::thread::spawn(move || {
            let runtime = match tokio::runtime::Builder::new_current_thread().enable_all().build()
            {
                Ok(rt) => rt,
                Err(e) => {
                    let _ = ready_tx.send(Err(e.to_string()));
                    return;
                }
            };
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::bind(bind).await {
                    Ok(l) => l,
                    Err(e) => {
                        let _ = ready_tx.send(Err(e.to_string()));
                        return;
                    }
                };
                let addr = listener.local_addr().expect("bound socket");
                let _ = ready_tx.send(Ok(addr));
                let shutdown = async move {
                    let _ = stop_rx.await;
                };
                if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
                    eprintln!("oracle server error: {e}");
                }
            });
        });
        match ready_rx.recv() {
            Ok(Ok(addr)) => Ok(Self { addr, stop: Some(stop_tx), thread: Some(thread) }),
            Ok(Err(e)) => Err(NetError::Bind(e)),
            Err(_) => Err(NetError::Bind("server thread died before binding".into())),
        }
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}

impl Drop for OracleServer {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Serves until ctrl-c (the CLI `serve` path).
pub fn serve_blocking(
    corpus: Arc<Corpus>,
    bind: SocketAddr,
    limit: Option<RateLimit>,
) -> Result<(), NetError> {
    let app = router(corpus, limit);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| NetError::Bind(e.to_string()))?;
    runtime.block_on(async move {
        let listener =
            tokio::net::TcpListener::bind(bind).await.map_err(|e| NetError::Bind(e.to_string()))?;
        let addr = listener.local_addr().map_err(|e| NetError::Bind(e.to_string()))?;
        eprintln!("oracle server listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            eprintln!("shutting down");
        };
        axum::serve(listener, app)
            .with_graceful_shutdown(shutdown)
            .await
            .map_err(|e| NetError::Bind(e.to_string()))
    })
}
