//! HTTP service for the pre-assessment engine.
//!
//! Every route lives under `/v1`. The knowledge graph is loaded once and shared read-only;
//! sessions live in a [`SessionLog`] behind a mutex, which serializes all session writes.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::Router;
use preassess_core::graph::KnowledgeGraph;
use preassess_core::store::{read_graph_file, SessionLog, StoreError};
use preassess_core::ErrorCode;
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub mod error;
mod routes;
pub mod views;

pub use error::ApiError;

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Clone)]
pub struct AppState {
    pub graph: Arc<KnowledgeGraph>,
    log: Arc<Mutex<SessionLog>>,
}

impl AppState {
    pub fn new(graph: KnowledgeGraph, log: SessionLog) -> Self {
        AppState { graph: Arc::new(graph), log: Arc::new(Mutex::new(log)) }
    }

    fn log(&self) -> MutexGuard<'_, SessionLog> {
        // A panic while holding the lock cannot leave the log half-applied: appends update
        // memory only after the write succeeded.
        self.log.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// The `/v1` API, plus static console assets when `static_dir` is given.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new()
        .nest("/v1", routes::routes())
        .fallback(|| async { ApiError::new("NOT_FOUND", "no such route") })
        .with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: String,
    pub graph: PathBuf,
    /// Session log; `None` keeps sessions in memory only.
    pub log: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("invalid graph: {0}")]
    InvalidGraph(StoreError),
    #[error("cannot open session log: {0}")]
    Log(StoreError),
    #[error("cannot bind {addr}: {reason}")]
    BindFailure { addr: String, reason: String },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

impl ErrorCode for ServeError {
    fn code(&self) -> &'static str {
        match self {
            ServeError::InvalidGraph(_) => "INVALID_GRAPH",
            ServeError::Log(e) => e.code(),
            ServeError::BindFailure { .. } => "BIND_FAILURE",
            ServeError::Io(_) => "IO_ERROR",
        }
    }
}

/// A bound, not yet running server.
pub struct Server {
    listener: TcpListener,
    app: Router,
}

impl Server {
    pub async fn bind(cfg: &ServeConfig) -> Result<Self, ServeError> {
        let graph = read_graph_file(&cfg.graph).map_err(ServeError::InvalidGraph)?;
        let log = match &cfg.log {
            Some(path) => SessionLog::open(path).map_err(ServeError::Log)?,
            None => SessionLog::in_memory(),
        };
        log::info!("loaded {} sessions", log.sessions().len());
        let listener = TcpListener::bind(&cfg.addr)
            .await
            .map_err(|e| ServeError::BindFailure { addr: cfg.addr.clone(), reason: e.to_string() })?;
        Ok(Server { listener, app: router(AppState::new(graph, log), cfg.static_dir.clone()) })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until `shutdown` resolves, then drains in-flight requests.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        axum::serve(self.listener, self.app).with_graceful_shutdown(shutdown).await?;
        Ok(())
    }
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    log::info!("shutting down");
}
