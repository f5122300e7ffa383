//! HTTP query service over a loaded index snapshot.
//!
//! Requests read the current snapshot through an `Arc`, so a reload swaps in
//! a new snapshot without disturbing requests already in flight.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use peoplefinder_core::pipeline::BuildConfig;
use peoplefinder_core::store::{load_snapshot_for, Snapshot, SnapshotStats};

use crate::search::{profile, relationships, search, DEFAULT_K};

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    index_dir: Option<PathBuf>,
    config: BuildConfig,
}

impl AppState {
    /// State serving `snapshot`. With an index directory, `POST /api/reload`
    /// reloads from it, accepting only snapshots built with the same config.
    pub fn new(snapshot: Snapshot, index_dir: Option<PathBuf>) -> Self {
        let config = snapshot.manifest.config.clone();
        Self {
            snapshot: RwLock::new(Arc::new(snapshot)),
            index_dir,
            config,
        }
    }

    pub fn current(&self) -> Arc<Snapshot> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn replace(&self, snap: Snapshot) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(snap);
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/search", get(search_handler))
        .route("/api/person/{id}", get(person_handler))
        .route("/api/person/{id}/relationships", get(relationships_handler))
        .route("/api/health", get(health_handler))
        .route("/api/reload", post(reload_handler))
        .with_state(state)
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

async fn search_handler(
    State(state): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    let k = match params.get("k").map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => DEFAULT_K,
        Some(raw) => match raw.parse::<usize>() {
            Ok(k) => k,
            Err(_) => return error(StatusCode::BAD_REQUEST, format!("k must be a positive integer, got {raw:?}")),
        },
    };
    let role = params.get("role").map(String::as_str);
    let snap = state.current();
    match search(&snap, q, k, role) {
        Ok(resp) => Json(resp).into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

async fn person_handler(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match profile(&state.current(), &id) {
        Some(p) => Json(p).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown person {id}")),
    }
}

async fn relationships_handler(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match relationships(&state.current(), &id) {
        Some(r) => Json(r).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown person {id}")),
    }
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    run_tag: String,
    manifest_hash: String,
    config_hash: String,
    created_unix: u64,
    stats: SnapshotStats,
}

fn health(snap: &Snapshot) -> Health {
    Health {
        status: "ok",
        run_tag: snap.manifest.run_tag.clone(),
        manifest_hash: snap.manifest.content_hash.clone(),
        config_hash: snap.manifest.config_hash.clone(),
        created_unix: snap.manifest.created_unix,
        stats: snap.manifest.stats.clone(),
    }
}

async fn health_handler(State(state): State<Arc<AppState>>) -> Response {
    Json(health(&state.current())).into_response()
}

async fn reload_handler(State(state): State<Arc<AppState>>) -> Response {
    let Some(dir) = state.index_dir.clone() else {
        return error(StatusCode::CONFLICT, "service was not started from an index directory");
    };
    let cfg = state.config.clone();
    let loaded = tokio::task::spawn_blocking(move || load_snapshot_for(&dir, &cfg)).await;
    match loaded {
        Ok(Ok(snap)) => {
            let body = health(&snap);
            state.replace(snap);
            Json(body).into_response()
        }
        Ok(Err(e)) => error(StatusCode::CONFLICT, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}
