//! HTTP routes.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use mocomp_core::io::{load_motion, load_session, LoadOptions, MotionFormat};
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

use crate::api::{self, AlignRequest, DiffRequest, LimitsQuery, MetricsQuery, SeriesSpec, TraceQuery};
use crate::error::{ApiError, ErrorCode};
use crate::store::Store;

pub const FORMAT_VERSION_HEADER: &str = "x-mocomp-format-version";

#[derive(Debug, Clone)]
pub struct Config {
    pub addr: SocketAddr,
    pub data_dir: Option<PathBuf>,
    /// Largest accepted request body, bytes.
    pub max_upload: usize,
    /// Seed for embed requests that do not give one.
    pub default_seed: u64,
    /// Static web UI bundle served at `/`.
    pub ui_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: None,
            max_upload: 64 * 1024 * 1024,
            default_seed: 0,
            ui_dir: None,
        }
    }
}

pub struct AppState {
    pub store: Store,
    pub config: Config,
}

type Shared = Arc<AppState>;

impl AppState {
    pub fn new(config: Config) -> std::io::Result<Self> {
        let store = match &config.data_dir {
            Some(dir) => Store::open(dir)?,
            None => Store::in_memory(),
        };
        Ok(AppState { store, config })
    }
}

fn json(status: StatusCode, body: Vec<u8>) -> Response {
    let mut res = (status, body).into_response();
    let h = res.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    h.insert(FORMAT_VERSION_HEADER, HeaderValue::from_static("1"));
    res
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json(status, self.body())
    }
}

type Reply = Result<Response, ApiError>;

async fn read_body(state: &AppState, body: Body) -> Result<Bytes, ApiError> {
    to_bytes(body, state.config.max_upload).await.map_err(|_| {
        ApiError::new(
            ErrorCode::PayloadTooLarge,
            format!("request body exceeds {} bytes", state.config.max_upload),
        )
    })
}

/// Runs `f` off the async workers and caches its body under `key`.
async fn computed<F>(state: Shared, key: String, f: F) -> Reply
where
    F: FnOnce(&Store) -> Result<Vec<u8>, ApiError> + Send + 'static,
{
    let body = tokio::task::spawn_blocking(move || state.store.cached(&key, || f(&state.store)))
        .await
        .map_err(|_| ApiError::new(ErrorCode::Internal, "computation failed"))??;
    Ok(json(StatusCode::OK, body.to_vec()))
}

async fn upload_motion(State(state): State<Shared>, body: Body) -> Reply {
    let bytes = read_body(&state, body).await?;
    let loaded = load_motion(&bytes, MotionFormat::Json, &LoadOptions::default())?;
    let (id, created) = state.store.insert_motion(loaded)?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok(json(status, api::created_body(&id)))
}

async fn list_motions(State(state): State<Shared>) -> Reply {
    let motions = state.store.motions();
    Ok(json(StatusCode::OK, api::list_body(motions.iter().map(|m| m.as_ref()))))
}

async fn get_motion(State(state): State<Shared>, Path(id): Path<String>) -> Reply {
    Ok(json(StatusCode::OK, api::summary_body(state.store.motion(&id)?.as_ref())))
}

async fn delete_motion(State(state): State<Shared>, Path(id): Path<String>) -> Reply {
    state.store.delete_motion(&id)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn motion_file(State(state): State<Shared>, Path(id): Path<String>) -> Reply {
    let m = state.store.motion(&id)?;
    Ok(json(StatusCode::OK, mocomp_core::io::save_motion(&m)))
}

fn query_key(path: &str, query: &Option<String>) -> String {
    format!("GET {path}?{}", query.as_deref().unwrap_or(""))
}

async fn motion_trace(State(state): State<Shared>, Path(id): Path<String>, RawQuery(q): RawQuery) -> Reply {
    let query: TraceQuery = api::parse_query(q.as_deref())?;
    let m = state.store.motion(&id)?;
    let key = query_key(&format!("/api/motions/{id}/trace"), &q);
    computed(state, key, move |_| api::trace_body(&m, &query)).await
}

async fn motion_series(State(state): State<Shared>, Path(id): Path<String>, RawQuery(q): RawQuery) -> Reply {
    let spec: SeriesSpec = api::parse_query(q.as_deref())?;
    let m = state.store.motion(&id)?;
    let key = query_key(&format!("/api/motions/{id}/series"), &q);
    computed(state, key, move |_| api::series_body(&m, &spec)).await
}

async fn motion_limits(State(state): State<Shared>, Path(id): Path<String>, RawQuery(q): RawQuery) -> Reply {
    let query: LimitsQuery = api::parse_query(q.as_deref())?;
    let m = state.store.motion(&id)?;
    let key = query_key(&format!("/api/motions/{id}/limits"), &q);
    computed(state, key, move |_| api::limits_body(&m, &query)).await
}

async fn motion_metrics(State(state): State<Shared>, Path(id): Path<String>, RawQuery(q): RawQuery) -> Reply {
    let query: MetricsQuery = api::parse_query(q.as_deref())?;
    let m = state.store.motion(&id)?;
    let key = query_key(&format!("/api/motions/{id}/metrics"), &q);
    computed(state, key, move |_| api::metrics_body(&m, &query)).await
}

fn body_key(path: &str, bytes: &[u8]) -> String {
    format!("POST {path}\n{}", String::from_utf8_lossy(bytes))
}

async fn align(State(state): State<Shared>, body: Body) -> Reply {
    let bytes = read_body(&state, body).await?;
    let req: AlignRequest = api::parse_json(&bytes)?;
    let a = state.store.motion(&req.a)?;
    let b = state.store.motion(&req.b)?;
    computed(state, body_key("/api/align", &bytes), move |_| api::align_body(&a, &b, &req)).await
}

async fn diff(State(state): State<Shared>, body: Body) -> Reply {
    let bytes = read_body(&state, body).await?;
    let req: DiffRequest = api::parse_json(&bytes)?;
    let motion_of = |spec: &SeriesSpec, side: &str| {
        spec.motion
            .as_deref()
            .ok_or_else(|| ApiError::new(ErrorCode::SchemaError, "missing field `motion`").at(format!("{side}.motion")))
            .and_then(|id| state.store.motion(id))
    };
    let a = motion_of(&req.a, "a")?;
    let b = motion_of(&req.b, "b")?;
    computed(state, body_key("/api/diff", &bytes), move |_| api::diff_body(&a, &b, &req)).await
}

async fn embed(State(state): State<Shared>, body: Body) -> Reply {
    let bytes = read_body(&state, body).await?;
    let req = api::parse_embed_request(&bytes, state.config.default_seed)?;
    let motions = req
        .motion_ids
        .iter()
        .map(|id| state.store.motion(id))
        .collect::<Result<Vec<_>, _>>()?;
    let key = body_key("/api/embed", &serde_json::to_vec(&req).expect("requests serialize"));
    computed(state, key, move |_| {
        let refs: Vec<_> = motions.iter().map(|m| m.as_ref()).collect();
        api::embed_body(&refs, &req.params)
    })
    .await
}

async fn create_session(State(state): State<Shared>, body: Body) -> Reply {
    let bytes = read_body(&state, body).await?;
    let session = load_session(&bytes)?;
    let id = state.store.create_session(session)?;
    Ok(json(StatusCode::CREATED, api::session_created_body(&id)))
}

async fn put_session(State(state): State<Shared>, Path(id): Path<String>, body: Body) -> Reply {
    let bytes = read_body(&state, body).await?;
    let session = load_session(&bytes)?;
    let doc = state.store.put_session(&id, session)?;
    Ok(json(StatusCode::OK, doc.to_vec()))
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> Reply {
    Ok(json(StatusCode::OK, state.store.session(&id)?.to_vec()))
}

/// Share link: the UI page for browsers, the session document otherwise.
async fn share(State(state): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Reply {
    let doc = state.store.session(&id)?;
    let wants_html = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("text/html"));
    if wants_html {
        if let Some(dir) = &state.config.ui_dir {
            if let Ok(page) = tokio::fs::read(dir.join("index.html")).await {
                return Ok(([(header::CONTENT_TYPE, "text/html; charset=utf-8")], page).into_response());
            }
        }
    }
    Ok(json(StatusCode::OK, doc.to_vec()))
}

async fn unknown_route(method: Method, uri: Uri) -> ApiError {
    ApiError::new(ErrorCode::UnknownRoute, format!("no route for {method} {}", uri.path()))
}

async fn method_not_allowed(method: Method, uri: Uri) -> ApiError {
    ApiError::new(
        ErrorCode::MethodNotAllowed,
        format!("{method} is not supported on {}", uri.path()),
    )
}

pub fn router(state: Shared) -> Router {
    let api = Router::new()
        .route("/api/motions", get(list_motions).post(upload_motion))
        .route("/api/motions/{id}", get(get_motion).delete(delete_motion))
        .route("/api/motions/{id}/file", get(motion_file))
        .route("/api/motions/{id}/trace", get(motion_trace))
        .route("/api/motions/{id}/series", get(motion_series))
        .route("/api/motions/{id}/limits", get(motion_limits))
        .route("/api/motions/{id}/metrics", get(motion_metrics))
        .route("/api/align", axum::routing::post(align))
        .route("/api/diff", axum::routing::post(diff))
        .route("/api/embed", axum::routing::post(embed))
        .route("/api/sessions", axum::routing::post(create_session))
        .route("/api/sessions/{id}", get(get_session).put(put_session))
        .route("/s/{id}", get(share))
        .method_not_allowed_fallback(method_not_allowed);
    let app = match &state.config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).fallback(axum::routing::any(unknown_route))),
        None => api.fallback(unknown_route),
    };
    app.layer(TraceLayer::new_for_http()).with_state(state)
}

pub async fn serve(config: Config) -> std::io::Result<()> {
    let addr = config.addr;
    let state = Arc::new(AppState::new(config)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
