//! HTTP facade over the engine: create graph instances, query enabledness,
//! execute steps, advance time. State is in-memory, one instance per id.
//!
//! Endpoints (JSON in and out, errors as `{"error", "message", ...}`):
//!
//! | method | path | notes |
//! |---|---|---|
//! | POST | `/graphs` | body is a model document; replies 201 `{"id"}` |
//! | GET | `/graphs/{id}/enabled?role=r&verbose=1` | enabled ids, plus blockers when verbose |
//! | POST | `/graphs/{id}/execute` | `{"event", "role"?, "value"?}`; 409 with blockers on refusal |
//! | POST | `/graphs/{id}/advance` | `{"ticks": n or duration string, "mode"?}`; 409 on strict deadline hit |
//! | GET | `/graphs/{id}/marking` | current marking |
//! | GET | `/graphs/{id}/accepting` | `{"accepting": bool}` |
//! | DELETE | `/graphs/{id}` | drop the instance |

use crate::engine::{EngineError, Instance, TimeMode};
use crate::expr::{parse_duration, Value};
use crate::graph::EventId;
use crate::model::{parse_model, validate_model};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value as JsonValue};
use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

#[derive(Clone, Default)]
struct AppState {
    graphs: Arc<RwLock<HashMap<String, Arc<Mutex<Instance>>>>>,
}

/// Builds the service router with fresh empty state.
pub fn router() -> Router {
    Router::new()
        .route("/graphs", post(create_graph))
        .route("/graphs/{id}", delete(drop_graph))
        .route("/graphs/{id}/marking", get(get_marking))
        .route("/graphs/{id}/accepting", get(get_accepting))
        .route("/graphs/{id}/enabled", get(get_enabled))
        .route("/graphs/{id}/execute", post(post_execute))
        .route("/graphs/{id}/advance", post(post_advance))
        .with_state(AppState::default())
}

/// Binds and serves until ctrl-c.
pub async fn run(bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Starts a server on its own runtime thread and returns the bound
/// address. The server lives for the rest of the process; intended for
/// examples and tests (bind to port 0 for an ephemeral port).
pub fn spawn_background(bind: &str) -> std::io::Result<SocketAddr> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let (tx, rx) = std::sync::mpsc::channel();
    let bind = bind.to_string();
    std::thread::spawn(move || {
        runtime.block_on(async move {
            match tokio::net::TcpListener::bind(&bind).await {
                Ok(listener) => {
                    let addr = listener.local_addr().expect("bound socket has an address");
                    let _ = tx.send(Ok(addr));
                    let _ = axum::serve(listener, router()).await;
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                }
            }
        });
    });
    rx.recv()
        .map_err(|_| std::io::Error::other("server thread exited before binding"))?
}

fn error_response(status: StatusCode, code: &str, message: String) -> Response {
    (status, Json(json!({ "error": code, "message": message }))).into_response()
}

fn error_with(status: StatusCode, code: &str, message: String, extra: (&str, JsonValue)) -> Response {
    let mut body = json!({ "error": code, "message": message });
    body[extra.0] = extra.1;
    (status, Json(body)).into_response()
}

fn not_found(id: &str) -> Response {
    error_response(
        StatusCode::NOT_FOUND,
        "unknown_graph",
        format!("no graph instance with id {id:?}"),
    )
}

fn engine_error_response(e: EngineError) -> Response {
    let message = e.to_string();
    match e {
        EngineError::NotEnabled { verdict, .. } => error_with(
            StatusCode::CONFLICT,
            "not_enabled",
            message,
            ("blockers", serde_json::to_value(&verdict.blockers).expect("blockers serialize")),
        ),
        EngineError::DeadlineViolation { events, .. } => error_with(
            StatusCode::CONFLICT,
            "deadline_violation",
            message,
            ("events", serde_json::to_value(&events).expect("event ids serialize")),
        ),
        EngineError::UnknownEvent(_) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, "unknown_event", message)
        }
        EngineError::UnknownRole(_) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, "unknown_role", message)
        }
        EngineError::MissingInput(_) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, "missing_input", message)
        }
        EngineError::UnexpectedInput(_) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, "unexpected_input", message)
        }
        EngineError::Expression(_) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, "expression_error", message)
        }
        EngineError::UnknownGroup(_) | EngineError::CyclicNesting(_) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, "invalid_model", message)
        }
    }
}

fn lookup(state: &AppState, id: &str) -> Result<Arc<Mutex<Instance>>, Response> {
    state
        .graphs
        .read()
        .expect("graph table lock")
        .get(id)
        .cloned()
        .ok_or_else(|| not_found(id))
}

async fn create_graph(State(state): State<AppState>, body: String) -> Response {
    let document = match parse_model(&body) {
        Ok(doc) => doc,
        Err(e) => {
            return error_response(StatusCode::UNPROCESSABLE_ENTITY, "invalid_model", e.to_string())
        }
    };
    let diagnostics = validate_model(&document);
    if !diagnostics.is_empty() {
        return error_with(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_model",
            "model failed validation".into(),
            ("diagnostics", serde_json::to_value(&diagnostics).expect("diagnostics serialize")),
        );
    }
    let instance = match document.instantiate() {
        Ok(instance) => instance,
        Err(e) => return engine_error_response(e),
    };
    let id = uuid::Uuid::new_v4().to_string();
    state
        .graphs
        .write()
        .expect("graph table lock")
        .insert(id.clone(), Arc::new(Mutex::new(instance)));
    (StatusCode::CREATED, Json(json!({ "id": id }))).into_response()
}

async fn drop_graph(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    if state.graphs.write().expect("graph table lock").remove(&id).is_some() {
        StatusCode::NO_CONTENT.into_response()
    } else {
        not_found(&id)
    }
}

async fn get_marking(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    match lookup(&state, &id) {
        Ok(entry) => {
            let instance = entry.lock().expect("instance lock");
            Json(serde_json::to_value(instance.marking()).expect("marking serializes")).into_response()
        }
        Err(resp) => resp,
    }
}

async fn get_accepting(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    match lookup(&state, &id) {
        Ok(entry) => {
            let instance = entry.lock().expect("instance lock");
            Json(json!({ "accepting": instance.is_accepting() })).into_response()
        }
        Err(resp) => resp,
    }
}

#[derive(Deserialize)]
struct EnabledQuery {
    #[serde(default)]
    role: Option<String>,
    #[serde(default)]
    verbose: Option<String>,
}

async fn get_enabled(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<EnabledQuery>,
) -> Response {
    let entry = match lookup(&state, &id) {
        Ok(entry) => entry,
        Err(resp) => return resp,
    };
    let instance = entry.lock().expect("instance lock");
    if let Some(role) = &query.role {
        if !instance.graph().roles.contains(role) {
            return error_response(
                StatusCode::UNPROCESSABLE_ENTITY,
                "unknown_role",
                format!("unknown role {role:?}"),
            );
        }
    }
    let enabled = match instance.enabled_events(query.role.as_deref()) {
        Ok(ids) => ids,
        Err(e) => return engine_error_response(e),
    };
    let verbose = matches!(query.verbose.as_deref(), Some("1" | "true" | "yes"));
    if !verbose {
        return Json(json!({ "enabled": enabled })).into_response();
    }
    let mut blocked = Vec::new();
    for event in instance.graph().events.keys() {
        if enabled.contains(event) {
            continue;
        }
        match instance.is_enabled(event, query.role.as_deref()) {
            Ok(verdict) => blocked.push(json!({ "event": event, "blockers": verdict.blockers })),
            Err(e) => return engine_error_response(e),
        }
    }
    Json(json!({ "enabled": enabled, "blocked": blocked })).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExecuteBody {
    event: String,
    #[serde(default)]
    role: Option<String>,
    #[serde(default)]
    value: Option<Value>,
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &str) -> Result<T, Response> {
    serde_json::from_str(body).map_err(|e| {
        error_response(StatusCode::UNPROCESSABLE_ENTITY, "bad_request", e.to_string())
    })
}

async fn post_execute(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: String,
) -> Response {
    let entry = match lookup(&state, &id) {
        Ok(entry) => entry,
        Err(resp) => return resp,
    };
    let request: ExecuteBody = match parse_body(&body) {
        Ok(request) => request,
        Err(resp) => return resp,
    };
    let mut instance = entry.lock().expect("instance lock");
    let event = EventId::from(request.event);
    match instance.execute(&event, request.role.as_deref(), request.value) {
        Ok(()) => Json(json!({
            "marking": instance.marking(),
            "accepting": instance.is_accepting(),
        }))
        .into_response(),
        Err(e) => engine_error_response(e),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TicksSpec {
    Number(u64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdvanceBody {
    ticks: TicksSpec,
    #[serde(default)]
    mode: Option<TimeMode>,
}

async fn post_advance(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: String,
) -> Response {
    let entry = match lookup(&state, &id) {
        Ok(entry) => entry,
        Err(resp) => return resp,
    };
    let request: AdvanceBody = match parse_body(&body) {
        Ok(request) => request,
        Err(resp) => return resp,
    };
    let ticks = match request.ticks {
        TicksSpec::Number(n) => n,
        TicksSpec::Text(text) => match parse_duration(&text) {
            Ok(n) => n,
            Err(e) => {
                return error_response(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "bad_duration",
                    e.to_string(),
                )
            }
        },
    };
    let mode = request.mode.unwrap_or(TimeMode::Strict);
    let mut instance = entry.lock().expect("instance lock");
    match instance.advance(ticks, mode) {
        Ok(overdue) => Json(json!({
            "marking": instance.marking(),
            "overdue": overdue,
            "accepting": instance.is_accepting(),
        }))
        .into_response(),
        Err(e) => engine_error_response(e),
    }
}
