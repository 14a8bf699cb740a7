//! HTTP and WebSocket front end.
//!
//! `POST /api/sessions`, `POST /api/sessions/{id}/act`,
//! `GET /api/sessions/{id}/report`, `GET /api/sessions/{id}/log` and
//! `GET /api/slots` carry the same JSON bodies as the `/ws` messages. A
//! background sweeper forces Straight on overdue turns and pushes the result
//! to every WebSocket that touched the session.

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use corridor_core::Action;
use serde::Deserialize;
use tokio::sync::broadcast;
use tower_http::services::ServeDir;

use crate::error::ServiceError;
use crate::protocol::{ClientMessage, CreateRequest, ServerMessage, TurnRef, TurnResult};
use crate::session::SessionManager;

pub const SWEEP_INTERVAL: Duration = Duration::from_millis(100);

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[derive(Clone)]
pub struct AppState {
    pub manager: Arc<SessionManager>,
    events: broadcast::Sender<TurnResult>,
}

impl AppState {
    pub fn new(manager: SessionManager) -> AppState {
        let (events, _) = broadcast::channel(1024);
        AppState { manager: Arc::new(manager), events }
    }

    /// Forces overdue turns once and announces them.
    pub fn sweep(&self, now: u64) {
        for turn in self.manager.tick_all(now) {
            let _ = self.events.send(turn);
        }
    }
}

/// Runs `sweep` every `interval` until the runtime shuts down.
pub fn spawn_sweeper(state: AppState, interval: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut timer = tokio::time::interval(interval);
        timer.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            timer.tick().await;
            state.sweep(now_ms());
        }
    })
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) | ServiceError::Finished => StatusCode::CONFLICT,
            ServiceError::Timeout(_) => StatusCode::REQUEST_TIMEOUT,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ServerMessage::Error(self.body()))).into_response()
    }
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/api/slots", get(slots))
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}/act", post(act))
        .route("/api/sessions/{id}/report", get(report))
        .route("/api/sessions/{id}/log", get(round_log))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let sweeper = spawn_sweeper(state.clone(), SWEEP_INTERVAL);
    let result = axum::serve(listener, router(state, static_dir)).await;
    sweeper.abort();
    result
}

async fn slots(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.manager.slots())
}

async fn create(State(state): State<AppState>, Json(req): Json<CreateRequest>) -> Result<Response, ServiceError> {
    let created = state.manager.create(&req.opponent_slot, req.rounds, req.seed, now_ms())?;
    Ok((StatusCode::CREATED, Json(ServerMessage::Created(created))).into_response())
}

#[derive(Debug, Deserialize)]
struct ActBody {
    action: Action,
    #[serde(default)]
    turn: Option<TurnRef>,
}

async fn act(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ActBody>,
) -> Result<Json<ServerMessage>, ServiceError> {
    let turn = state.manager.act(&id, body.action, body.turn, now_ms())?;
    Ok(Json(ServerMessage::Turn(turn)))
}

async fn report(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<ServerMessage>, ServiceError> {
    Ok(Json(ServerMessage::Report(state.manager.report(&id)?)))
}

async fn round_log(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let mut body = String::new();
    for entry in state.manager.round_log(&id)? {
        body.push_str(&serde_json::to_string(&entry).map_err(|e| ServiceError::Internal(e.to_string()))?);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn ws_upgrade(State(state): State<AppState>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| ws_session(socket, state))
}

fn handle_message(state: &AppState, text: &str, watched: &mut HashSet<String>) -> Vec<ServerMessage> {
    let msg: ClientMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => return vec![ServerMessage::Error(ServiceError::BadRequest(format!("malformed message: {e}")).body())],
    };
    let result = match msg {
        ClientMessage::Create(req) => state.manager.create(&req.opponent_slot, req.rounds, req.seed, now_ms()).map(|c| {
            watched.insert(c.session_id.clone());
            ServerMessage::Created(c)
        }),
        ClientMessage::Act(req) => {
            watched.insert(req.session_id.clone());
            state.manager.act(&req.session_id, req.action, req.turn, now_ms()).map(ServerMessage::Turn)
        }
        ClientMessage::Report(req) => state.manager.report(&req.session_id).map(ServerMessage::Report),
    };
    match result {
        Ok(m) => vec![m],
        // A late action: the forced turn is announced before the error.
        Err(ServiceError::Timeout(turn)) => {
            let err = ServiceError::Timeout(turn.clone()).body();
            vec![ServerMessage::Turn(*turn), ServerMessage::Error(err)]
        }
        Err(e) => vec![ServerMessage::Error(e.body())],
    }
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    match serde_json::to_string(msg) {
        Ok(text) => socket.send(Message::Text(text.into())).await.is_ok(),
        Err(_) => false,
    }
}

async fn ws_session(mut socket: WebSocket, state: AppState) {
    let mut events = state.events.subscribe();
    let mut watched = HashSet::new();
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                for reply in handle_message(&state, text.as_str(), &mut watched) {
                    if !send(&mut socket, &reply).await {
                        return;
                    }
                }
            }
            event = events.recv() => {
                match event {
                    Ok(turn) if watched.contains(&turn.session_id) => {
                        if !send(&mut socket, &ServerMessage::Turn(turn)).await {
                            return;
                        }
                    }
                    Ok(_) | Err(broadcast::error::RecvError::Lagged(_)) => {}
                    Err(broadcast::error::RecvError::Closed) => break,
                }
            }
        }
    }
}
