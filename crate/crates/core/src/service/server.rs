//! WebSocket front end. `GET /ws` upgrades to a session; each text message
//! carries one or more newline-separated inbound records and every outbound
//! record goes back as its own text message. `GET /info` describes the loaded
//! pipeline and `GET /health` answers `ok`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use tokio::net::TcpListener;
use tracing::{debug, info, warn};

use super::protocol::{ErrorCode, Outbound, PROTOCOL_VERSION};
use super::session::{Engine, Session};

pub struct AppState {
    engine: Arc<Engine>,
    record_dir: Option<PathBuf>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, record_dir: Option<PathBuf>) -> Self {
        AppState {
            engine,
            record_dir,
            next_id: AtomicU64::new(1),
        }
    }
}

#[derive(Serialize)]
struct Info {
    protocol_version: u32,
    landmarks: usize,
    window: usize,
    stride: usize,
    vocabulary: Vec<String>,
    idle_label: String,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/info", get(info_handler))
        .route("/health", get(|| async { "ok" }))
        .with_state(state)
}

pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}

async fn info_handler(State(state): State<Arc<AppState>>) -> Json<Info> {
    let model = state.engine.model();
    let cfg = state.engine.config();
    Json(Info {
        protocol_version: PROTOCOL_VERSION,
        landmarks: cfg.landmarks,
        window: cfg.window,
        stride: cfg.stride,
        vocabulary: model.vocabulary().labels().iter().map(|l| l.to_string()).collect(),
        idle_label: model.vocabulary().idle_label().to_string(),
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| run_session(socket, state))
}

fn open_recorder(state: &AppState, id: u64) -> Option<BufWriter<File>> {
    let dir = state.record_dir.as_ref()?;
    let path = dir.join(format!("session-{id:06}.jsonl"));
    match std::fs::create_dir_all(dir).and_then(|_| File::create(&path)) {
        Ok(f) => Some(BufWriter::new(f)),
        Err(e) => {
            warn!(path = %path.display(), error = %e, "cannot record session");
            None
        }
    }
}

async fn send(socket: &mut WebSocket, out: &Outbound) -> bool {
    socket.send(Message::Text(out.to_line().into())).await.is_ok()
}

async fn run_session(mut socket: WebSocket, state: Arc<AppState>) {
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let mut session = Session::unlogged(state.engine.clone(), id);
    let mut recorder = open_recorder(&state, id);
    debug!(session = id, "connected");

    'conn: while let Some(msg) = socket.recv().await {
        let text = match msg {
            Ok(Message::Text(t)) => t,
            Ok(Message::Binary(_)) => {
                let err = Outbound::error(ErrorCode::Malformed, "binary messages are not part of the protocol");
                if !send(&mut socket, &err).await {
                    break;
                }
                continue;
            }
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        for line in text.as_str().lines().filter(|l| !l.trim().is_empty()) {
            if let Some(w) = &mut recorder {
                if writeln!(w, "{line}").is_err() {
                    recorder = None;
                }
            }
            for out in session.handle_line(line) {
                if !send(&mut socket, &out).await {
                    break 'conn;
                }
            }
        }
    }
    if let Some(mut w) = recorder {
        let _ = w.flush();
    }
    debug!(session = id, "disconnected");
}
