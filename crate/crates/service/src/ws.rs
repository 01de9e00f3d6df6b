//! WebSocket transport.

use std::collections::HashSet;
use std::future::Future;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::watch;

use crate::manager::{ServiceError, SessionManager};
use crate::protocol::{ClientMessage, ErrorCode, ServerMessage};

#[derive(Clone)]
struct AppState {
    manager: Arc<SessionManager>,
    shutdown: watch::Receiver<bool>,
}

fn error_message(e: &ServiceError) -> ServerMessage {
    ServerMessage::error(e.code(), e.to_string())
}

/// Handles one client message. Sessions are bound to the connection that
/// started them: `owned` holds this connection's tokens.
pub fn handle_message(manager: &SessionManager, owned: &mut HashSet<String>, text: &str) -> ServerMessage {
    let msg: ClientMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => return ServerMessage::error(ErrorCode::BadMessage, e.to_string()),
    };
    let not_owned = || error_message(&ServiceError::UnknownSession);
    match msg {
        ClientMessage::Start { user, config } => match manager.start(&user, config.as_ref()) {
            Ok(s) => {
                owned.insert(s.token.clone());
                ServerMessage::Started {
                    token: s.token,
                    session_id: s.session_id,
                    config: s.config,
                }
            }
            Err(e) => error_message(&e),
        },
        ClientMessage::Frame { token, packet } => {
            if !owned.contains(&token) {
                return not_owned();
            }
            match manager.submit_value(&token, packet) {
                Ok(out) => ServerMessage::FrameResult(out),
                Err(e) => error_message(&e),
            }
        }
        ClientMessage::End { token } => {
            if !owned.remove(&token) {
                return not_owned();
            }
            end_message(manager, &token)
        }
        ClientMessage::History { user } => match manager.history(&user) {
            Ok(sessions) => ServerMessage::History { user, sessions },
            Err(e) => error_message(&e),
        },
    }
}

fn end_message(manager: &SessionManager, token: &str) -> ServerMessage {
    match manager.end(token) {
        Ok(ended) => ServerMessage::Summary {
            session_id: ended.record.session_id.clone(),
            stream_digest: ended.record.stream_digest.clone(),
            latency_p95_us: ended.latency.map_or(0.0, |l| l.p95_us),
            summary: ended.record.summary,
        },
        Err(e) => error_message(&e),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn connection(mut socket: WebSocket, state: AppState) {
    let mut owned = HashSet::new();
    let mut shutdown = state.shutdown.clone();
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let reply = match incoming {
                    Some(Ok(Message::Text(text))) => handle_message(&state.manager, &mut owned, text.as_str()),
                    Some(Ok(Message::Binary(_))) => ServerMessage::error(ErrorCode::BadMessage, "expected a text message"),
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                if socket.send(Message::Text(reply.to_json().into())).await.is_err() {
                    break;
                }
            }
            _ = shutdown.changed() => {
                // sessions with frames are ended and stored before closing
                for token in owned.drain() {
                    let reply = end_message(&state.manager, &token);
                    match &reply {
                        ServerMessage::Summary { session_id, .. } => {
                            tracing::info!(%session_id, "session stored at shutdown");
                            let _ = socket.send(Message::Text(reply.to_json().into())).await;
                        }
                        ServerMessage::Error { code: ErrorCode::EmptySession, .. } => {}
                        ServerMessage::Error { detail, .. } => {
                            tracing::warn!(%detail, "could not store session at shutdown");
                        }
                        _ => {}
                    }
                }
                let _ = socket.send(Message::Close(None)).await;
                return;
            }
        }
    }
    if !owned.is_empty() {
        tracing::info!(sessions = owned.len(), "connection closed, dropping its sessions");
    }
    for token in owned {
        state.manager.abandon(&token);
    }
}

pub fn router(manager: Arc<SessionManager>, shutdown: watch::Receiver<bool>) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/health", get(|| async { "ok" }))
        .with_state(AppState { manager, shutdown })
}

/// Serves until `signal` resolves, then ends open sessions and waits for
/// connections to close.
pub async fn serve<F>(listener: TcpListener, manager: Arc<SessionManager>, signal: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    let (tx, rx) = watch::channel(false);
    let app = router(manager, rx);
    axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            signal.await;
            let _ = tx.send(true);
        })
        .await
}
