//! WebSocket service: each connection owns one session and its requests
//! are applied in arrival order.

use anyhow::Result;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use sketchmesh::session::{EngineConfig, Session};
use tokio::net::TcpListener;

pub fn router(config: EngineConfig) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(config)
}

pub async fn serve(listener: TcpListener, config: EngineConfig) -> Result<()> {
    axum::serve(listener, router(config)).await?;
    Ok(())
}

async fn upgrade(ws: WebSocketUpgrade, State(config): State<EngineConfig>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, config))
}

async fn connection(mut socket: WebSocket, config: EngineConfig) {
    let mut session = Some(Session::new(config));
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => break,
            _ => continue,
        };
        // Geometry work is CPU bound, so it runs off the async workers.
        let mut s = session.take().expect("session present between requests");
        let (s, reply) = match tokio::task::spawn_blocking(move || {
            let reply = s.handle_text(&text);
            (s, reply)
        })
        .await
        {
            Ok(r) => r,
            Err(e) => {
                log::error!("session task failed: {e}");
                break;
            }
        };
        session = Some(s);
        if socket.send(Message::Text(reply.into())).await.is_err() {
            break;
        }
    }
}
