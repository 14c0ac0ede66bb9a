//! Bidirectional stream endpoint for browser clients at `/ws`.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;

use crate::protocol::{Reply, ServerMessage};
use crate::service::Service;
use crate::tcp::schedule_teardown;

#[derive(Clone)]
struct WsState {
    service: Arc<Service>,
    heartbeat: Duration,
    grace: Duration,
}

pub fn router(service: Arc<Service>, heartbeat: Duration, grace: Duration) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(WsState {
        service,
        heartbeat,
        grace,
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<WsState>) -> Response {
    ws.on_upgrade(move |socket| stream(socket, state))
}

async fn stream(mut socket: WebSocket, state: WsState) {
    let mut owned = Vec::new();
    let mut ticker = tokio::time::interval(state.heartbeat);
    ticker.tick().await;
    loop {
        tokio::select! {
            msg = socket.recv() => {
                let text = match msg {
                    Some(Ok(Message::Text(text))) => text,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                // The reply and all of its events go out before the next
                // input is read.
                let (reply, events) = state.service.handle_line(text.as_str());
                if let Reply::Session { session, .. } = &reply {
                    owned.push(*session);
                }
                let msgs = std::iter::once(ServerMessage::Reply(reply)).chain(events.into_iter().map(ServerMessage::Event));
                let mut failed = false;
                for m in msgs {
                    let json = serde_json::to_string(&m).expect("messages serialize");
                    if socket.send(Message::Text(json.into())).await.is_err() {
                        failed = true;
                        break;
                    }
                }
                if failed {
                    break;
                }
            }
            _ = ticker.tick() => {
                if socket.send(Message::Ping(Vec::new().into())).await.is_err() {
                    break;
                }
            }
        }
    }
    schedule_teardown(state.service, owned, state.grace);
}
