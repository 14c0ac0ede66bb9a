//! Line-delimited JSON over TCP: one request per line, one reply per line,
//! followed by any stream events for that request.

use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};

use crate::protocol::{Reply, ServerMessage, SessionId};
use crate::service::Service;

pub async fn serve(listener: TcpListener, service: Arc<Service>, idle_timeout: Duration, grace: Duration) {
    loop {
        let (stream, peer) = match listener.accept().await {
            Ok(conn) => conn,
            Err(e) => {
                tracing::warn!("accept failed: {e}");
                continue;
            }
        };
        tracing::debug!(%peer, "tcp client connected");
        let service = service.clone();
        tokio::spawn(async move {
            let owned = connection(stream, &service, idle_timeout).await;
            schedule_teardown(service, owned, grace);
        });
    }
}

/// Drop a closed connection's sessions once `grace` passes without use.
pub(crate) fn schedule_teardown(service: Arc<Service>, sessions: Vec<SessionId>, grace: Duration) {
    if sessions.is_empty() {
        return;
    }
    let closed_at = Instant::now();
    tokio::spawn(async move {
        tokio::time::sleep(grace).await;
        let n = service.teardown(&sessions, closed_at);
        tracing::debug!(removed = n, "sessions torn down");
    });
}

async fn connection(stream: TcpStream, service: &Service, idle_timeout: Duration) -> Vec<SessionId> {
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();
    let mut owned = Vec::new();
    loop {
        let line = match tokio::time::timeout(idle_timeout, lines.next_line()).await {
            Ok(Ok(Some(line))) => line,
            Ok(Ok(None)) => break,
            Ok(Err(e)) => {
                tracing::debug!("read error: {e}");
                break;
            }
            Err(_) => {
                tracing::debug!("idle timeout");
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let (reply, events) = service.handle_line(&line);
        if let Reply::Session { session, .. } = &reply {
            owned.push(*session);
        }
        let mut out = String::new();
        for msg in std::iter::once(ServerMessage::Reply(reply)).chain(events.into_iter().map(ServerMessage::Event)) {
            out.push_str(&serde_json::to_string(&msg).expect("messages serialize"));
            out.push('\n');
        }
        if write.write_all(out.as_bytes()).await.is_err() {
            break;
        }
    }
    owned
}
