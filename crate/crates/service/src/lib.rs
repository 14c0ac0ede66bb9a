//! Network front end for the CoGRIP environment: a line-delimited JSON
//! socket for trainers and a WebSocket stream for browser play.

pub mod protocol;
pub mod service;
pub mod tcp;
pub mod ws;

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::sync::Arc;
use std::time::Duration;

use tokio::net::TcpListener;

pub use protocol::{ErrorCode, Event, Mode, Reply, Request, ServerMessage, SessionConfig, SessionId, TaskRef, PROTOCOL_VERSION};
pub use service::{Service, TaskLibrary};

/// Environment variable holding the bind address.
pub const BIND_ENV: &str = "COGRIP_BIND";
pub const DEFAULT_PORT: u16 = 7070;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: IpAddr,
    /// Line-delimited JSON port; 0 picks a free one.
    pub port: u16,
    /// WebSocket port; `None` disables the stream endpoint.
    pub ws_port: Option<u16>,
    /// Connections silent for this long are closed.
    pub idle_timeout: Duration,
    /// Sessions untouched for this long are dropped.
    pub session_ttl: Duration,
    /// How long a disconnected client's sessions survive.
    pub grace: Duration,
    pub heartbeat: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: std::env::var(BIND_ENV)
                .ok()
                .and_then(|s| s.parse().ok())
                .unwrap_or(IpAddr::V4(Ipv4Addr::LOCALHOST)),
            port: DEFAULT_PORT,
            ws_port: Some(DEFAULT_PORT + 1),
            idle_timeout: Duration::from_secs(300),
            session_ttl: Duration::from_secs(1800),
            grace: Duration::from_secs(30),
            heartbeat: Duration::from_secs(15),
        }
    }
}

/// A running server. Dropping it leaves the tasks running; call `shutdown`.
pub struct Handle {
    pub tcp_addr: SocketAddr,
    pub ws_addr: Option<SocketAddr>,
    pub service: Arc<Service>,
    tasks: Vec<tokio::task::JoinHandle<()>>,
}

impl Handle {
    pub fn shutdown(self) {
        for t in self.tasks {
            t.abort();
        }
    }

    /// Wait until every server task exits.
    pub async fn join(self) {
        for t in self.tasks {
            let _ = t.await;
        }
    }
}

/// Bind the listeners and spawn the server tasks on the current runtime.
pub async fn start(config: &ServiceConfig, service: Service) -> std::io::Result<Handle> {
    let service = Arc::new(service);
    let mut tasks = Vec::new();

    let listener = TcpListener::bind(SocketAddr::new(config.bind, config.port)).await?;
    let tcp_addr = listener.local_addr()?;
    tasks.push(tokio::spawn(tcp::serve(listener, service.clone(), config.idle_timeout, config.grace)));

    let ws_addr = match config.ws_port {
        Some(port) => {
            let listener = TcpListener::bind(SocketAddr::new(config.bind, port)).await?;
            let addr = listener.local_addr()?;
            let app = ws::router(service.clone(), config.heartbeat, config.grace);
            tasks.push(tokio::spawn(async move {
                if let Err(e) = axum::serve(listener, app).await {
                    tracing::error!("websocket server failed: {e}");
                }
            }));
            Some(addr)
        }
        None => None,
    };

    let reaper = service.clone();
    let ttl = config.session_ttl;
    tasks.push(tokio::spawn(async move {
        let mut tick = tokio::time::interval(ttl.min(Duration::from_secs(60)).max(Duration::from_millis(10)));
        loop {
            tick.tick().await;
            let n = reaper.reap_idle(ttl);
            if n > 0 {
                tracing::info!(removed = n, "reaped idle sessions");
            }
        }
    }));

    tracing::info!(%tcp_addr, ?ws_addr, "cogrip service listening");
    Ok(Handle {
        tcp_addr,
        ws_addr,
        service,
        tasks,
    })
}
