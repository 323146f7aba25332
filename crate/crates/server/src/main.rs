use std::net::SocketAddr;

use lmap_server::{router, SessionStore};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let addr: SocketAddr = std::env::args()
        .nth(1)
        .or_else(|| std::env::var("LMAP_ADDR").ok())
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("lmap-server listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(SessionStore::new())).await
}
