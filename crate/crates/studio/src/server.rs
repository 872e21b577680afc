//! WebSocket transport: one connection, one session.

use std::net::SocketAddr;

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message;

use crate::protocol::{ErrorCode, ServerMessage};
use crate::session::{Connection, Event};

pub const DEFAULT_PORT: u16 = 7340;

/// Accepts connections until the listener fails.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        tokio::spawn(async move {
            if let Err(e) = handle_connection(stream, peer).await {
                log::info!("{peer}: {e}");
            }
        });
    }
}

fn text(reply: &ServerMessage) -> Message {
    Message::text(serde_json::to_string(reply).expect("server messages serialize"))
}

async fn next_event(rx: &mut Option<mpsc::Receiver<Event>>) -> Option<Event> {
    match rx {
        Some(rx) => rx.recv().await,
        None => std::future::pending().await,
    }
}

pub async fn handle_connection(
    stream: TcpStream,
    peer: SocketAddr,
) -> Result<(), tokio_tungstenite::tungstenite::Error> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    log::info!("{peer}: connected");
    let (mut tx, mut rx) = ws.split();
    let mut conn = Connection::new();
    let mut events: Option<mpsc::Receiver<Event>> = None;
    loop {
        tokio::select! {
            msg = rx.next() => {
                let reply = match msg {
                    Some(Ok(Message::Text(t))) => {
                        // Session setup and teardown (joining the worker) block.
                        let reply = tokio::task::block_in_place(|| conn.handle_text(t.as_str()));
                        if matches!(reply, ServerMessage::SessionCreated { .. }) {
                            events = conn.session_mut().and_then(|s| s.take_events());
                        }
                        reply
                    }
                    Some(Ok(Message::Binary(_))) => {
                        ServerMessage::error(ErrorCode::BadParams, "requests are JSON text messages")
                    }
                    Some(Ok(Message::Close(_))) | None => break,
                    Some(Ok(_)) => continue,
                    Some(Err(e)) => return Err(e),
                };
                tx.send(text(&reply)).await?;
            }
            Some(event) = next_event(&mut events) => match event {
                Event::Frame(f) => tx.send(Message::binary(f.encode())).await?,
                Event::Failed(message) => {
                    tx.send(text(&ServerMessage::error(ErrorCode::BadParams, message))).await?
                }
            },
        }
    }
    tokio::task::block_in_place(|| drop(conn));
    log::info!("{peer}: closed");
    Ok(())
}
