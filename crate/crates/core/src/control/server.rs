//! TCP server speaking the NDJSON protocol. A connection whose first bytes
//! are `GET ` is upgraded to a WebSocket carrying one message per frame.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio_tungstenite::tungstenite::Message;

use super::protocol::{parse_client_line, to_line, Command, ServerMessage, TelemetryRecord};
use super::session::Session;
use crate::error::Result;

pub const DEFAULT_PORT: u16 = 5705;
const OUTGOING_CAPACITY: usize = 256;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub addr: SocketAddr,
    /// Wall-clock time per simulated subframe.
    pub subframe_period: Duration,
    /// Telemetry records buffered per client before the oldest are dropped.
    pub telemetry_buffer: usize,
    pub journal: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            subframe_period: Duration::from_millis(1),
            telemetry_buffer: 1024,
            journal: None,
        }
    }
}

type Request = (Command, oneshot::Sender<ServerMessage>);

/// A running server. Dropping it leaves the server running until the
/// runtime shuts down; call [`ServerHandle::shutdown`] to stop it.
#[derive(Debug)]
pub struct ServerHandle {
    pub local_addr: SocketAddr,
    shutdown: watch::Sender<bool>,
    task: JoinHandle<()>,
}

impl ServerHandle {
    pub async fn shutdown(self) {
        let _ = self.shutdown.send(true);
        let _ = self.task.await;
    }

    /// Waits until the server stops on its own (engine failure).
    pub async fn wait(self) {
        let _ = self.task.await;
    }
}

/// Binds the listener and starts the engine and accept loop.
pub async fn serve(mut session: Session, config: ServerConfig) -> Result<ServerHandle> {
    if let Some(path) = config.journal.clone() {
        session = session.with_journal(path);
    }
    let listener = TcpListener::bind(config.addr).await?;
    let local_addr = listener.local_addr()?;
    let (shutdown, shutdown_rx) = watch::channel(false);
    let (cmd_tx, cmd_rx) = mpsc::channel::<Request>(64);
    let (tel_tx, _) = broadcast::channel::<TelemetryRecord>(config.telemetry_buffer.max(1));

    let engine = tokio::spawn(engine(session, config.subframe_period, cmd_rx, tel_tx.clone(), shutdown_rx.clone()));
    let task = tokio::spawn(async move {
        let mut stop = shutdown_rx.clone();
        loop {
            tokio::select! {
                _ = stop.changed() => break,
                accepted = listener.accept() => match accepted {
                    Ok((stream, peer)) => {
                        log::info!("client connected from {peer}");
                        tokio::spawn(connection(stream, cmd_tx.clone(), tel_tx.subscribe()));
                    }
                    Err(e) => log::warn!("accept failed: {e}"),
                },
            }
        }
        let _ = engine.await;
    });
    Ok(ServerHandle { local_addr, shutdown, task })
}

async fn engine(
    mut session: Session,
    period: Duration,
    mut commands: mpsc::Receiver<Request>,
    telemetry: broadcast::Sender<TelemetryRecord>,
    mut stop: watch::Receiver<bool>,
) {
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            biased;
            _ = stop.changed() => break,
            Some((cmd, reply)) = commands.recv() => {
                let _ = reply.send(session.submit(cmd));
            }
            _ = ticker.tick(), if session.running() => match session.step() {
                Ok(Some(record)) => {
                    let _ = telemetry.send(record);
                }
                Ok(None) => {}
                Err(e) => {
                    log::error!("simulation stopped: {e}");
                    break;
                }
            },
        }
    }
}

async fn is_websocket(stream: &TcpStream) -> bool {
    let mut buf = [0u8; 4];
    for _ in 0..100 {
        match stream.peek(&mut buf).await {
            Ok(0) | Err(_) => return false,
            Ok(n) if n >= 4 => return &buf == b"GET ",
            Ok(n) if !b"GET ".starts_with(&buf[..n]) => return false,
            Ok(_) => tokio::time::sleep(Duration::from_millis(5)).await,
        }
    }
    false
}

async fn connection(
    stream: TcpStream,
    commands: mpsc::Sender<Request>,
    telemetry: broadcast::Receiver<TelemetryRecord>,
) {
    let (in_tx, in_rx) = mpsc::channel::<String>(64);
    let (out_tx, mut out_rx) = mpsc::channel::<String>(OUTGOING_CAPACITY);

    if is_websocket(&stream).await {
        let ws = match tokio_tungstenite::accept_async(stream).await {
            Ok(ws) => ws,
            Err(e) => {
                log::warn!("websocket handshake failed: {e}");
                return;
            }
        };
        let (mut sink, mut source) = ws.split();
        tokio::spawn(async move {
            while let Some(Ok(msg)) = source.next().await {
                match msg {
                    Message::Text(t) => {
                        for line in t.as_str().lines() {
                            if in_tx.send(line.to_owned()).await.is_err() {
                                return;
                            }
                        }
                    }
                    Message::Close(_) => return,
                    _ => {}
                }
            }
        });
        tokio::spawn(async move {
            while let Some(line) = out_rx.recv().await {
                if sink.send(Message::text(line)).await.is_err() {
                    break;
                }
            }
            let _ = sink.close().await;
        });
    } else {
        let (read, mut write) = stream.into_split();
        tokio::spawn(async move {
            let mut lines = BufReader::new(read).lines();
            while let Ok(Some(line)) = lines.next_line().await {
                if in_tx.send(line).await.is_err() {
                    return;
                }
            }
        });
        tokio::spawn(async move {
            while let Some(mut line) = out_rx.recv().await {
                line.push('\n');
                if write.write_all(line.as_bytes()).await.is_err() {
                    break;
                }
            }
        });
    }
    client_loop(in_rx, out_tx, commands, telemetry).await;
}

async fn client_loop(
    mut incoming: mpsc::Receiver<String>,
    outgoing: mpsc::Sender<String>,
    commands: mpsc::Sender<Request>,
    mut telemetry: broadcast::Receiver<TelemetryRecord>,
) {
    let mut dropped = 0u64;
    loop {
        let msg = tokio::select! {
            line = incoming.recv() => {
                let Some(line) = line else { break };
                if line.trim().is_empty() {
                    continue;
                }
                match parse_client_line(&line) {
                    Ok(cmd) => {
                        let (tx, rx) = oneshot::channel();
                        if commands.send((cmd, tx)).await.is_err() {
                            break;
                        }
                        match rx.await {
                            Ok(reply) => reply,
                            Err(_) => break,
                        }
                    }
                    Err((request_id, error)) => ServerMessage::Err { request_id, error },
                }
            }
            record = telemetry.recv() => match record {
                Ok(record) => ServerMessage::Telemetry { record, dropped },
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    dropped += n;
                    continue;
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
        };
        if outgoing.send(to_line(&msg)).await.is_err() {
            break;
        }
    }
}
