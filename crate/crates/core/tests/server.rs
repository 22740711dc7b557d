use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader, Lines};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;
use tokio::time::timeout;
use tokio_tungstenite::tungstenite::Message;

use sidelink_core::control::{serve, ServerConfig, ServerHandle, Session};
use sidelink_core::sim::WorldConfig;

const WAIT: Duration = Duration::from_secs(10);

async fn next_ws(ws: &mut tokio_tungstenite::WebSocketStream<TcpStream>) -> Value {
    match timeout(WAIT, ws.next()).await.expect("ws reply").unwrap().unwrap() {
        Message::Text(t) => serde_json::from_str(t.as_str()).unwrap(),
        other => panic!("unexpected frame {other:?}"),
    }
}

async fn start(journal: Option<std::path::PathBuf>) -> ServerHandle {
    let session = Session::new(WorldConfig::replay(40.0)).unwrap();
    let cfg = ServerConfig {
        addr: "127.0.0.1:0".parse().unwrap(),
        subframe_period: Duration::from_micros(200),
        journal,
        ..ServerConfig::default()
    };
    serve(session, cfg).await.unwrap()
}

struct Client {
    lines: Lines<BufReader<OwnedReadHalf>>,
    write: OwnedWriteHalf,
}

impl Client {
    async fn connect(h: &ServerHandle) -> Self {
        let (r, w) = TcpStream::connect(h.local_addr).await.unwrap().into_split();
        Self { lines: BufReader::new(r).lines(), write: w }
    }

    async fn send(&mut self, v: Value) {
        self.write.write_all(format!("{v}\n").as_bytes()).await.unwrap();
    }

    async fn send_raw(&mut self, s: &str) {
        self.write.write_all(s.as_bytes()).await.unwrap();
    }

    async fn next(&mut self) -> Value {
        let line = timeout(WAIT, self.lines.next_line()).await.expect("server reply").unwrap().unwrap();
        serde_json::from_str(&line).unwrap()
    }

    /// Next message that is not telemetry.
    async fn reply(&mut self) -> Value {
        loop {
            let v = self.next().await;
            if v["type"] != "telemetry" {
                return v;
            }
        }
    }

    async fn telemetry(&mut self) -> Value {
        loop {
            let v = self.next().await;
            if v["type"] == "telemetry" {
                return v;
            }
        }
    }
}

fn cmd(id: u64, action: &str, extra: Value) -> Value {
    let mut v = json!({"type": "cmd", "request_id": id, "action": action});
    v.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    v
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn ndjson_commands_and_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let journal = dir.path().join("j.ndjson");
    let h = start(Some(journal.clone())).await;
    let mut c = Client::connect(&h).await;

    c.send(cmd(1, "set_telemetry_interval", json!({"interval_subframes": 20}))).await;
    assert_eq!(c.reply().await, json!({"type": "ack", "request_id": 1, "subframe": 0, "applied": 20}));
    c.send(cmd(2, "start", json!({}))).await;
    assert_eq!(c.reply().await["type"], "ack");

    let t = c.telemetry().await;
    assert_eq!(t["mode"], "Downlink");
    assert_eq!(t["dropped"], 0);
    assert!(t["subframe_index"].as_u64().unwrap() >= 20);
    assert_eq!(t["params"]["enodeb"]["tx_gain_db"], 55.0);

    c.send(cmd(3, "set_param", json!({"target": "enodeb", "name": "tx_gain_db", "value": 50}))).await;
    let ack = c.reply().await;
    assert_eq!((ack["type"].clone(), ack["applied"].clone()), (json!("ack"), json!(50.0)));
    let at = ack["subframe"].as_u64().unwrap();
    // The change shows up in the next record past the boundary.
    loop {
        let t = c.telemetry().await;
        if t["subframe_index"].as_u64().unwrap() > at {
            assert_eq!(t["params"]["enodeb"]["tx_gain_db"], 50.0);
            break;
        }
    }

    c.send(cmd(4, "set_param", json!({"target": "relay_sl", "name": "mcs_index", "value": 25}))).await;
    let e = c.reply().await;
    assert_eq!((e["type"].clone(), e["kind"].clone(), e["request_id"].clone()), (json!("err"), json!("cap"), json!(4)));
    c.send(cmd(5, "set_param", json!({"target": "enodeb", "name": "warp", "value": 1}))).await;
    assert_eq!(c.reply().await["kind"], "unknown_param");
    c.send(cmd(6, "set_param", json!({"target": "remote", "name": "amplitude", "value": 2.0}))).await;
    assert_eq!(c.reply().await["kind"], "range");
    c.send(cmd(7, "stall_sidelink", json!({"target": "enodeb", "stall": true}))).await;
    assert_eq!(c.reply().await["kind"], "invalid_target");
    c.send(cmd(8, "set_position", json!({"position_cm": 100.0}))).await;
    assert_eq!(c.reply().await["type"], "ack");
    c.send(cmd(9, "set_mode", json!({"mode": "sidelink"}))).await;
    assert_eq!(c.reply().await["kind"], "no_coverage");
    c.send_raw("{\"type\":\"cmd\",\"request_id\":10,\"action\":\n").await;
    let e = c.reply().await;
    assert_eq!((e["kind"].clone(), e["request_id"].clone()), (json!("parse"), Value::Null));

    c.send(cmd(11, "stop", json!({}))).await;
    assert_eq!(c.reply().await["applied"], false);
    c.send(cmd(12, "snapshot", json!({}))).await;
    let snap = c.reply().await;
    assert_eq!(snap["applied"]["running"], false);
    assert_eq!(snap["applied"]["config"]["enodeb"]["tx_gain_db"], 50.0);
    let frozen = snap["applied"]["subframe"].as_u64().unwrap();
    tokio::time::sleep(Duration::from_millis(50)).await;
    c.send(cmd(13, "snapshot", json!({}))).await;
    assert_eq!(c.reply().await["applied"]["subframe"].as_u64().unwrap(), frozen);

    h.shutdown().await;
    let lines = std::fs::read_to_string(&journal).unwrap();
    // Every command that reached the session is journaled; the parse error did not.
    assert_eq!(lines.lines().count(), 12);
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["result"]["ack"], 20);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn websocket_clients_share_the_command_order() {
    let h = start(None).await;
    let stream = TcpStream::connect(h.local_addr).await.unwrap();
    let (mut ws, _) = tokio_tungstenite::client_async(format!("ws://{}/", h.local_addr), stream).await.unwrap();
    let mut tcp = Client::connect(&h).await;

    ws.send(Message::text(cmd(1, "set_telemetry_interval", json!({"interval_subframes": 10})).to_string()))
        .await
        .unwrap();
    let ack = next_ws(&mut ws).await;
    assert_eq!((ack["type"].clone(), ack["applied"].clone()), (json!("ack"), json!(10)));

    tcp.send(cmd(2, "start", json!({}))).await;
    assert_eq!(tcp.reply().await["type"], "ack");
    // Both transports see the same telemetry stream.
    let mut ws_t = next_ws(&mut ws).await;
    while ws_t["type"] != "telemetry" {
        ws_t = next_ws(&mut ws).await;
    }
    let tcp_t = tcp.telemetry().await;
    assert_eq!(ws_t["subframe_index"].as_u64().unwrap() % 10, 0);
    assert_eq!(tcp_t["subframe_index"].as_u64().unwrap() % 10, 0);

    ws.close(None).await.unwrap();
    h.shutdown().await;
}
