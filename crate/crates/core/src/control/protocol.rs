//! Newline-delimited JSON messages. Every message is an object with a
//! `type` of `cmd` (client to server), `ack`, `err` or `telemetry`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::sim::{Mode, RadioParams, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    SetParam {
        name: String,
        value: Value,
    },
    SetMode {
        mode: Mode,
    },
    /// Moves the remote UE along the measurement line.
    SetPosition {
        position_cm: f64,
    },
    /// Holds or releases the relay's sidelink transmitter.
    StallSidelink {
        stall: bool,
    },
    SetTelemetryInterval {
        interval_subframes: u64,
    },
    Start,
    Stop,
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    #[serde(default)]
    pub request_id: Value,
    #[serde(default)]
    pub target: Option<Target>,
    #[serde(flatten)]
    pub action: Action,
}

impl Command {
    pub fn new(request_id: impl Into<Value>, target: Option<Target>, action: Action) -> Self {
        Self { request_id: request_id.into(), target, action }
    }

    pub fn set_param(request_id: impl Into<Value>, target: Target, name: &str, value: impl Into<Value>) -> Self {
        Self::new(request_id, Some(target), Action::SetParam { name: name.to_owned(), value: value.into() })
    }

    pub fn set_mode(request_id: impl Into<Value>, mode: Mode) -> Self {
        Self::new(request_id, Some(Target::Remote), Action::SetMode { mode })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    UnknownParam,
    Range,
    Cap,
    InvalidTarget,
    NoCoverage,
    /// The line was not a valid command message.
    Parse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CommandError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }
}

impl From<crate::sim::ParamError> for CommandError {
    fn from(e: crate::sim::ParamError) -> Self {
        let kind = match e {
            crate::sim::ParamError::UnknownParam(_) => ErrorKind::UnknownParam,
            crate::sim::ParamError::Range { .. } => ErrorKind::Range,
            crate::sim::ParamError::Cap { .. } => ErrorKind::Cap,
        };
        Self::new(kind, e.to_string())
    }
}

/// Node settings echoed in snapshots and telemetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub enodeb: RadioParams,
    pub relay_dl: RadioParams,
    pub relay_sl: RadioParams,
    pub remote: RadioParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    /// Subframes completed when the record was taken.
    pub subframe_index: u64,
    pub mode: Mode,
    pub dl_snr_db: Option<f64>,
    pub sl_snr_db: Option<f64>,
    /// Delivered downlink payload rate at the remote UE over the interval.
    pub throughput_bps: f64,
    /// Block error ratio at the remote UE over the interval.
    pub bler: f64,
    pub queue_depth: usize,
    pub queue_drops: u64,
    pub remote_position_cm: f64,
    pub params: ParamsEcho,
}

/// Everything the server sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ServerMessage {
    Ack {
        request_id: Value,
        /// Subframe boundary at which the command takes effect.
        subframe: u64,
        applied: Value,
    },
    Err {
        request_id: Value,
        #[serde(flatten)]
        error: CommandError,
    },
    Telemetry {
        #[serde(flatten)]
        record: TelemetryRecord,
        /// Records this client missed because it fell behind.
        dropped: u64,
    },
}

/// Everything a client sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Cmd(Command),
}

/// Parses one client line. A failure keeps the request id if one could be
/// read so the error can still be correlated.
pub fn parse_client_line(line: &str) -> Result<Command, (Value, CommandError)> {
    match serde_json::from_str::<ClientMessage>(line) {
        Ok(ClientMessage::Cmd(c)) => Ok(c),
        Err(e) => {
            let id = serde_json::from_str::<Value>(line)
                .ok()
                .and_then(|v| v.get("request_id").cloned())
                .unwrap_or(Value::Null);
            let kind = if e.to_string().contains("unknown variant") && line.contains("\"target\"") {
                ErrorKind::InvalidTarget
            } else {
                ErrorKind::Parse
            };
            Err((id, CommandError::new(kind, e.to_string())))
        }
    }
}

pub fn to_line(msg: &ServerMessage) -> String {
    serde_json::to_string(msg).expect("server messages serialize")
}
