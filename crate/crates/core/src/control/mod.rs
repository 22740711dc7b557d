//! Live control of a running simulation: an NDJSON command/telemetry
//! protocol, the engine that applies commands between subframes and the
//! network server.

mod protocol;
mod server;
mod session;

pub use protocol::{
    parse_client_line, to_line, Action, ClientMessage, Command, CommandError, ErrorKind, ParamsEcho, ServerMessage,
    TelemetryRecord,
};
pub use server::{serve, ServerConfig, ServerHandle, DEFAULT_PORT};
pub use session::{load_journal, replay, JournalEntry, Outcome, Session, DEFAULT_TELEMETRY_INTERVAL};
