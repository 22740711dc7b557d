//! The simulation-owning engine: validates commands, applies them between
//! subframes, journals them and produces telemetry.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::protocol::{Action, Command, CommandError, ErrorKind, ParamsEcho, ServerMessage, TelemetryRecord};
use crate::error::{invalid, Result};
use crate::sim::{Mode, Target, World, WorldConfig, WorldCounters};

pub const DEFAULT_TELEMETRY_INTERVAL: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ack(Value),
    Err(CommandError),
}

/// One journal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    /// Wall-clock seconds since the Unix epoch.
    pub timestamp: f64,
    /// Subframe boundary at which the command was applied.
    pub subframe: u64,
    pub cmd: Command,
    pub result: Outcome,
}

pub fn load_journal(path: impl AsRef<Path>) -> Result<Vec<JournalEntry>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct Session {
    world: World,
    running: bool,
    interval: u64,
    mark: (u64, WorldCounters),
    last_snr: (Option<f64>, Option<f64>),
    journal_path: Option<PathBuf>,
    journal: Option<File>,
}

impl Session {
    pub fn new(config: WorldConfig) -> Result<Self> {
        Ok(Self {
            world: World::new(config)?,
            running: true,
            interval: DEFAULT_TELEMETRY_INTERVAL,
            mark: (0, WorldCounters::default()),
            last_snr: (None, None),
            journal_path: None,
            journal: None,
        })
    }

    /// Appends every command to `path`; the file is created on the first one.
    pub fn with_journal(mut self, path: impl Into<PathBuf>) -> Self {
        self.journal_path = Some(path.into());
        self
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn running(&self) -> bool {
        self.running
    }

    pub fn telemetry_interval(&self) -> u64 {
        self.interval
    }

    pub fn set_telemetry_interval(&mut self, interval: u64) -> Result<()> {
        if interval == 0 {
            return invalid("telemetry interval must be positive");
        }
        self.interval = interval;
        Ok(())
    }

    fn params_echo(&self) -> ParamsEcho {
        let c = self.world.config();
        ParamsEcho { enodeb: c.enodeb, relay_dl: c.relay_dl, relay_sl: c.relay_sl, remote: c.remote }
    }

    pub fn snapshot(&self) -> Value {
        json!({
            "subframe": self.world.subframe(),
            "running": self.running,
            "mode": self.world.mode(),
            "telemetry_interval": self.interval,
            "relay_sync": self.world.relay_sync(),
            "remote_sync": self.world.remote_sync(),
            "queue_depth": self.world.queue_len(),
            "sidelink_stalled": self.world.sidelink_stalled(),
            "counters": self.world.counters(),
            "config": self.world.config(),
        })
    }

    fn apply(&mut self, cmd: &Command) -> std::result::Result<Value, CommandError> {
        let target_err = |t: Option<Target>| {
            CommandError::new(
                ErrorKind::InvalidTarget,
                match t {
                    Some(t) => format!("command does not apply to {t}"),
                    None => "command needs a target".to_owned(),
                },
            )
        };
        match &cmd.action {
            Action::SetParam { name, value } => {
                let target = cmd.target.ok_or_else(|| target_err(None))?;
                let current = *self.world.config().params(target);
                let updated = current.with_param(target, name, value, self.world.table())?;
                self.world.set_params(target, updated);
                Ok(updated.get(name).unwrap_or(Value::Null))
            }
            Action::SetMode { mode } => {
                if !matches!(cmd.target, None | Some(Target::Remote)) {
                    return Err(target_err(cmd.target));
                }
                let c = self.world.config();
                let tx = match mode {
                    Mode::Downlink => &c.enodeb,
                    Mode::Sidelink => &c.relay_sl,
                };
                if self.world.channels().source(mode.link(), c.remote_position_cm, tx).is_none() {
                    return Err(CommandError::new(
                        ErrorKind::NoCoverage,
                        format!("no {} coverage at {} cm", mode.link(), c.remote_position_cm),
                    ));
                }
                let switched = self.world.switch_mode(*mode);
                Ok(json!({ "mode": mode, "switched": switched }))
            }
            Action::SetPosition { position_cm } => {
                if !matches!(cmd.target, None | Some(Target::Remote)) {
                    return Err(target_err(cmd.target));
                }
                if !(position_cm.is_finite() && *position_cm >= 0.0) {
                    return Err(CommandError::new(ErrorKind::Range, format!("position {position_cm} must be >= 0")));
                }
                self.world.set_remote_position(*position_cm);
                Ok(json!(position_cm))
            }
            Action::StallSidelink { stall } => {
                if !matches!(cmd.target, None | Some(Target::RelaySl)) {
                    return Err(target_err(cmd.target));
                }
                self.world.stall_sidelink(*stall);
                Ok(json!(stall))
            }
            Action::SetTelemetryInterval { interval_subframes } => {
                self.set_telemetry_interval(*interval_subframes)
                    .map_err(|e| CommandError::new(ErrorKind::Range, e.to_string()))?;
                Ok(json!(interval_subframes))
            }
            Action::Start => {
                self.running = true;
                Ok(json!(true))
            }
            Action::Stop => {
                self.running = false;
                Ok(json!(false))
            }
            Action::Snapshot => Ok(self.snapshot()),
        }
    }

    /// Validates and applies `cmd` at the current subframe boundary.
    pub fn submit(&mut self, cmd: Command) -> ServerMessage {
        let subframe = self.world.subframe();
        let outcome = match self.apply(&cmd) {
            Ok(v) => Outcome::Ack(v),
            Err(e) => Outcome::Err(e),
        };
        if let Err(e) = self.journal_entry(subframe, &cmd, &outcome) {
            log::warn!("journal write failed: {e}");
        }
        match outcome {
            Outcome::Ack(applied) => ServerMessage::Ack { request_id: cmd.request_id, subframe, applied },
            Outcome::Err(error) => ServerMessage::Err { request_id: cmd.request_id, error },
        }
    }

    fn journal_entry(&mut self, subframe: u64, cmd: &Command, result: &Outcome) -> Result<()> {
        let Some(path) = &self.journal_path else { return Ok(()) };
        if self.journal.is_none() {
            self.journal = Some(OpenOptions::new().create(true).append(true).open(path)?);
        }
        let entry = JournalEntry {
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
            subframe,
            cmd: cmd.clone(),
            result: result.clone(),
        };
        let file = self.journal.as_mut().expect("opened above");
        writeln!(file, "{}", serde_json::to_string(&entry)?)?;
        file.flush()?;
        Ok(())
    }

    /// Runs one subframe; returns a record when an interval completes.
    pub fn step(&mut self) -> Result<Option<TelemetryRecord>> {
        let report = self.world.step()?;
        self.last_snr = (report.dl_snr_db, report.sl_snr_db);
        let now = self.world.subframe();
        if now - self.mark.0 < self.interval {
            return Ok(None);
        }
        let c = *self.world.counters();
        let (t0, c0) = self.mark;
        let frames = (now - t0) as f64;
        let ok = c.remote_dl.tb_ok + c.remote_sl.tb_ok - c0.remote_dl.tb_ok - c0.remote_sl.tb_ok;
        let err = c.remote_dl.tb_err + c.remote_sl.tb_err - c0.remote_dl.tb_err - c0.remote_sl.tb_err;
        self.mark = (now, c);
        Ok(Some(TelemetryRecord {
            subframe_index: now,
            mode: self.world.mode(),
            dl_snr_db: self.last_snr.0,
            sl_snr_db: self.last_snr.1,
            throughput_bps: (c.bits_delivered - c0.bits_delivered) as f64 * 1000.0 / frames,
            bler: if ok + err == 0 { 0.0 } else { err as f64 / (ok + err) as f64 },
            queue_depth: self.world.queue_len(),
            queue_drops: c.queue_drops,
            remote_position_cm: self.world.config().remote_position_cm,
            params: self.params_echo(),
        }))
    }
}

/// Re-runs a journaled session for `subframes` subframes and returns its
/// telemetry. Commands are re-applied at the boundaries they were recorded at.
pub fn replay(config: WorldConfig, journal: &[JournalEntry], subframes: u64) -> Result<Vec<TelemetryRecord>> {
    let mut session = Session::new(config)?;
    let mut pending = journal.iter().peekable();
    let mut out = Vec::new();
    for t in 0..subframes {
        while let Some(e) = pending.next_if(|e| e.subframe <= t) {
            session.submit(e.cmd.clone());
        }
        out.extend(session.step()?);
    }
    Ok(out)
}
