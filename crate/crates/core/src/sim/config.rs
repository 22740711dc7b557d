use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Mode;
use crate::channel::{PathlossParams, DEFAULT_RELAY_POSITION_CM};
use crate::error::{invalid, Result};
use crate::link::{LinkType, McsTable};
use crate::phy::numerology::SUPPORTED_PRBS;

pub const DEFAULT_FREQUENCY_HZ: u64 = 2_600_000_000;
pub const FREQUENCY_RANGE_HZ: (u64, u64) = (70_000_000, 6_000_000_000);
pub const TX_GAIN_RANGE_DB: (f64, f64) = (0.0, 90.0);
pub const RX_GAIN_RANGE_DB: (f64, f64) = (0.0, 76.0);
pub const MAX_CELL_ID: u16 = 503;
pub const RNTI_RANGE: (u16, u16) = (1, 65523);

/// Tunable radio settings of one node (or one half of the relay).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub frequency_hz: u64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub n_prb: usize,
    /// Baseband scale in (0, 1]; shifts SNR by 20·log10(amplitude).
    pub amplitude: f64,
    pub mcs_index: u8,
    pub cell_id: u16,
    pub rnti: u16,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            frequency_hz: DEFAULT_FREQUENCY_HZ,
            tx_gain_db: 40.0,
            rx_gain_db: 30.0,
            n_prb: 25,
            amplitude: 1.0,
            mcs_index: 8,
            cell_id: 1,
            rnti: 61,
        }
    }
}

/// Node (or relay half) a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Enodeb,
    RelayDl,
    RelaySl,
    Remote,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::Enodeb, Target::RelayDl, Target::RelaySl, Target::Remote];

    /// Link whose MCS cap applies to this target's `mcs_index`.
    pub fn link(self) -> LinkType {
        match self {
            Target::RelaySl => LinkType::Sidelink,
            _ => LinkType::Downlink,
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Target::Enodeb => "enodeb",
            Target::RelayDl => "relay_dl",
            Target::RelaySl => "relay_sl",
            Target::Remote => "remote",
        })
    }
}

/// Why a parameter update was refused.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("unknown parameter '{0}'")]
    UnknownParam(String),
    #[error("{name}: {detail}")]
    Range { name: String, detail: String },
    #[error("MCS {mcs} exceeds the {link} modulation cap")]
    Cap { mcs: u8, link: LinkType },
}

impl ParamError {
    /// Short machine-readable kind.
    pub fn kind(&self) -> &'static str {
        match self {
            ParamError::UnknownParam(_) => "unknown_param",
            ParamError::Range { .. } => "range",
            ParamError::Cap { .. } => "cap",
        }
    }
}

fn range(name: &str, detail: impl Into<String>) -> ParamError {
    ParamError::Range { name: name.to_owned(), detail: detail.into() }
}

fn as_f64(name: &str, v: &serde_json::Value) -> std::result::Result<f64, ParamError> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| range(name, format!("expected a number, got {v}")))
}

fn as_u64(name: &str, v: &serde_json::Value) -> std::result::Result<u64, ParamError> {
    match v.as_u64() {
        Some(x) => Ok(x),
        None => match v.as_f64() {
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 => Ok(x as u64),
            _ => Err(range(name, format!("expected a non-negative integer, got {v}"))),
        },
    }
}

fn in_range(name: &str, x: f64, (lo, hi): (f64, f64)) -> std::result::Result<f64, ParamError> {
    if (lo..=hi).contains(&x) {
        Ok(x)
    } else {
        Err(range(name, format!("{x} outside [{lo}, {hi}]")))
    }
}

pub const PARAM_NAMES: [&str; 8] =
    ["frequency_hz", "tx_gain_db", "rx_gain_db", "n_prb", "amplitude", "mcs_index", "cell_id", "rnti"];

impl RadioParams {
    /// Validates `value` for `name` on `target` and returns the updated set.
    pub fn with_param(
        &self,
        target: Target,
        name: &str,
        value: &serde_json::Value,
        table: &McsTable,
    ) -> std::result::Result<RadioParams, ParamError> {
        let mut p = *self;
        match name {
            "frequency_hz" => {
                let f = as_u64(name, value)?;
                if !(FREQUENCY_RANGE_HZ.0..=FREQUENCY_RANGE_HZ.1).contains(&f) {
                    return Err(range(name, format!("{f} Hz outside 70 MHz to 6 GHz")));
                }
                p.frequency_hz = f;
            }
            "tx_gain_db" => p.tx_gain_db = in_range(name, as_f64(name, value)?, TX_GAIN_RANGE_DB)?,
            "rx_gain_db" => p.rx_gain_db = in_range(name, as_f64(name, value)?, RX_GAIN_RANGE_DB)?,
            "n_prb" => {
                let n = as_u64(name, value)? as usize;
                if !SUPPORTED_PRBS.iter().any(|&(prb, _)| prb == n) {
                    return Err(range(name, format!("{n} is not a supported bandwidth")));
                }
                p.n_prb = n;
            }
            "amplitude" => {
                let a = as_f64(name, value)?;
                if !(a > 0.0 && a <= 1.0) {
                    return Err(range(name, format!("{a} outside (0, 1]")));
                }
                p.amplitude = a;
            }
            "mcs_index" => {
                let m = as_u64(name, value)?;
                if m > u64::from(table.max_index(LinkType::Downlink)) {
                    return Err(range(name, format!("{m} outside 0..={}", table.max_index(LinkType::Downlink))));
                }
                let m = m as u8;
                if table.for_link(m, target.link()).is_err() {
                    return Err(ParamError::Cap { mcs: m, link: target.link() });
                }
                p.mcs_index = m;
            }
            "cell_id" => {
                let c = as_u64(name, value)?;
                if c > u64::from(MAX_CELL_ID) {
                    return Err(range(name, format!("{c} outside 0..={MAX_CELL_ID}")));
                }
                p.cell_id = c as u16;
            }
            "rnti" => {
                let r = as_u64(name, value)?;
                if !(u64::from(RNTI_RANGE.0)..=u64::from(RNTI_RANGE.1)).contains(&r) {
                    return Err(range(name, format!("{r} outside {}..={}", RNTI_RANGE.0, RNTI_RANGE.1)));
                }
                p.rnti = r as u16;
            }
            other => return Err(ParamError::UnknownParam(other.to_owned())),
        }
        Ok(p)
    }

    /// Current value of `name` as JSON.
    pub fn get(&self, name: &str) -> Option<serde_json::Value> {
        serde_json::to_value(self).ok()?.get(name).cloned()
    }

    /// Checks every field, as `with_param` would.
    pub fn validate(&self, target: Target, table: &McsTable) -> std::result::Result<(), ParamError> {
        for name in PARAM_NAMES {
            let v = self.get(name).expect("field exists");
            self.with_param(target, name, &v, table)?;
        }
        Ok(())
    }
}

/// How SNR is produced from position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ChannelConfig {
    /// Resample the measured tables. Custom CSV tables, if given, replace
    /// the embedded ones for their link.
    Replay {
        #[serde(default)]
        tables: Vec<TableSource>,
    },
    /// Log-distance model; parameters not given are fitted to the
    /// embedded tables (downlink: 55 dB table, sidelink: 40 dB table).
    Analytic {
        #[serde(default)]
        downlink: Option<PathlossParams>,
        #[serde(default)]
        sidelink: Option<PathlossParams>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSource {
    pub path: PathBuf,
    pub link: LinkType,
    pub tx_gain_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    /// SNR → BLER model, no waveforms.
    Abstract,
    /// Full grids, OFDM and AWGN per transport block.
    BitTrue,
}

/// Scenario: geometry, channel, node settings and run controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub remote_position_cm: f64,
    pub relay_position_cm: f64,
    pub channel: ChannelConfig,
    pub enodeb: RadioParams,
    pub relay_dl: RadioParams,
    pub relay_sl: RadioParams,
    pub remote: RadioParams,
    pub seed: u64,
    pub fidelity: Fidelity,
    pub initial_mode: Mode,
    /// Re-run mode selection every `mode_window` subframes.
    pub auto_mode: bool,
    pub mode_window: u64,
    pub hysteresis_db: f64,
    pub boot_latency: u64,
    pub queue_depth: usize,
    /// Pick each transmitter's MCS from the current SNR each subframe.
    pub link_adaptation: bool,
    /// Custom MCS table (JSON); the calibrated table otherwise.
    pub mcs_table: Option<PathBuf>,
    /// SNR samples per position in sweeps.
    pub samples_per_position: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            remote_position_cm: 200.0,
            relay_position_cm: DEFAULT_RELAY_POSITION_CM,
            channel: ChannelConfig::Replay { tables: Vec::new() },
            enodeb: RadioParams { tx_gain_db: 55.0, ..RadioParams::default() },
            relay_dl: RadioParams::default(),
            relay_sl: RadioParams { tx_gain_db: 40.0, mcs_index: 11, ..RadioParams::default() },
            remote: RadioParams::default(),
            seed: 1,
            fidelity: Fidelity::Abstract,
            initial_mode: Mode::Downlink,
            auto_mode: false,
            mode_window: 100,
            hysteresis_db: 3.0,
            boot_latency: 5,
            queue_depth: 8,
            link_adaptation: false,
            mcs_table: None,
            samples_per_position: 1000,
        }
    }
}

impl WorldConfig {
    /// Replay channels with the sidelink transmitter at `sidelink_gain_db`.
    pub fn replay(sidelink_gain_db: f64) -> Self {
        let mut c = Self::default();
        c.relay_sl.tx_gain_db = sidelink_gain_db;
        c
    }

    pub fn analytic() -> Self {
        Self { channel: ChannelConfig::Analytic { downlink: None, sidelink: None }, ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn mcs_table(&self) -> Result<McsTable> {
        match &self.mcs_table {
            Some(path) => McsTable::load(path),
            None => Ok(McsTable::standard().clone()),
        }
    }

    pub fn params(&self, target: Target) -> &RadioParams {
        match target {
            Target::Enodeb => &self.enodeb,
            Target::RelayDl => &self.relay_dl,
            Target::RelaySl => &self.relay_sl,
            Target::Remote => &self.remote,
        }
    }

    pub fn params_mut(&mut self, target: Target) -> &mut RadioParams {
        match target {
            Target::Enodeb => &mut self.enodeb,
            Target::RelayDl => &mut self.relay_dl,
            Target::RelaySl => &mut self.relay_sl,
            Target::Remote => &mut self.remote,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos_ok = |x: f64| x.is_finite() && x >= 0.0;
        if !pos_ok(self.remote_position_cm) || !pos_ok(self.relay_position_cm) {
            return invalid("positions must be finite and non-negative");
        }
        if !(self.hysteresis_db >= 0.0) {
            return invalid("hysteresis_db must be non-negative");
        }
        if self.queue_depth == 0 || self.mode_window == 0 || self.samples_per_position == 0 {
            return invalid("queue_depth, mode_window and samples_per_position must be positive");
        }
        let table = self.mcs_table()?;
        for t in Target::ALL {
            if let Err(e) = self.params(t).validate(t, &table) {
                return invalid(format!("{t}: {e}"));
            }
        }
        if let ChannelConfig::Analytic { downlink, sidelink } = &self.channel {
            for p in downlink.iter().chain(sidelink) {
                p.validate()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = WorldConfig::default();
        c.validate().unwrap();
        assert_eq!(WorldConfig::from_json(&c.to_json()).unwrap(), c);
        let partial = WorldConfig::from_json(r#"{"seed": 9, "relay_sl": {"tx_gain_db": 30}}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.relay_sl.tx_gain_db, 30.0);
        assert_eq!(partial.relay_sl.n_prb, 25);
        assert!(WorldConfig::from_json(r#"{"sed": 9}"#).is_err());
        assert!(WorldConfig::from_json(r#"{"remote_position_cm": -1}"#).is_err());
    }

    #[test]
    fn param_validation_kinds() {
        let t = McsTable::standard();
        let p = RadioParams::default();
        assert_eq!(p.with_param(Target::Enodeb, "tx_gain_db", &json!(55), t).unwrap().tx_gain_db, 55.0);
        assert_eq!(p.with_param(Target::RelaySl, "mcs_index", &json!(22), t).unwrap_err().kind(), "cap");
        assert_eq!(p.with_param(Target::Enodeb, "mcs_index", &json!(22), t).unwrap().mcs_index, 22);
        assert_eq!(p.with_param(Target::Enodeb, "mcs_index", &json!(29), t).unwrap_err().kind(), "range");
        assert_eq!(p.with_param(Target::Enodeb, "gain", &json!(1), t).unwrap_err().kind(), "unknown_param");
        assert_eq!(p.with_param(Target::Enodeb, "amplitude", &json!(0), t).unwrap_err().kind(), "range");
        assert_eq!(p.with_param(Target::Enodeb, "n_prb", &json!(24), t).unwrap_err().kind(), "range");
        assert_eq!(p.with_param(Target::Enodeb, "rnti", &json!(0), t).unwrap_err().kind(), "range");
        assert_eq!(p.with_param(Target::Enodeb, "cell_id", &json!(504), t).unwrap_err().kind(), "range");
        assert_eq!(p.with_param(Target::Enodeb, "frequency_hz", &json!(1e9), t).unwrap().frequency_hz, 1_000_000_000);
        assert_eq!(p.with_param(Target::Enodeb, "tx_gain_db", &json!("x"), t).unwrap_err().kind(), "range");
        assert_eq!(p.get("n_prb"), Some(json!(25)));
    }
}
