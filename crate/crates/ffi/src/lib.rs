//! C ABI over `sidelink-core`.
//!
//! Every fallible function returns an [`SlStatus`]; on failure the message is
//! kept per thread and read back with [`sl_last_error`]. Worlds and sweeps
//! are opaque handles released with their `_free` function. Optional SNRs
//! are reported as NaN when the link is out of coverage.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sidelink_core::link::{LinkType, McsTable};
use sidelink_core::report::write_sweep_csv;
use sidelink_core::sim::{select_mode, sweep_distance, Mode, RemoteRx, SweepRow, World, WorldConfig};
use sidelink_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Decode = 3,
    Io = 4,
    Json = 5,
    Csv = 6,
    /// The request has no answer, such as a throughput below the lowest MCS.
    NotFound = 7,
    IndexOutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlLink {
    Downlink = 0,
    Sidelink = 1,
}

impl From<SlLink> for LinkType {
    fn from(l: SlLink) -> Self {
        match l {
            SlLink::Downlink => LinkType::Downlink,
            SlLink::Sidelink => LinkType::Sidelink,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlMode {
    Downlink = 0,
    Sidelink = 1,
    /// Neither link is in coverage.
    None = 2,
}

impl From<Option<Mode>> for SlMode {
    fn from(m: Option<Mode>) -> Self {
        match m {
            Some(Mode::Downlink) => SlMode::Downlink,
            Some(Mode::Sidelink) => SlMode::Sidelink,
            None => SlMode::None,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlRemoteRx {
    Booting = 0,
    Unsynchronized = 1,
    Idle = 2,
    Ok = 3,
    Error = 4,
}

impl From<RemoteRx> for SlRemoteRx {
    fn from(r: RemoteRx) -> Self {
        match r {
            RemoteRx::Booting => SlRemoteRx::Booting,
            RemoteRx::Unsynchronized => SlRemoteRx::Unsynchronized,
            RemoteRx::Idle => SlRemoteRx::Idle,
            RemoteRx::Ok => SlRemoteRx::Ok,
            RemoteRx::Error => SlRemoteRx::Error,
        }
    }
}

/// Outcome of one subframe.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlStepReport {
    pub subframe: u64,
    pub mode: SlMode,
    pub dl_snr_db: f64,
    pub sl_snr_db: f64,
    pub enodeb_mcs: u8,
    pub sidelink_mcs: u8,
    pub sidelink_sent: bool,
    pub remote_rx: SlRemoteRx,
    pub bits_delivered: u64,
    pub queue_len: u32,
}

/// Cumulative counters of a world.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlCounters {
    pub subframes: u64,
    pub emitted_tbs: u64,
    pub relay_dl_ok: u64,
    pub relay_dl_err: u64,
    pub sidelink_tx: u64,
    pub queue_drops: u64,
    pub remote_dl_ok: u64,
    pub remote_dl_err: u64,
    pub remote_sl_ok: u64,
    pub remote_sl_err: u64,
    pub delivered_tbs: u64,
    pub bits_delivered: u64,
    pub mode_switches: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlThroughput {
    pub mcs: u8,
    pub bits_per_subframe: u32,
    pub throughput_bps: u64,
}

/// Per-link statistics of one sweep position; NaN when out of coverage.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlLinkStats {
    pub mean_db: f64,
    pub std_db: f64,
    pub ci95_db: f64,
    pub min_db: f64,
    pub max_db: f64,
    /// Zero when no MCS is usable.
    pub maxtput_bps: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlSweepRow {
    pub position_cm: f64,
    pub dl: SlLinkStats,
    pub sl: SlLinkStats,
    pub selected: SlMode,
}

/// Opaque simulation world.
pub struct SlWorld(World);

/// Opaque result of a distance sweep.
pub struct SlSweep(Vec<SweepRow>);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: SlStatus, msg: impl Into<String>) -> SlStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SlStatus {
    let status = match &e {
        Error::InvalidArgument(_) => SlStatus::InvalidArgument,
        Error::Decode(_) => SlStatus::Decode,
        Error::Io(_) => SlStatus::Io,
        Error::Json(_) => SlStatus::Json,
        Error::Csv(_) => SlStatus::Csv,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `Panic` so none cross the boundary.
fn guard(f: impl FnOnce() -> Result<(), SlStatus>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SlStatus::Panic, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SlStatus> {
    if p.is_null() {
        return Err(fail(SlStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SlStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, SlStatus> {
    p.as_mut().ok_or_else(|| fail(SlStatus::NullPointer, format!("{name} is null")))
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn config_from(json: &str) -> Result<WorldConfig, SlStatus> {
    let c = if json.trim().is_empty() {
        WorldConfig::default()
    } else {
        WorldConfig::from_json(json).map_err(from_error)?
    };
    c.validate().map_err(from_error)?;
    Ok(c)
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string and returns the full message length in bytes
/// (without the terminator). A short buffer receives a truncated message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a world from a JSON scenario; an empty string selects the
/// default scenario.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_world_new(config_json: *const c_char, out: *mut *mut SlWorld) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let config = config_from(str_arg(config_json, "config_json")?)?;
        let world = World::new(config).map_err(from_error)?;
        *out = Box::into_raw(Box::new(SlWorld(world)));
        Ok(())
    })
}

/// # Safety
/// `world` must be null or a handle from [`sl_world_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_world_free(world: *mut SlWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Advances one subframe. `report` may be null.
///
/// # Safety
/// `world` must be a live handle and `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_world_step(world: *mut SlWorld, report: *mut SlStepReport) -> SlStatus {
    guard(|| {
        let w = &mut out_arg(world, "world")?.0;
        let r = w.step().map_err(from_error)?;
        if let Some(out) = report.as_mut() {
            *out = SlStepReport {
                subframe: r.subframe,
                mode: Some(r.mode).into(),
                dl_snr_db: opt(r.dl_snr_db),
                sl_snr_db: opt(r.sl_snr_db),
                enodeb_mcs: r.enodeb_mcs,
                sidelink_mcs: r.sidelink_mcs,
                sidelink_sent: r.sidelink_sent,
                remote_rx: r.remote_rx.into(),
                bits_delivered: r.bits_delivered,
                queue_len: r.queue_len as u32,
            };
        }
        Ok(())
    })
}

/// Advances `subframes` subframes without reporting them.
///
/// # Safety
/// `world` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_world_run(world: *mut SlWorld, subframes: u64) -> SlStatus {
    guard(|| {
        let w = &mut out_arg(world, "world")?.0;
        for _ in 0..subframes {
            w.step().map_err(from_error)?;
        }
        Ok(())
    })
}

/// # Safety
/// `world` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_world_counters(world: *const SlWorld, out: *mut SlCounters) -> SlStatus {
    guard(|| {
        let w = &world.as_ref().ok_or_else(|| fail(SlStatus::NullPointer, "world is null"))?.0;
        let c = w.counters();
        *out_arg(out, "out")? = SlCounters {
            subframes: c.subframes,
            emitted_tbs: c.emitted_tbs,
            relay_dl_ok: c.relay_dl.tb_ok,
            relay_dl_err: c.relay_dl.tb_err,
            sidelink_tx: c.sidelink_tx,
            queue_drops: c.queue_drops,
            remote_dl_ok: c.remote_dl.tb_ok,
            remote_dl_err: c.remote_dl.tb_err,
            remote_sl_ok: c.remote_sl.tb_ok,
            remote_sl_err: c.remote_sl.tb_err,
            delivered_tbs: c.delivered_tbs,
            bits_delivered: c.bits_delivered,
            mode_switches: c.mode_switches,
        };
        Ok(())
    })
}

/// Switches the remote UE to `mode`. `switched` (nullable) reports whether
/// the mode changed.
///
/// # Safety
/// `world` must be a live handle and `switched` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_world_set_mode(world: *mut SlWorld, mode: SlMode, switched: *mut bool) -> SlStatus {
    guard(|| {
        let w = &mut out_arg(world, "world")?.0;
        let m = match mode {
            SlMode::Downlink => Mode::Downlink,
            SlMode::Sidelink => Mode::Sidelink,
            SlMode::None => return Err(fail(SlStatus::InvalidArgument, "mode must be downlink or sidelink")),
        };
        let changed = w.switch_mode(m);
        if let Some(s) = switched.as_mut() {
            *s = changed;
        }
        Ok(())
    })
}

/// # Safety
/// `world` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_world_set_position(world: *mut SlWorld, position_cm: f64) -> SlStatus {
    guard(|| {
        let w = &mut out_arg(world, "world")?.0;
        if !position_cm.is_finite() || position_cm < 0.0 {
            return Err(fail(SlStatus::InvalidArgument, "position must be finite and non-negative"));
        }
        w.set_remote_position(position_cm);
        Ok(())
    })
}

/// Stops or resumes the relay's sidelink transmitter.
///
/// # Safety
/// `world` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_world_stall_sidelink(world: *mut SlWorld, stall: bool) -> SlStatus {
    guard(|| {
        out_arg(world, "world")?.0.stall_sidelink(stall);
        Ok(())
    })
}

/// Samples both links at `n_positions` remote positions.
///
/// # Safety
/// `config_json` must be a NUL-terminated string, `positions` must point to
/// `n_positions` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_sweep_new(
    config_json: *const c_char,
    positions: *const f64,
    n_positions: usize,
    out: *mut *mut SlSweep,
) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let config = config_from(str_arg(config_json, "config_json")?)?;
        if positions.is_null() && n_positions > 0 {
            return Err(fail(SlStatus::NullPointer, "positions is null"));
        }
        let pos = if n_positions == 0 { &[][..] } else { std::slice::from_raw_parts(positions, n_positions) };
        let rows = sweep_distance(&config, pos).map_err(from_error)?;
        *out = Box::into_raw(Box::new(SlSweep(rows)));
        Ok(())
    })
}

/// # Safety
/// `sweep` must be null or a handle from [`sl_sweep_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_sweep_free(sweep: *mut SlSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Number of rows; zero for a null handle.
///
/// # Safety
/// `sweep` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_sweep_len(sweep: *const SlSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `sweep` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_sweep_row(sweep: *const SlSweep, index: usize, out: *mut SlSweepRow) -> SlStatus {
    guard(|| {
        let rows = &sweep.as_ref().ok_or_else(|| fail(SlStatus::NullPointer, "sweep is null"))?.0;
        let r =
            rows.get(index).ok_or_else(|| fail(SlStatus::IndexOutOfRange, format!("row {index} of {}", rows.len())))?;
        let stats = |s: &Option<sidelink_core::sim::LinkStats>, t: Option<u64>| match s {
            Some(s) => SlLinkStats {
                mean_db: s.mean_db,
                std_db: s.std_db,
                ci95_db: s.ci95_db,
                min_db: s.min_db,
                max_db: s.max_db,
                maxtput_bps: t.unwrap_or(0),
            },
            None => SlLinkStats {
                mean_db: f64::NAN,
                std_db: f64::NAN,
                ci95_db: f64::NAN,
                min_db: f64::NAN,
                max_db: f64::NAN,
                maxtput_bps: 0,
            },
        };
        *out_arg(out, "out")? = SlSweepRow {
            position_cm: r.position_cm,
            dl: stats(&r.dl, r.dl_maxtput.as_ref().map(|t| t.throughput_bps)),
            sl: stats(&r.sl, r.sl_maxtput.as_ref().map(|t| t.throughput_bps)),
            selected: r.selected.into(),
        };
        Ok(())
    })
}

/// Writes the sweep as CSV to `path`.
///
/// # Safety
/// `sweep` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sl_sweep_write_csv(sweep: *const SlSweep, path: *const c_char) -> SlStatus {
    guard(|| {
        let rows = &sweep.as_ref().ok_or_else(|| fail(SlStatus::NullPointer, "sweep is null"))?.0;
        let path = str_arg(path, "path")?;
        let file = std::fs::File::create(path).map_err(|e| from_error(e.into()))?;
        write_sweep_csv(rows, std::io::BufWriter::new(file)).map_err(from_error)
    })
}

/// Transport block size in bits for `mcs` on `link` with the shipped table.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_transport_block_bits(mcs: u8, n_prb: usize, link: SlLink, out: *mut usize) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = McsTable::standard().transport_block_bits(mcs, n_prb, link.into()).map_err(from_error)?;
        Ok(())
    })
}

/// SNR threshold of `mcs` in the shipped table.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_mcs_threshold_db(mcs: u8, out: *mut f64) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = McsTable::standard().get(mcs).map_err(from_error)?.snr_threshold_db;
        Ok(())
    })
}

/// Highest zero-BLER throughput at `snr_db`; `NotFound` below the lowest MCS.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_max_throughput(
    snr_db: f64,
    n_prb: usize,
    link: SlLink,
    out: *mut SlThroughput,
) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = McsTable::standard().max_throughput(snr_db, n_prb, link.into()).ok_or_else(|| {
            fail(SlStatus::NotFound, format!("no MCS usable at {snr_db} dB on {}", LinkType::from(link)))
        })?;
        *out = SlThroughput {
            mcs: t.mcs,
            bits_per_subframe: t.bits_per_subframe as u32,
            throughput_bps: t.throughput_bps,
        };
        Ok(())
    })
}

/// Mode for mean SNRs `dl_db` and `sl_db` (NaN = out of coverage) given the
/// current mode and a hysteresis margin.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_select_mode(
    dl_db: f64,
    sl_db: f64,
    current: SlMode,
    hysteresis_db: f64,
    out: *mut SlMode,
) -> SlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let current = match current {
            SlMode::Sidelink => Mode::Sidelink,
            _ => Mode::Downlink,
        };
        let some = |x: f64| (!x.is_nan()).then_some(x);
        *out = select_mode(some(dl_db), some(sl_db), current, hysteresis_db).into();
        Ok(())
    })
}
