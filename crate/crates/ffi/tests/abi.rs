use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sidelink_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { sl_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn world(json: &str) -> *mut SlWorld {
    let c = CString::new(json).unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { sl_world_new(c.as_ptr(), &mut w) }, SlStatus::Ok, "{}", last_error());
    assert!(!w.is_null());
    w
}

#[test]
fn world_runs_and_counts() {
    let w = world("");
    let mut report = unsafe { std::mem::zeroed::<SlStepReport>() };
    for _ in 0..50 {
        assert_eq!(unsafe { sl_world_step(w, &mut report) }, SlStatus::Ok);
    }
    assert_eq!(report.subframe, 49);
    assert_eq!(report.mode, SlMode::Downlink);
    assert_eq!(unsafe { sl_world_run(w, 50) }, SlStatus::Ok);
    let mut c = SlCounters::default();
    assert_eq!(unsafe { sl_world_counters(w, &mut c) }, SlStatus::Ok);
    assert_eq!(c.subframes, 100);
    assert_eq!(c.emitted_tbs, 100);
    assert!(c.bits_delivered > 0);
    unsafe { sl_world_free(w) };
}

#[test]
fn mode_switch_and_stall() {
    let w = world("");
    let mut switched = false;
    assert_eq!(unsafe { sl_world_set_mode(w, SlMode::Sidelink, &mut switched) }, SlStatus::Ok);
    assert!(switched);
    assert_eq!(unsafe { sl_world_set_mode(w, SlMode::Sidelink, &mut switched) }, SlStatus::Ok);
    assert!(!switched);
    assert_eq!(unsafe { sl_world_set_mode(w, SlMode::None, ptr::null_mut()) }, SlStatus::InvalidArgument);
    assert_eq!(unsafe { sl_world_stall_sidelink(w, true) }, SlStatus::Ok);
    assert_eq!(unsafe { sl_world_run(w, 40) }, SlStatus::Ok);
    let mut c = SlCounters::default();
    unsafe { sl_world_counters(w, &mut c) };
    assert_eq!(c.sidelink_tx, 0);
    assert!(c.relay_dl_ok > 0);
    assert_eq!(unsafe { sl_world_set_position(w, -1.0) }, SlStatus::InvalidArgument);
    assert_eq!(unsafe { sl_world_set_position(w, 120.0) }, SlStatus::Ok);
    unsafe { sl_world_free(w) };
}

#[test]
fn bad_arguments_report_errors() {
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { sl_world_new(ptr::null(), &mut w) }, SlStatus::NullPointer);
    assert!(last_error().contains("config_json"));
    let bad = CString::new("{\"seed\": \"x\"}").unwrap();
    assert_eq!(unsafe { sl_world_new(bad.as_ptr(), &mut w) }, SlStatus::Json);
    assert!(w.is_null());
    let range = CString::new("{\"remote\": {\"n_prb\": 7}}").unwrap();
    assert_eq!(unsafe { sl_world_new(range.as_ptr(), &mut w) }, SlStatus::InvalidArgument);
    assert_eq!(unsafe { sl_world_step(ptr::null_mut(), ptr::null_mut()) }, SlStatus::NullPointer);
    // Freeing null is a no-op.
    unsafe { sl_world_free(ptr::null_mut()) };
    unsafe { sl_sweep_free(ptr::null_mut()) };
    assert_eq!(unsafe { sl_sweep_len(ptr::null()) }, 0);
}

#[test]
fn last_error_truncates() {
    let mut w = ptr::null_mut();
    unsafe { sl_world_new(ptr::null(), &mut w) };
    let full = unsafe { sl_last_error(ptr::null_mut(), 0) };
    let mut buf = [1 as c_char; 4];
    assert_eq!(unsafe { sl_last_error(buf.as_mut_ptr(), buf.len()) }, full);
    assert_eq!(buf[3], 0);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 3);
}

#[test]
fn link_queries() {
    let mut bits = 0usize;
    assert_eq!(unsafe { sl_transport_block_bits(28, 25, SlLink::Downlink, &mut bits) }, SlStatus::Ok);
    assert!(bits > 0);
    assert_eq!(unsafe { sl_transport_block_bits(28, 25, SlLink::Sidelink, &mut bits) }, SlStatus::InvalidArgument);
    assert!(last_error().contains("cap"));

    let mut t0 = 0.0;
    let mut t1 = 0.0;
    unsafe { sl_mcs_threshold_db(0, &mut t0) };
    unsafe { sl_mcs_threshold_db(1, &mut t1) };
    assert!(t1 > t0);
    assert_eq!(unsafe { sl_mcs_threshold_db(200, &mut t0) }, SlStatus::InvalidArgument);

    let mut t = SlThroughput { mcs: 0, bits_per_subframe: 0, throughput_bps: 0 };
    assert_eq!(unsafe { sl_max_throughput(-50.0, 25, SlLink::Downlink, &mut t) }, SlStatus::NotFound);
    assert_eq!(unsafe { sl_max_throughput(100.0, 25, SlLink::Sidelink, &mut t) }, SlStatus::Ok);
    assert_eq!(t.throughput_bps, u64::from(t.bits_per_subframe) * 1000);

    let mut m = SlMode::None;
    unsafe { sl_select_mode(f64::NAN, 10.0, SlMode::Downlink, 3.0, &mut m) };
    assert_eq!(m, SlMode::Sidelink);
    unsafe { sl_select_mode(f64::NAN, f64::NAN, SlMode::Downlink, 3.0, &mut m) };
    assert_eq!(m, SlMode::None);
    unsafe { sl_select_mode(20.0, 21.0, SlMode::Downlink, 3.0, &mut m) };
    assert_eq!(m, SlMode::Downlink);
}

#[test]
fn sweep_rows_and_csv() {
    let cfg = CString::new("").unwrap();
    let positions = [100.0, 280.0];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { sl_sweep_new(cfg.as_ptr(), positions.as_ptr(), 2, &mut s) }, SlStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { sl_sweep_len(s) }, 2);
    let mut row = unsafe { std::mem::zeroed::<SlSweepRow>() };
    assert_eq!(unsafe { sl_sweep_row(s, 1, &mut row) }, SlStatus::Ok);
    assert_eq!(row.position_cm, 280.0);
    assert!(row.dl.mean_db.is_nan());
    assert_eq!(row.dl.maxtput_bps, 0);
    assert_eq!(row.selected, SlMode::Sidelink);
    assert_eq!(unsafe { sl_sweep_row(s, 2, &mut row) }, SlStatus::IndexOutOfRange);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { sl_sweep_write_csv(s, cpath.as_ptr()) }, SlStatus::Ok);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("position_cm,"));
    let missing = CString::new(dir.path().join("no/such/dir.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { sl_sweep_write_csv(s, missing.as_ptr()) }, SlStatus::Io);
    unsafe { sl_sweep_free(s) };
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/sidelink.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    for f in [
        "sl_last_error",
        "sl_version",
        "sl_world_new",
        "sl_world_free",
        "sl_world_step",
        "sl_world_run",
        "sl_world_counters",
        "sl_world_set_mode",
        "sl_world_set_position",
        "sl_world_stall_sidelink",
        "sl_sweep_new",
        "sl_sweep_free",
        "sl_sweep_len",
        "sl_sweep_row",
        "sl_sweep_write_csv",
        "sl_transport_block_bits",
        "sl_mcs_threshold_db",
        "sl_max_throughput",
        "sl_select_mode",
    ] {
        assert!(h.contains(&format!(" {f}(")) || h.contains(&format!("*{f}(")), "{f} missing from header");
    }
    assert!(h.contains("typedef struct SlWorld SlWorld;"));
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "sidelink.h"

int main(void) {
    SlWorld *w = NULL;
    if (sl_world_new("{\"seed\": 3}", &w) != SL_STATUS_OK) return 1;
    SlStepReport r;
    for (int i = 0; i < 20; i++)
        if (sl_world_step(w, &r) != SL_STATUS_OK) return 2;
    SlCounters c;
    sl_world_counters(w, &c);
    sl_world_free(w);
    if (c.subframes != 20 || r.subframe != 19) return 3;
    if (sl_world_new("{", &w) != SL_STATUS_JSON || w != NULL) return 4;
    char msg[128];
    if (sl_last_error(msg, sizeof msg) == 0) return 5;
    size_t bits = 0;
    if (sl_transport_block_bits(0, 25, SL_LINK_SIDELINK, &bits) != SL_STATUS_OK || bits == 0) return 6;
    printf("%llu %zu\n", (unsigned long long)c.emitted_tbs, bits);
    return 0;
}
"#;

/// Compiles a C program against the header and static library when a C
/// compiler and the archive are available.
#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    // tests/ binaries live in <target>/<profile>/deps.
    let exe = std::env::current_exe().unwrap();
    let archive = exe.parent().unwrap().parent().unwrap().join("libsidelink_ffi.a");
    if !archive.exists() {
        eprintln!("{} not built; skipped", archive.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).split_whitespace().next(), Some("20"));
}
