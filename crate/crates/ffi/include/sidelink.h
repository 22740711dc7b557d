#ifndef SIDELINK_H
#define SIDELINK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_DECODE = 3,
  SL_STATUS_IO = 4,
  SL_STATUS_JSON = 5,
  SL_STATUS_CSV = 6,
  // The request has no answer, such as a throughput below the lowest MCS.
  SL_STATUS_NOT_FOUND = 7,
  SL_STATUS_INDEX_OUT_OF_RANGE = 8,
  SL_STATUS_PANIC = 9,
} SlStatus;

typedef enum SlMode {
  SL_MODE_DOWNLINK = 0,
  SL_MODE_SIDELINK = 1,
  // Neither link is in coverage.
  SL_MODE_NONE = 2,
} SlMode;

typedef enum SlRemoteRx {
  SL_REMOTE_RX_BOOTING = 0,
  SL_REMOTE_RX_UNSYNCHRONIZED = 1,
  SL_REMOTE_RX_IDLE = 2,
  SL_REMOTE_RX_OK = 3,
  SL_REMOTE_RX_ERROR = 4,
} SlRemoteRx;

typedef enum SlLink {
  SL_LINK_DOWNLINK = 0,
  SL_LINK_SIDELINK = 1,
} SlLink;

// Opaque result of a distance sweep.
typedef struct SlSweep SlSweep;

// Opaque simulation world.
typedef struct SlWorld SlWorld;

// Outcome of one subframe.
typedef struct SlStepReport {
  uint64_t subframe;
  enum SlMode mode;
  double dl_snr_db;
  double sl_snr_db;
  uint8_t enodeb_mcs;
  uint8_t sidelink_mcs;
  bool sidelink_sent;
  enum SlRemoteRx remote_rx;
  uint64_t bits_delivered;
  uint32_t queue_len;
} SlStepReport;

// Cumulative counters of a world.
typedef struct SlCounters {
  uint64_t subframes;
  uint64_t emitted_tbs;
  uint64_t relay_dl_ok;
  uint64_t relay_dl_err;
  uint64_t sidelink_tx;
  uint64_t queue_drops;
  uint64_t remote_dl_ok;
  uint64_t remote_dl_err;
  uint64_t remote_sl_ok;
  uint64_t remote_sl_err;
  uint64_t delivered_tbs;
  uint64_t bits_delivered;
  uint64_t mode_switches;
} SlCounters;

// Per-link statistics of one sweep position; NaN when out of coverage.
typedef struct SlLinkStats {
  double mean_db;
  double std_db;
  double ci95_db;
  double min_db;
  double max_db;
  // Zero when no MCS is usable.
  uint64_t maxtput_bps;
} SlLinkStats;

typedef struct SlSweepRow {
  double position_cm;
  struct SlLinkStats dl;
  struct SlLinkStats sl;
  enum SlMode selected;
} SlSweepRow;

typedef struct SlThroughput {
  uint8_t mcs;
  uint32_t bits_per_subframe;
  uint64_t throughput_bps;
} SlThroughput;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` as a
// NUL-terminated string and returns the full message length in bytes
// (without the terminator). A short buffer receives a truncated message.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t sl_last_error(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *sl_version(void);

// Creates a world from a JSON scenario; an empty string selects the
// default scenario.
//
// # Safety
// `config_json` must be a NUL-terminated string and `out` a valid pointer.
enum SlStatus sl_world_new(const char *config_json, struct SlWorld **out);

// # Safety
// `world` must be null or a handle from [`sl_world_new`] not yet freed.
void sl_world_free(struct SlWorld *world);

// Advances one subframe. `report` may be null.
//
// # Safety
// `world` must be a live handle and `report` null or valid.
enum SlStatus sl_world_step(struct SlWorld *world, struct SlStepReport *report);

// Advances `subframes` subframes without reporting them.
//
// # Safety
// `world` must be a live handle.
enum SlStatus sl_world_run(struct SlWorld *world, uint64_t subframes);

// # Safety
// `world` must be a live handle and `out` valid.
enum SlStatus sl_world_counters(const struct SlWorld *world, struct SlCounters *out);

// Switches the remote UE to `mode`. `switched` (nullable) reports whether
// the mode changed.
//
// # Safety
// `world` must be a live handle and `switched` null or valid.
enum SlStatus sl_world_set_mode(struct SlWorld *world, enum SlMode mode, bool *switched);

// # Safety
// `world` must be a live handle.
enum SlStatus sl_world_set_position(struct SlWorld *world, double position_cm);

// Stops or resumes the relay's sidelink transmitter.
//
// # Safety
// `world` must be a live handle.
enum SlStatus sl_world_stall_sidelink(struct SlWorld *world, bool stall);

// Samples both links at `n_positions` remote positions.
//
// # Safety
// `config_json` must be a NUL-terminated string, `positions` must point to
// `n_positions` values and `out` must be valid.
enum SlStatus sl_sweep_new(const char *config_json,
                           const double *positions,
                           uintptr_t n_positions,
                           struct SlSweep **out);

// # Safety
// `sweep` must be null or a handle from [`sl_sweep_new`] not yet freed.
void sl_sweep_free(struct SlSweep *sweep);

// Number of rows; zero for a null handle.
//
// # Safety
// `sweep` must be null or a live handle.
uintptr_t sl_sweep_len(const struct SlSweep *sweep);

// # Safety
// `sweep` must be a live handle and `out` valid.
enum SlStatus sl_sweep_row(const struct SlSweep *sweep, uintptr_t index, struct SlSweepRow *out);

// Writes the sweep as CSV to `path`.
//
// # Safety
// `sweep` must be a live handle and `path` a NUL-terminated string.
enum SlStatus sl_sweep_write_csv(const struct SlSweep *sweep, const char *path);

// Transport block size in bits for `mcs` on `link` with the shipped table.
//
// # Safety
// `out` must be valid.
enum SlStatus sl_transport_block_bits(uint8_t mcs,
                                      uintptr_t n_prb,
                                      enum SlLink link,
                                      uintptr_t *out);

// SNR threshold of `mcs` in the shipped table.
//
// # Safety
// `out` must be valid.
enum SlStatus sl_mcs_threshold_db(uint8_t mcs, double *out);

// Highest zero-BLER throughput at `snr_db`; `NotFound` below the lowest MCS.
//
// # Safety
// `out` must be valid.
enum SlStatus sl_max_throughput(double snr_db,
                                uintptr_t n_prb,
                                enum SlLink link,
                                struct SlThroughput *out);

// Mode for mean SNRs `dl_db` and `sl_db` (NaN = out of coverage) given the
// current mode and a hysteresis margin.
//
// # Safety
// `out` must be valid.
enum SlStatus sl_select_mode(double dl_db,
                             double sl_db,
                             enum SlMode current,
                             double hysteresis_db,
                             enum SlMode *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIDELINK_H */
