//! Distance to SNR: an analytic log-distance model fitted to the measured
//! tables, a replay model that resamples those tables, and AWGN for the
//! bit-true chain.

mod awgn;
mod pathloss;
mod replay;
mod tables;

pub use awgn::apply_awgn;
pub use pathloss::{effective_distance, fit_params, fit_params_with, fit_rms_db, model_snr_db, PathlossParams};
pub use replay::{replay_sample, TruncatedNormal};
pub use tables::{MeasurementRow, MeasurementTable, TableId, CI_TOLERANCE_DB, SAMPLES_PER_ROW};

/// Downlink coverage edge.
pub const DOWNLINK_COVERAGE_EDGE_CM: f64 = 256.0;
/// Default relay position, at the sidelink SNR peak of the measured tables.
pub const DEFAULT_RELAY_POSITION_CM: f64 = 200.0;
