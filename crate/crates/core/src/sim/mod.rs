//! The relay scenario: node settings, position-to-SNR channels, the
//! subframe-clocked world, mode selection, statistics and distance sweeps.

mod channels;
mod config;
mod mode;
mod stats;
mod sweep;
mod world;

pub use channels::{ChannelSet, SnrSource};
pub use config::{ChannelConfig, Fidelity, ParamError, RadioParams, TableSource, Target, WorldConfig, PARAM_NAMES};
pub use mode::{select_mode, Mode};
pub use stats::{collect_stats, LinkStats};
pub use sweep::{crossover, parse_positions, sweep_distance, SweepRow};
pub use world::{acquire_sync, Counters, Delivered, RemoteRx, StepReport, SyncState, World, WorldCounters};
