//! LTE Release-12 sidelink relay simulator.
//!
//! The crate is layered bottom-up:
//!
//! * [`phy`] holds the baseband: DFT precoding, resource-grid mapping, OFDM with
//!   cyclic prefix, channel coding, modulation, the sidelink (PSCCH/PSSCH) and
//!   downlink (PDSCH) subframe chains and synchronization sequences.
//! * [`link`] gives MCS semantics: transport block sizes, SNR thresholds, the
//!   abstract BLER model and the max-throughput-at-zero-BLER search.
//! * [`channel`] maps remote-UE position to SNR, either through a fitted
//!   log-distance model or by resampling the measured SNR tables.
//! * [`sim`] runs the eNodeB, relay UE and remote UE on a 1 ms subframe clock,
//!   including mode selection and distance sweeps.
//! * [`control`] wraps a running simulation in a command/telemetry service.
//! * [`calibrate`] ties the MCS thresholds to the bit-true chain.

pub mod calibrate;
pub mod channel;
pub mod control;
pub mod error;
pub mod link;
pub mod phy;
pub mod report;
pub mod sim;

pub use error::{DecodeFailure, Error, Result};
