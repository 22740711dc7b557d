//! Baseband physical layer.

pub mod crc;
pub mod dft;
pub mod estimate;
pub mod fec;
pub mod grid;
pub mod modulation;
pub mod numerology;
pub mod ofdm;
pub mod pdsch;
pub mod pssch;
pub mod refs;
pub mod sci;
pub mod scramble;
pub mod sync;

pub use num_complex::Complex64;

pub use dft::{dft_precode, idft_despread};
pub use estimate::{estimate_channel, estimate_snr, measure_papr, ChannelEstimate};
pub use grid::ResourceGrid;
pub use numerology::Numerology;
pub use ofdm::{ofdm_demodulate, ofdm_modulate, SampleBuffer};
pub use pdsch::{build_pdsch_subframe, decode_pdsch_subframe, PdschDecode};
pub use pssch::{build_pscch, build_pssch_subframe, decode_pscch, decode_pssch_subframe, PsschDecode};
pub use sci::{decode_sci, encode_sci, Sci};
pub use sync::{build_beacon, detect_sync, generate_sync, read_beacon_tag, SyncOutcome, SyncSequence};

/// Transport block: payload bits plus the CRC-24A computed over them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportBlock {
    pub payload: Vec<u8>,
    pub crc: u32,
}

impl TransportBlock {
    /// Payload followed by the 24 CRC bits, MSB first.
    pub fn to_bits(&self) -> Vec<u8> {
        let mut bits = self.payload.clone();
        bits.extend(crc::u32_to_bits(self.crc, 24));
        bits
    }
}

/// Appends CRC-24A to `payload`. Bits are `0`/`1` bytes.
pub fn attach_crc(payload: &[u8]) -> TransportBlock {
    TransportBlock { payload: payload.to_vec(), crc: crc::crc24a(payload) }
}

pub fn check_crc(tb: &TransportBlock) -> bool {
    crc::crc24a(&tb.payload) == tb.crc
}
