//! Sidelink control information and its 40-bit wire format.
//!
//! Layout (MSB first): 5-bit MCS, 8-bit group destination ID, 7-bit RB
//! offset, 7-bit RB length, 1-bit hopping flag, 4 reserved zero bits, CRC-8.

use serde::{Deserialize, Serialize};

use super::crc::{bits_to_u32, crc8, u32_to_bits};
use crate::error::{invalid, DecodeFailure, Result};

pub const SCI_PAYLOAD_BITS: usize = 32;
pub const SCI_BITS: usize = SCI_PAYLOAD_BITS + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sci {
    pub mcs_index: u8,
    pub group_dest_id: u8,
    pub rb_offset: u8,
    pub rb_length: u8,
    /// Carried on the wire; frequency hopping itself is not performed.
    pub hopping: bool,
}

impl Sci {
    /// Single-pair allocation spanning the whole channel.
    pub fn full_allocation(mcs_index: u8, group_dest_id: u8, n_prb: usize) -> Self {
        Self { mcs_index, group_dest_id, rb_offset: 0, rb_length: n_prb as u8, hopping: false }
    }
}

pub fn encode_sci(sci: &Sci) -> Result<Vec<u8>> {
    if sci.mcs_index > 31 {
        return invalid(format!("SCI MCS {} does not fit 5 bits", sci.mcs_index));
    }
    if sci.rb_offset > 127 || sci.rb_length > 127 || sci.rb_length == 0 {
        return invalid(format!("SCI RB assignment ({}, {}) out of range", sci.rb_offset, sci.rb_length));
    }
    let word = (u32::from(sci.mcs_index) << 27)
        | (u32::from(sci.group_dest_id) << 19)
        | (u32::from(sci.rb_offset) << 12)
        | (u32::from(sci.rb_length) << 5)
        | (u32::from(sci.hopping) << 4);
    let mut bits: Vec<u8> = u32_to_bits(word, SCI_PAYLOAD_BITS).collect();
    let crc = crc8(&bits);
    bits.extend(u32_to_bits(crc, 8));
    Ok(bits)
}

pub fn decode_sci(bits: &[u8]) -> std::result::Result<Sci, DecodeFailure> {
    if bits.len() != SCI_BITS {
        return Err(DecodeFailure::ControlInvalid);
    }
    let (payload, crc) = bits.split_at(SCI_PAYLOAD_BITS);
    if crc8(payload) != bits_to_u32(crc) {
        return Err(DecodeFailure::ControlCrc);
    }
    let word = bits_to_u32(payload);
    let sci = Sci {
        mcs_index: (word >> 27) as u8,
        group_dest_id: ((word >> 19) & 0xFF) as u8,
        rb_offset: ((word >> 12) & 0x7F) as u8,
        rb_length: ((word >> 5) & 0x7F) as u8,
        hopping: (word >> 4) & 1 == 1,
    };
    if word & 0xF != 0 || sci.rb_length == 0 {
        return Err(DecodeFailure::ControlInvalid);
    }
    Ok(sci)
}
