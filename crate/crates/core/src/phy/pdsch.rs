//! Downlink subframe at simplified fidelity: one control symbol standing in
//! for the PDCCH (it carries the MCS), reference symbols on 3 and 10, and a
//! plain-OFDM PDSCH on the other eleven symbols, up to 64-QAM.

use super::crc::{bits_to_u32, crc24a, crc8, u32_to_bits};
use super::fec::{coded_len, fec_decode, fec_encode, rate_dematch, rate_match};
use super::modulation::{demodulate_llr_into, hard_decisions, modulate_bits};
use super::refs::{
    equalize, estimate_from_references, map_references, DOWNLINK_REF_ROOT, PRESENCE_SNR_DB, REF_SYMBOLS,
};
use super::scramble::{descramble_llrs, scramble_bits};
use super::{Numerology, ResourceGrid, TransportBlock};
use crate::error::{invalid, DecodeFailure, Result};
use crate::link::{LinkType, McsTable, TB_CRC_BITS};

pub const CONTROL_SYMBOL: usize = 0;
const DCI_BITS: usize = 16;

pub fn downlink_data_symbols() -> impl Iterator<Item = usize> {
    (0..14).filter(|&l| l != CONTROL_SYMBOL && !REF_SYMBOLS.contains(&l))
}

fn control_c_init(cell_id: u16) -> u32 {
    (1 << 14) | u32::from(cell_id)
}

fn data_c_init(cell_id: u16) -> u32 {
    (2 << 14) | u32::from(cell_id)
}

fn encode_dci(mcs: u8) -> Vec<u8> {
    let mut bits: Vec<u8> = u32_to_bits(u32::from(mcs) << 3, 8).collect();
    let crc = crc8(&bits);
    bits.extend(u32_to_bits(crc, 8));
    bits
}

fn decode_dci(bits: &[u8]) -> std::result::Result<u8, DecodeFailure> {
    let (payload, crc) = bits.split_at(8);
    if crc8(payload) != bits_to_u32(crc) {
        return Err(DecodeFailure::ControlCrc);
    }
    let word = bits_to_u32(payload);
    if word & 0b111 != 0 {
        return Err(DecodeFailure::ControlInvalid);
    }
    Ok((word >> 3) as u8)
}

pub fn build_pdsch_subframe(
    tb: &TransportBlock,
    mcs: u8,
    cell_id: u16,
    num: &Numerology,
    table: &McsTable,
) -> Result<ResourceGrid> {
    let entry = table.for_link(mcs, LinkType::Downlink)?;
    let tbs = table.transport_block_bits(mcs, num.n_prb, LinkType::Downlink)?;
    if tb.payload.len() != tbs {
        return invalid(format!("transport block has {} bits, MCS {mcs} needs {tbs}", tb.payload.len()));
    }
    let n_sc = num.n_subcarriers();
    let mut grid = ResourceGrid::new(num);

    let dci = encode_dci(mcs);
    let mut ctrl: Vec<u8> = (0..2 * n_sc).map(|i| dci[i % DCI_BITS]).collect();
    scramble_bits(&mut ctrl, control_c_init(cell_id));
    grid.map(&modulate_bits(&ctrl, 2)?, CONTROL_SYMBOL, 0)?;
    map_references(&mut grid, DOWNLINK_REF_ROOT)?;

    let order = entry.modulation_order;
    let e = LinkType::Downlink.data_res(num.n_prb) * order;
    let mut bits = rate_match(&fec_encode(&tb.to_bits()), e);
    scramble_bits(&mut bits, data_c_init(cell_id));
    let symbols = modulate_bits(&bits, order)?;
    for (chunk, l) in symbols.chunks_exact(n_sc).zip(downlink_data_symbols()) {
        grid.map(chunk, l, 0)?;
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdschDecode {
    pub tb: TransportBlock,
    pub crc_ok: bool,
    pub mcs: u8,
    pub snr_db: f64,
}

pub fn decode_pdsch_subframe(
    grid: &ResourceGrid,
    cell_id: u16,
    num: &Numerology,
    table: &McsTable,
) -> Result<PdschDecode> {
    if !grid.matches(num) {
        return invalid("grid dimensions do not match the numerology");
    }
    let est = estimate_from_references(grid, DOWNLINK_REF_ROOT);
    if est.snr_db() <= PRESENCE_SNR_DB {
        return Err(DecodeFailure::NoReference.into());
    }
    let n_sc = num.n_subcarriers();

    let (eq, noise) = equalize(grid.symbol(CONTROL_SYMBOL), &est);
    let mut llrs = Vec::with_capacity(2 * n_sc);
    demodulate_llr_into(&eq, 2, noise, &mut llrs);
    descramble_llrs(&mut llrs, control_c_init(cell_id));
    let mut combined = [0.0f64; DCI_BITS];
    for (i, l) in llrs.iter().enumerate() {
        combined[i % DCI_BITS] += l;
    }
    let mcs = decode_dci(&hard_decisions(&combined))?;
    let Ok(entry) = table.for_link(mcs, LinkType::Downlink) else {
        return Err(DecodeFailure::ControlInvalid.into());
    };
    let order = entry.modulation_order;
    let tbs = table.transport_block_bits(mcs, num.n_prb, LinkType::Downlink)?;

    let mut llrs = Vec::with_capacity(LinkType::Downlink.data_res(num.n_prb) * order);
    for l in downlink_data_symbols() {
        let (eq, noise) = equalize(grid.symbol(l), &est);
        demodulate_llr_into(&eq, order, noise, &mut llrs);
    }
    descramble_llrs(&mut llrs, data_c_init(cell_id));
    let decoded = fec_decode(&rate_dematch(&llrs, coded_len(tbs + TB_CRC_BITS)))?;
    let (payload, crc) = decoded.split_at(tbs);
    let tb = TransportBlock { payload: payload.to_vec(), crc: bits_to_u32(crc) };
    let crc_ok = crc24a(&tb.payload) == tb.crc;
    Ok(PdschDecode { tb, crc_ok, mcs, snr_db: est.snr_db() })
}
