//! Sidelink subframe: PSCCH carrying the SCI on the first three symbols,
//! reference symbols on 3 and 10, and the SC-FDMA (DFT-spread) PSSCH on the
//! remaining nine.

use super::crc::{bits_to_u32, crc24a};
use super::dft::{dft_precode, idft_despread};
use super::fec::{coded_len, fec_decode, fec_encode, rate_dematch, rate_match};
use super::modulation::{demodulate_llr_into, hard_decisions, modulate_bits};
use super::refs::{
    equalize, estimate_from_references, map_references, PRESENCE_SNR_DB, REF_SYMBOLS, SIDELINK_REF_ROOT,
};
use super::sci::{decode_sci, encode_sci, Sci, SCI_BITS};
use super::scramble::{descramble_llrs, scramble_bits};
use super::{Numerology, ResourceGrid, TransportBlock};
use crate::error::{invalid, DecodeFailure, Error, Result};
use crate::link::{LinkType, McsTable, TB_CRC_BITS};

pub const PSCCH_SYMBOLS: [usize; 3] = [0, 1, 2];
const PSCCH_C_INIT: u32 = 510;

/// Data-carrying OFDM symbols of a sidelink subframe.
pub fn sidelink_data_symbols() -> impl Iterator<Item = usize> {
    (0..14).filter(|l| !PSCCH_SYMBOLS.contains(l) && !REF_SYMBOLS.contains(l))
}

fn pssch_c_init(group_dest_id: u8) -> u32 {
    (u32::from(group_dest_id) << 14) | PSCCH_C_INIT
}

/// Maps the SCI, repeated to fill, QPSK-modulated and DFT-spread, onto
/// symbols 0-2 across every subcarrier.
pub fn build_pscch(sci: &Sci, mut grid: ResourceGrid) -> Result<ResourceGrid> {
    let n_sc = grid.n_subcarriers();
    if grid.n_symbols() <= PSCCH_SYMBOLS[2] {
        return invalid("grid too short for the PSCCH");
    }
    let sci_bits = encode_sci(sci)?;
    let mut bits: Vec<u8> = (0..2 * n_sc * PSCCH_SYMBOLS.len()).map(|i| sci_bits[i % SCI_BITS]).collect();
    scramble_bits(&mut bits, PSCCH_C_INIT);
    let symbols = modulate_bits(&bits, 2)?;
    for (chunk, &l) in symbols.chunks_exact(n_sc).zip(&PSCCH_SYMBOLS) {
        grid.map(&dft_precode(chunk, n_sc)?, l, 0)?;
    }
    Ok(grid)
}

/// Recovers the SCI from an equalization-ready grid.
pub fn decode_pscch(grid: &ResourceGrid) -> std::result::Result<Sci, DecodeFailure> {
    let est = estimate_from_references(grid, SIDELINK_REF_ROOT);
    if est.snr_db() <= PRESENCE_SNR_DB {
        return Err(DecodeFailure::NoReference);
    }
    pscch_from_estimate(grid, &est)
}

fn pscch_from_estimate(grid: &ResourceGrid, est: &super::ChannelEstimate) -> std::result::Result<Sci, DecodeFailure> {
    let n_sc = grid.n_subcarriers();
    let mut llrs = Vec::with_capacity(2 * n_sc * PSCCH_SYMBOLS.len());
    for l in PSCCH_SYMBOLS {
        let (eq, noise) = equalize(grid.symbol(l), est);
        let x = idft_despread(&eq, n_sc).map_err(|_| DecodeFailure::ControlInvalid)?;
        demodulate_llr_into(&x, 2, noise, &mut llrs);
    }
    descramble_llrs(&mut llrs, PSCCH_C_INIT);
    let mut combined = [0.0f64; SCI_BITS];
    for (i, l) in llrs.iter().enumerate() {
        combined[i % SCI_BITS] += l;
    }
    decode_sci(&hard_decisions(&combined))
}

/// Builds a complete sidelink subframe for `tb` as described by `sci`.
pub fn build_pssch_subframe(
    tb: &TransportBlock,
    sci: &Sci,
    num: &Numerology,
    table: &McsTable,
) -> Result<ResourceGrid> {
    if usize::from(sci.rb_offset) != 0 || usize::from(sci.rb_length) != num.n_prb {
        return invalid(format!(
            "SCI assignment ({}, {}) must cover all {} PRBs",
            sci.rb_offset, sci.rb_length, num.n_prb
        ));
    }
    let entry = table.for_link(sci.mcs_index, LinkType::Sidelink)?;
    let tbs = table.transport_block_bits(sci.mcs_index, num.n_prb, LinkType::Sidelink)?;
    if tb.payload.len() != tbs {
        return invalid(format!("transport block has {} bits, MCS {} needs {tbs}", tb.payload.len(), sci.mcs_index));
    }
    let n_sc = num.n_subcarriers();
    let mut grid = build_pscch(sci, ResourceGrid::new(num))?;
    map_references(&mut grid, SIDELINK_REF_ROOT)?;

    let order = entry.modulation_order;
    let e = LinkType::Sidelink.data_res(num.n_prb) * order;
    let mut bits = rate_match(&fec_encode(&tb.to_bits()), e);
    scramble_bits(&mut bits, pssch_c_init(sci.group_dest_id));
    let symbols = modulate_bits(&bits, order)?;
    for (chunk, l) in symbols.chunks_exact(n_sc).zip(sidelink_data_symbols()) {
        grid.map(&dft_precode(chunk, n_sc)?, l, 0)?;
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsschDecode {
    pub tb: TransportBlock,
    pub crc_ok: bool,
    pub sci: Sci,
    /// Reference-based SNR estimate of the subframe.
    pub snr_db: f64,
}

/// Receiver chain: reference-based equalization, SCI first, then IDFT
/// despreading, demapping, Viterbi decoding and the CRC check.
pub fn decode_pssch_subframe(grid: &ResourceGrid, num: &Numerology, table: &McsTable) -> Result<PsschDecode> {
    if !grid.matches(num) {
        return invalid("grid dimensions do not match the numerology");
    }
    let est = estimate_from_references(grid, SIDELINK_REF_ROOT);
    if est.snr_db() <= PRESENCE_SNR_DB {
        return Err(DecodeFailure::NoReference.into());
    }
    let sci = pscch_from_estimate(grid, &est)?;
    if usize::from(sci.rb_offset) != 0 || usize::from(sci.rb_length) != num.n_prb {
        return Err(DecodeFailure::ControlInvalid.into());
    }
    let (order, tbs) = match table.for_link(sci.mcs_index, LinkType::Sidelink) {
        Ok(e) => (e.modulation_order, table.transport_block_bits(sci.mcs_index, num.n_prb, LinkType::Sidelink)?),
        Err(_) => return Err(DecodeFailure::ControlInvalid.into()),
    };

    let n_sc = num.n_subcarriers();
    let mut llrs = Vec::with_capacity(LinkType::Sidelink.data_res(num.n_prb) * order);
    for l in sidelink_data_symbols() {
        let (eq, noise) = equalize(grid.symbol(l), &est);
        let x = idft_despread(&eq, n_sc)?;
        demodulate_llr_into(&x, order, noise, &mut llrs);
    }
    descramble_llrs(&mut llrs, pssch_c_init(sci.group_dest_id));
    let k = tbs + TB_CRC_BITS;
    let decoded = fec_decode(&rate_dematch(&llrs, coded_len(k)))?;
    let (payload, crc) = decoded.split_at(tbs);
    let tb = TransportBlock { payload: payload.to_vec(), crc: bits_to_u32(crc) };
    let crc_ok = crc24a(&tb.payload) == tb.crc;
    Ok(PsschDecode { tb, crc_ok, sci, snr_db: est.snr_db() })
}

/// True when `err` is a decode failure rather than a caller error.
pub fn is_decode_failure(err: &Error) -> bool {
    matches!(err, Error::Decode(_))
}
