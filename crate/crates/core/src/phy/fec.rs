//! Tail-terminated rate-1/3, constraint-length-7 convolutional code
//! (generators 133, 171, 165 octal), soft-decision Viterbi decoding and
//! circular-buffer rate matching.

use crate::error::{invalid, Result};

pub const CONSTRAINT_LENGTH: usize = 7;
pub const TAIL_BITS: usize = CONSTRAINT_LENGTH - 1;
const GENERATORS: [u32; 3] = [0o133, 0o171, 0o165];
const STATES: usize = 1 << TAIL_BITS;
const LLR_CLAMP: f32 = 1000.0;

/// 3-bit output label (c0 c1 c2) for a 7-bit register whose bit 6 is the
/// newest input.
const fn output_label(reg: u32) -> usize {
    let mut label = 0;
    let mut i = 0;
    while i < 3 {
        label = (label << 1) | ((reg & GENERATORS[i]).count_ones() & 1) as usize;
        i += 1;
    }
    label
}

const fn label_table() -> [usize; 128] {
    let mut t = [0usize; 128];
    let mut r = 0;
    while r < 128 {
        t[r] = output_label(r as u32);
        r += 1;
    }
    t
}

static LABELS: [usize; 128] = label_table();

/// Number of mother-code bits for `k` information bits.
pub fn coded_len(k: usize) -> usize {
    3 * (k + TAIL_BITS)
}

/// Encodes `bits` and appends six zero tail bits; output is 3(k+6) bits,
/// interleaved c0 c1 c2 per input bit.
pub fn fec_encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(coded_len(bits.len()));
    let mut state = 0u32;
    for &b in bits.iter().chain(std::iter::repeat_n(&0u8, TAIL_BITS)) {
        let reg = (u32::from(b & 1) << 6) | state;
        let label = LABELS[reg as usize];
        out.push(((label >> 2) & 1) as u8);
        out.push(((label >> 1) & 1) as u8);
        out.push((label & 1) as u8);
        state = reg >> 1;
    }
    out
}

/// Maximum-likelihood decoding of mother-code LLRs (positive = bit 0).
pub fn fec_decode(llrs: &[f64]) -> Result<Vec<u8>> {
    if !llrs.len().is_multiple_of(3) || llrs.len() < 3 * TAIL_BITS {
        return invalid(format!("{} LLRs is not a valid tail-terminated codeword length", llrs.len()));
    }
    let steps = llrs.len() / 3;
    let k = steps - TAIL_BITS;

    // For the butterfly over states (2j, 2j+1), the label of 2j with input 0
    // determines all four branches: the end taps of every generator are set,
    // so flipping the oldest bit or the input complements the label.
    let base_label: [usize; STATES / 2] = std::array::from_fn(|j| LABELS[2 * j]);

    let mut metric = [f32::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut next = [0f32; STATES];
    let mut decisions = vec![0u64; steps];

    for (t, llr) in llrs.chunks_exact(3).enumerate() {
        let l: [f32; 3] = std::array::from_fn(|i| (llr[i] as f32).clamp(-LLR_CLAMP, LLR_CLAMP));
        let mut bm = [0f32; 8];
        for (p, m) in bm.iter_mut().enumerate() {
            let s0 = if p & 4 == 0 { l[0] } else { -l[0] };
            let s1 = if p & 2 == 0 { l[1] } else { -l[1] };
            let s2 = if p & 1 == 0 { l[2] } else { -l[2] };
            *m = s0 + s1 + s2;
        }
        let mut m = [0f32; 32];
        for j in 0..32 {
            m[j] = bm[base_label[j]];
        }
        let mut lo_bits = 0u32;
        let mut hi_bits = 0u32;
        for j in 0..32 {
            let p0 = metric[2 * j];
            let p1 = metric[2 * j + 1];
            let (a, b) = (p0 + m[j], p1 - m[j]);
            let (c, d) = (p0 - m[j], p1 + m[j]);
            next[j] = a.max(b);
            next[j + 32] = c.max(d);
            lo_bits |= u32::from(b > a) << j;
            hi_bits |= u32::from(d > c) << j;
        }
        let dec = u64::from(lo_bits) | (u64::from(hi_bits) << 32);
        decisions[t] = dec;
        // metrics only matter relative to each other
        let top = if t % 16 == 15 { next[0].max(next[32]) } else { 0.0 };
        for (m, n) in metric.iter_mut().zip(&next) {
            *m = n - top;
        }
    }

    let mut bits = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        bits[t] = (state >> 5) as u8;
        let d = ((decisions[t] >> state) & 1) as usize;
        state = ((state << 1) & (STATES - 1)) | d;
    }
    bits.truncate(k);
    Ok(bits)
}

const SUBBLOCK_COLUMNS: usize = 32;
const COLUMN_PERMUTATION: [usize; SUBBLOCK_COLUMNS] = [
    1, 17, 9, 25, 5, 21, 13, 29, 3, 19, 11, 27, 7, 23, 15, 31, 0, 16, 8, 24, 4, 20, 12, 28, 2, 18, 10, 26, 6, 22, 14,
    30,
];

/// Circular-buffer order of the coded bits: each generator stream passes
/// through a 32-column sub-block interleaver, then the streams are
/// concatenated. Puncturing therefore removes the third stream first,
/// spread evenly over time, before it touches the second.
fn circular_buffer(coded: usize) -> Vec<usize> {
    let d = coded / 3;
    let rows = d.div_ceil(SUBBLOCK_COLUMNS);
    let dummies = rows * SUBBLOCK_COLUMNS - d;
    let mut order = Vec::with_capacity(coded);
    for stream in 0..3 {
        for &col in &COLUMN_PERMUTATION {
            for row in 0..rows {
                let idx = row * SUBBLOCK_COLUMNS + col;
                if idx >= dummies {
                    order.push(3 * (idx - dummies) + stream);
                }
            }
        }
    }
    order
}

/// Index into the mother codeword of each of the `e` transmitted bits,
/// read from the circular buffer (wrapping around repeats bits).
fn selection(coded: usize, e: usize) -> impl Iterator<Item = usize> {
    let order = circular_buffer(coded);
    (0..e).map(move |i| order[i % coded])
}

pub fn rate_match(coded: &[u8], e: usize) -> Vec<u8> {
    selection(coded.len(), e).map(|i| coded[i]).collect()
}

/// Soft-combines received LLRs back onto the mother codeword; punctured
/// positions stay at zero.
pub fn rate_dematch(llrs: &[f64], coded_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; coded_len];
    for (i, l) in selection(coded_len, llrs.len()).zip(llrs) {
        out[i] += l;
    }
    out
}
