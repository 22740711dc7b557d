//! Cyclic redundancy checks over bit sequences (one bit per byte, MSB first).

const CRC24A_POLY: u32 = 0x86_4CFB;
const CRC8_POLY: u32 = 0x9B;

const fn byte_table(poly: u32, width: u32) -> [u32; 256] {
    let mut table = [0u32; 256];
    let top = 1u32 << (width - 1);
    let mask = if width == 32 { u32::MAX } else { (1u32 << width) - 1 };
    let mut i = 0;
    while i < 256 {
        let mut r = (i as u32) << (width - 8);
        let mut j = 0;
        while j < 8 {
            r = if r & top != 0 { (r << 1) ^ poly } else { r << 1 };
            j += 1;
        }
        table[i] = r & mask;
        i += 1;
    }
    table
}

static CRC24A_TABLE: [u32; 256] = byte_table(CRC24A_POLY, 24);
static CRC8_TABLE: [u32; 256] = byte_table(CRC8_POLY, 8);

fn crc_bits(bits: &[u8], table: &[u32; 256], poly: u32, width: u32) -> u32 {
    let mask = (1u32 << width) - 1;
    let mut r = 0u32;
    let mut chunks = bits.chunks_exact(8);
    for chunk in &mut chunks {
        let byte = chunk.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1));
        let idx = ((r >> (width - 8)) ^ byte) & 0xFF;
        r = ((r << 8) ^ table[idx as usize]) & mask;
    }
    for &b in chunks.remainder() {
        let top = ((r >> (width - 1)) ^ u32::from(b & 1)) & 1;
        r = (r << 1) & mask;
        if top != 0 {
            r ^= poly;
        }
    }
    r
}

/// CRC-24A (generator 0x864CFB, zero init, no reflection).
pub fn crc24a(bits: &[u8]) -> u32 {
    crc_bits(bits, &CRC24A_TABLE, CRC24A_POLY, 24)
}

/// CRC-8 (generator 0x9B).
pub fn crc8(bits: &[u8]) -> u32 {
    crc_bits(bits, &CRC8_TABLE, CRC8_POLY, 8)
}

pub fn u32_to_bits(value: u32, width: usize) -> impl Iterator<Item = u8> {
    (0..width).rev().map(move |i| ((value >> i) & 1) as u8)
}

pub fn bits_to_u32(bits: &[u8]) -> u32 {
    bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1))
}
