//! Length-31 Gold sequence used to scramble coded bits.

const NC: usize = 1600;

/// First `len` bits of the pseudo-random sequence for initial state `c_init`.
pub fn gold_sequence(c_init: u32, len: usize) -> Vec<u8> {
    let total = len + NC + 31;
    let mut x1 = vec![0u8; total];
    let mut x2 = vec![0u8; total];
    x1[0] = 1;
    for (i, b) in x2.iter_mut().take(31).enumerate() {
        *b = ((c_init >> i) & 1) as u8;
    }
    for n in 0..total - 31 {
        x1[n + 31] = x1[n + 3] ^ x1[n];
        x2[n + 31] = x2[n + 3] ^ x2[n + 2] ^ x2[n + 1] ^ x2[n];
    }
    (0..len).map(|n| x1[n + NC] ^ x2[n + NC]).collect()
}

pub fn scramble_bits(bits: &mut [u8], c_init: u32) {
    let seq = gold_sequence(c_init, bits.len());
    for (b, c) in bits.iter_mut().zip(seq) {
        *b ^= c;
    }
}

/// Descrambling in the LLR domain is a sign flip where the sequence is 1.
pub fn descramble_llrs(llrs: &mut [f64], c_init: u32) {
    let seq = gold_sequence(c_init, llrs.len());
    for (l, c) in llrs.iter_mut().zip(seq) {
        if c == 1 {
            *l = -*l;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_seed_dependent() {
        let a = gold_sequence(510, 4000);
        let b = gold_sequence(511, 4000);
        let ones = a.iter().filter(|&&x| x == 1).count();
        assert!((1800..2200).contains(&ones));
        assert_ne!(a, b);
    }

    #[test]
    fn scramble_is_involution() {
        let orig: Vec<u8> = (0..100).map(|i| (i % 3 == 0) as u8).collect();
        let mut bits = orig.clone();
        scramble_bits(&mut bits, 12345);
        assert_ne!(bits, orig);
        scramble_bits(&mut bits, 12345);
        assert_eq!(bits, orig);
    }
}
