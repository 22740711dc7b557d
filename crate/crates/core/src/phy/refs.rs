//! Zadoff-Chu reference symbols used for channel and SNR estimation.

use num_complex::Complex64;

use super::estimate::{fit_gain, ChannelEstimate};
use super::ResourceGrid;

/// OFDM symbols of each subframe that carry reference symbols.
pub const REF_SYMBOLS: [usize; 2] = [3, 10];
pub const SIDELINK_REF_ROOT: u32 = 11;
pub const DOWNLINK_REF_ROOT: u32 = 7;

/// Reference estimates at or below this SNR mean no matching reference
/// signal is present.
pub const PRESENCE_SNR_DB: f64 = -15.0;

fn largest_prime_below(n: usize) -> usize {
    let is_prime = |m: usize| m >= 2 && (2..).take_while(|d| d * d <= m).all(|d| !m.is_multiple_of(d));
    (2..n).rev().find(|&m| is_prime(m)).unwrap_or(1)
}

/// Zadoff-Chu sequence of the largest prime length below `len`, extended
/// cyclically to `len` elements.
pub fn reference_sequence(root: u32, len: usize) -> Vec<Complex64> {
    let nzc = largest_prime_below(len).max(1);
    let q = f64::from(root % nzc as u32);
    (0..len)
        .map(|n| {
            let m = (n % nzc) as f64;
            Complex64::from_polar(1.0, -std::f64::consts::PI * q * m * (m + 1.0) / nzc as f64)
        })
        .collect()
}

pub(crate) fn map_references(grid: &mut ResourceGrid, root: u32) -> crate::Result<()> {
    let seq = reference_sequence(root, grid.n_subcarriers());
    for l in REF_SYMBOLS {
        grid.map(&seq, l, 0)?;
    }
    Ok(())
}

/// Single-tap channel estimate from the reference symbols of `grid`.
pub(crate) fn estimate_from_references(grid: &ResourceGrid, root: u32) -> ChannelEstimate {
    let seq = reference_sequence(root, grid.n_subcarriers());
    let mut received = Vec::with_capacity(2 * seq.len());
    let mut refs = Vec::with_capacity(2 * seq.len());
    for l in REF_SYMBOLS {
        received.extend_from_slice(grid.symbol(l));
        refs.extend_from_slice(&seq);
    }
    fit_gain(&received, &refs)
}

/// Equalizes one symbol by the single-tap estimate and returns the noise
/// variance seen after equalization.
pub(crate) fn equalize(symbols: &[Complex64], est: &ChannelEstimate) -> (Vec<Complex64>, f64) {
    let g = est.gain;
    let inv = if g.norm_sqr() > 0.0 { 1.0 / g } else { Complex64::new(0.0, 0.0) };
    let noise = if g.norm_sqr() > 0.0 { est.noise_var / g.norm_sqr() } else { f64::INFINITY };
    (symbols.iter().map(|y| y * inv).collect(), noise.max(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_amplitude_and_prime_length() {
        assert_eq!(largest_prime_below(300), 293);
        assert_eq!(largest_prime_below(72), 71);
        let seq = reference_sequence(11, 300);
        assert!(seq.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert_eq!(seq[0], seq[293]);
    }

    #[test]
    fn distinct_roots_are_nearly_orthogonal() {
        let a = &reference_sequence(SIDELINK_REF_ROOT, 300)[..293];
        let b = &reference_sequence(DOWNLINK_REF_ROOT, 300)[..293];
        let c: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
        assert!((c.norm() - 293f64.sqrt()).abs() < 1e-6);
    }
}
