use crate::error::{invalid, Result};

/// Subcarrier and sampling layout of one 1 ms subframe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Numerology {
    pub n_prb: usize,
    pub subcarriers_per_prb: usize,
    pub symbols_per_subframe: usize,
    pub fft_size: usize,
    pub sample_rate_hz: u32,
    /// Cyclic prefix length of each OFDM symbol in the subframe.
    pub cp_lengths: Vec<usize>,
}

/// LTE channel bandwidths as (PRBs, FFT size).
pub const SUPPORTED_PRBS: [(usize, usize); 6] = [(6, 128), (15, 256), (25, 512), (50, 1024), (75, 1536), (100, 2048)];

impl Numerology {
    /// Normal-CP LTE numerology for a channel of `n_prb` resource blocks.
    ///
    /// The sample rate is 15 kHz x FFT size; the 160/144-sample CP pattern of
    /// the 2048-point profile is scaled to the FFT size.
    pub fn lte(n_prb: usize) -> Result<Self> {
        let Some(&(_, fft_size)) = SUPPORTED_PRBS.iter().find(|(p, _)| *p == n_prb) else {
            return invalid(format!("unsupported PRB count {n_prb}"));
        };
        let first = 160 * fft_size / 2048;
        let other = 144 * fft_size / 2048;
        let cp_lengths = (0..14).map(|l| if l % 7 == 0 { first } else { other }).collect();
        Ok(Self {
            n_prb,
            subcarriers_per_prb: 12,
            symbols_per_subframe: 14,
            fft_size,
            sample_rate_hz: 15_000 * fft_size as u32,
            cp_lengths,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_prb * self.subcarriers_per_prb
    }

    /// Number of samples in one subframe.
    pub fn subframe_len(&self) -> usize {
        self.cp_lengths.iter().map(|cp| cp + self.fft_size).sum()
    }

    /// Sample index at which symbol `l` (its CP) starts.
    pub fn symbol_start(&self, l: usize) -> usize {
        self.cp_lengths[..l].iter().map(|cp| cp + self.fft_size).sum()
    }

    /// FFT bin of subcarrier `k`: allocation centred on DC, DC left empty.
    pub fn bin_of(&self, k: usize) -> usize {
        let half = (self.n_subcarriers() / 2) as isize;
        let mut f = k as isize - half;
        if f >= 0 {
            f += 1;
        }
        f.rem_euclid(self.fft_size as isize) as usize
    }
}

impl Default for Numerology {
    fn default() -> Self {
        Self::lte(25).expect("25 PRB is supported")
    }
}
