use num_complex::Complex64;

use super::dft::{forward_unitary, inverse_unitary};
use super::{Numerology, ResourceGrid};
use crate::error::{invalid, Result};

/// Complex baseband samples at a known rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    pub iq: Vec<Complex64>,
    pub sample_rate_hz: u32,
}

impl SampleBuffer {
    pub fn new(iq: Vec<Complex64>, sample_rate_hz: u32) -> Self {
        Self { iq, sample_rate_hz }
    }

    pub fn len(&self) -> usize {
        self.iq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iq.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.iq.is_empty() {
            return 0.0;
        }
        self.iq.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.iq.len() as f64
    }
}

/// Per-symbol IFFT with cyclic prefix over the whole subframe.
pub fn ofdm_modulate(grid: &ResourceGrid, num: &Numerology) -> Result<SampleBuffer> {
    if !grid.matches(num) {
        return invalid("grid dimensions do not match the numerology");
    }
    let n = num.fft_size;
    let mut out = Vec::with_capacity(num.subframe_len());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..num.symbols_per_subframe {
        buf.fill(Complex64::new(0.0, 0.0));
        for (k, &v) in grid.symbol(l).iter().enumerate() {
            buf[num.bin_of(k)] = v;
        }
        inverse_unitary(&mut buf);
        let cp = num.cp_lengths[l];
        out.extend_from_slice(&buf[n - cp..]);
        out.extend_from_slice(&buf);
    }
    Ok(SampleBuffer::new(out, num.sample_rate_hz))
}

/// CP removal and per-symbol FFT; inverse of [`ofdm_modulate`].
pub fn ofdm_demodulate(samples: &SampleBuffer, num: &Numerology) -> Result<ResourceGrid> {
    if samples.len() != num.subframe_len() {
        return invalid(format!("expected {} samples per subframe, got {}", num.subframe_len(), samples.len()));
    }
    let n = num.fft_size;
    let n_sc = num.n_subcarriers();
    let mut data = Vec::with_capacity(n_sc * num.symbols_per_subframe);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..num.symbols_per_subframe {
        let start = num.symbol_start(l) + num.cp_lengths[l];
        buf.copy_from_slice(&samples.iq[start..start + n]);
        forward_unitary(&mut buf);
        data.extend((0..n_sc).map(|k| buf[num.bin_of(k)]));
    }
    Ok(ResourceGrid::from_received(n_sc, num.symbols_per_subframe, data))
}
