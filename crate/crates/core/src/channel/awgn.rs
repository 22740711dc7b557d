use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::phy::SampleBuffer;

/// Adds circular complex Gaussian noise of variance
/// `signal_power / 10^(snr_db / 10)` per sample.
pub fn apply_awgn(samples: &SampleBuffer, snr_db: f64, signal_power: f64, rng: &mut impl Rng) -> Result<SampleBuffer> {
    if !(signal_power > 0.0) || snr_db.is_nan() {
        return invalid("signal power must be positive and SNR a number");
    }
    let sigma = (signal_power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let iq = samples
        .iq
        .iter()
        .map(|&x| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            x + Complex64::new(re, im) * sigma
        })
        .collect();
    Ok(SampleBuffer::new(iq, samples.sample_rate_hz))
}
