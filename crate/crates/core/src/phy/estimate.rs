//! Signal-quality estimators.

use num_complex::Complex64;

use super::{ResourceGrid, SampleBuffer};
use crate::error::{invalid, Result};

/// SNR estimates are clamped to +/- this many dB.
pub const SNR_CAP_DB: f64 = 80.0;

/// Below this reference-correlation statistic (|corr|^2 / (E_ref * noise),
/// exponentially distributed with unit mean under pure noise) no signal is
/// reported. False-alarm probability is exp(-20).
const DETECTION_STAT: f64 = 20.0;

/// Single-tap channel estimate from known reference symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    pub gain: Complex64,
    /// Per-element complex noise variance from the fit residual.
    pub noise_var: f64,
    /// Received signal power per element with the noise bias removed.
    pub signal_power: f64,
}

impl ChannelEstimate {
    pub fn snr_db(&self) -> f64 {
        if self.signal_power <= 0.0 {
            return -SNR_CAP_DB;
        }
        if self.noise_var <= 0.0 {
            return SNR_CAP_DB;
        }
        (10.0 * (self.signal_power / self.noise_var).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB)
    }
}

/// Least-squares gain and residual noise over the elements selected by `mask`,
/// whose transmitted values were `refs` (in grid order).
pub fn estimate_channel(grid: &ResourceGrid, mask: &[bool], refs: &[Complex64]) -> Result<ChannelEstimate> {
    if mask.len() != grid.data().len() {
        return invalid("reference mask does not cover the grid");
    }
    let received: Vec<Complex64> = grid.data().iter().zip(mask).filter(|(_, &m)| m).map(|(y, _)| *y).collect();
    if received.is_empty() {
        return invalid("no reference positions");
    }
    if received.len() != refs.len() {
        return invalid(format!("{} reference positions but {} reference values", received.len(), refs.len()));
    }
    Ok(fit_gain(&received, refs))
}

pub(crate) fn fit_gain(received: &[Complex64], refs: &[Complex64]) -> ChannelEstimate {
    let n = received.len();
    let ref_energy: f64 = refs.iter().map(|x| x.norm_sqr()).sum();
    if ref_energy == 0.0 {
        let noise = received.iter().map(|y| y.norm_sqr()).sum::<f64>() / n as f64;
        return ChannelEstimate { gain: Complex64::new(0.0, 0.0), noise_var: noise, signal_power: 0.0 };
    }
    let corr: Complex64 = received.iter().zip(refs).map(|(y, x)| y * x.conj()).sum();
    let gain = corr / ref_energy;
    let residual: f64 = received.iter().zip(refs).map(|(y, x)| (y - gain * x).norm_sqr()).sum();
    let noise_var = if n > 1 { residual / (n - 1) as f64 } else { residual };
    let mean_ref = ref_energy / n as f64;
    let stat = if noise_var > 0.0 { corr.norm_sqr() / (ref_energy * noise_var) } else { f64::INFINITY };
    let signal_power = if stat < DETECTION_STAT { 0.0 } else { (gain.norm_sqr() - noise_var / ref_energy) * mean_ref };
    ChannelEstimate { gain, noise_var, signal_power }
}

/// Reference-based SNR estimate in dB, clamped to [-80, +80].
pub fn estimate_snr(grid: &ResourceGrid, mask: &[bool], refs: &[Complex64]) -> Result<f64> {
    Ok(estimate_channel(grid, mask, refs)?.snr_db())
}

/// Peak-to-average power ratio in dB.
pub fn measure_papr(samples: &SampleBuffer) -> Result<f64> {
    if samples.is_empty() {
        return invalid("empty sample buffer");
    }
    let mean = samples.mean_power();
    if mean == 0.0 {
        return invalid("all-zero sample buffer has no PAPR");
    }
    let peak = samples.iq.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    Ok(10.0 * (peak / mean).log10())
}
