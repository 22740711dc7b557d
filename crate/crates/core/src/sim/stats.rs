use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// SNR sample statistics plus transport-block counters for one link.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkStats {
    pub n: usize,
    pub mean_db: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_db: f64,
    /// Width of the 95% confidence interval, 1.96·std/√n.
    pub ci95_db: f64,
    pub min_db: f64,
    pub max_db: f64,
    pub tb_ok: u64,
    pub tb_err: u64,
    pub bits_delivered: u64,
}

impl LinkStats {
    pub fn bler(&self) -> f64 {
        let total = self.tb_ok + self.tb_err;
        if total == 0 {
            0.0
        } else {
            self.tb_err as f64 / total as f64
        }
    }
}

pub fn collect_stats(samples: &[f64]) -> Result<LinkStats> {
    let n = samples.len();
    if n == 0 {
        return invalid("statistics need at least one sample");
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std =
        if n >= 2 { (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok(LinkStats {
        n,
        mean_db: mean,
        std_db: std,
        ci95_db: if n >= 2 { 1.96 * std / (n as f64).sqrt() } else { 0.0 },
        min_db: samples.iter().copied().fold(f64::INFINITY, f64::min),
        max_db: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ..LinkStats::default()
    })
}
