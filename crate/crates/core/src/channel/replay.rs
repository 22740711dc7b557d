use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::tables::{MeasurementRow, MeasurementTable};

/// Gaussian truncated to `[min, max]` whose location and scale are solved
/// so the truncated distribution has the requested mean and, where the
/// bounds allow it, the requested standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    /// Location of the untruncated Gaussian.
    pub location: f64,
    pub scale: f64,
    pub min: f64,
    pub max: f64,
    /// Mean of the truncated distribution.
    pub mean: f64,
    /// Standard deviation of the truncated distribution.
    pub std: f64,
}

fn std_normal() -> Normal {
    Normal::standard()
}

fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Mean of N(mu, sigma) truncated to [a, b].
fn truncated_mean(mu: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let (alpha, beta) = ((a - mu) / sigma, (b - mu) / sigma);
    // Work in the lower tail for accuracy when both bounds sit far right.
    let z = if alpha > 0.0 {
        std_normal().cdf(-alpha) - std_normal().cdf(-beta)
    } else {
        std_normal().cdf(beta) - std_normal().cdf(alpha)
    };
    if z <= 1e-300 {
        // Essentially all mass piles onto the nearer bound.
        return if mu < a { a } else { b };
    }
    (mu + sigma * (pdf(alpha) - pdf(beta)) / z).clamp(a, b)
}

fn tail_mass(alpha: f64, beta: f64) -> f64 {
    if alpha > 0.0 {
        std_normal().cdf(-alpha) - std_normal().cdf(-beta)
    } else {
        std_normal().cdf(beta) - std_normal().cdf(alpha)
    }
}

/// Standard deviation of N(mu, sigma) truncated to [a, b].
fn truncated_std(mu: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let (alpha, beta) = ((a - mu) / sigma, (b - mu) / sigma);
    let z = tail_mass(alpha, beta);
    if z <= 1e-300 {
        return 0.0;
    }
    let (pa, pb) = (pdf(alpha), pdf(beta));
    let r = (pa - pb) / z;
    let var = sigma * sigma * (1.0 + (alpha * pa - beta * pb) / z - r * r);
    var.max(0.0).sqrt()
}

/// Location at which N(location, scale) truncated to [min, max] has mean `mean`.
fn location_for_mean(mean: f64, scale: f64, min: f64, max: f64) -> f64 {
    let span = max - min;
    let reach = 10.0 * (span + scale + scale * scale / span);
    let (mut lo, mut hi) = (min - reach, max + reach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_mean(mid, scale, min, max) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

impl TruncatedNormal {
    /// Keeps `std` as the scale and solves only for the location that
    /// gives the truncated distribution mean `mean`.
    pub fn matching_mean(mean: f64, std: f64, min: f64, max: f64) -> Self {
        if let Some(d) = Self::degenerate(mean, std, min, max) {
            return d;
        }
        let location = location_for_mean(mean, std, min, max);
        Self { location, scale: std, min, max, mean, std: truncated_std(location, std, min, max) }
    }

    /// Solves location and scale so the truncated distribution has mean
    /// `mean` and standard deviation `std`. When the bounds are too tight
    /// for `std`, the widest achievable spread is used; check
    /// [`TruncatedNormal::std`] against the request.
    pub fn matching_moments(mean: f64, std: f64, min: f64, max: f64) -> Self {
        if let Some(d) = Self::degenerate(mean, std, min, max) {
            return d;
        }
        let spread = |scale: f64| {
            let loc = location_for_mean(mean, scale, min, max);
            (loc, truncated_std(loc, scale, min, max))
        };
        // The truncated spread grows with the scale and is within a few
        // percent of its limit at four range widths, where the tail
        // probabilities are still representable; bisect on log scale.
        let (mut lo, mut hi) = ((std * 1e-3).ln(), (4.0 * (max - min)).max(std).ln());
        if spread(hi.exp()).1 <= std {
            lo = hi;
        }
        for _ in 0..80 {
            if hi - lo < 1e-10 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if spread(mid.exp()).1 < std {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let scale = (0.5 * (lo + hi)).exp();
        let (location, achieved) = spread(scale);
        Self { location, scale, min, max, mean, std: achieved }
    }

    fn degenerate(mean: f64, std: f64, min: f64, max: f64) -> Option<Self> {
        let degenerate = std <= 0.0 || max <= min || mean <= min || mean >= max;
        degenerate.then(|| {
            let m = mean.clamp(min, max);
            Self { location: m, scale: 0.0, min: m, max: m, mean: m, std: 0.0 }
        })
    }

    pub fn for_row(row: &MeasurementRow) -> Self {
        Self::matching_moments(row.mean_db, row.std_db, row.min_db, row.max_db)
    }

    /// Inverse-CDF transform of `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        if self.scale == 0.0 {
            return self.location;
        }
        let alpha = (self.min - self.location) / self.scale;
        let beta = (self.max - self.location) / self.scale;
        let x = if alpha > 0.0 {
            // Mirror so the CDF values stay away from 1.
            let (pa, pb) = (std_normal().cdf(-beta), std_normal().cdf(-alpha));
            self.location - self.scale * std_normal().inverse_cdf(pb - u * (pb - pa))
        } else {
            let (pa, pb) = (std_normal().cdf(alpha), std_normal().cdf(beta));
            self.location + self.scale * std_normal().inverse_cdf(pa + u * (pb - pa))
        };
        if x.is_finite() {
            x.clamp(self.min, self.max)
        } else {
            self.mean
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// `n` draws with one uniform per stratum of width 1/n, shuffled.
    /// The batch mean tracks the distribution mean far more tightly than
    /// `n` independent draws while each value is still marginally exact.
    pub fn sample_stratified(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut out: Vec<f64> = (0..n).map(|i| self.quantile((i as f64 + rng.random::<f64>()) / n as f64)).collect();
        out.shuffle(rng);
        out
    }
}

/// One replayed SNR at `remote_pos_cm` (the table is indexed by the
/// remote's position along the measurement line). `None` means out of
/// coverage: outside the measured range.
pub fn replay_sample(table: &MeasurementTable, remote_pos_cm: f64, rng: &mut impl Rng) -> Option<f64> {
    let row = table.interpolate(remote_pos_cm)?;
    Some(TruncatedNormal::for_row(&row).sample(rng))
}
