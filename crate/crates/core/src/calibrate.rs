//! Ties the MCS thresholds to the bit-true chain: per-MCS bisection for the
//! lowest SNR at which the empirical BLER stays at or below 1%.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::apply_awgn;
use crate::error::{invalid, Result};
use crate::link::{LinkType, McsEntry, McsTable};
use crate::phy::{
    attach_crc, build_pdsch_subframe, build_pssch_subframe, decode_pdsch_subframe, decode_pssch_subframe,
    ofdm_demodulate, ofdm_modulate, Numerology, Sci,
};

/// Target BLER at a calibrated threshold.
pub const TARGET_BLER: f64 = 0.01;

/// Generator for trial `trial` of (`link`, `mcs`) under `seed`: the same
/// trial sees the same payload and noise seed at every SNR.
pub fn trial_rng(seed: u64, link: LinkType, mcs: u8, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let link_bit = match link {
        LinkType::Downlink => 0u64,
        LinkType::Sidelink => 1,
    };
    rng.set_stream((link_bit << 40) | (u64::from(mcs) << 32) | trial);
    rng
}

/// Sends one random transport block through build → OFDM → AWGN → decode
/// and reports whether it came back intact. SNR is per resource element.
pub fn bit_true_block(
    link: LinkType,
    mcs: u8,
    snr_db: f64,
    num: &Numerology,
    table: &McsTable,
    rng: &mut impl Rng,
) -> Result<bool> {
    let tbs = table.transport_block_bits(mcs, num.n_prb, link)?;
    let payload: Vec<u8> = (0..tbs).map(|_| rng.random_range(0..2u8)).collect();
    let tb = attach_crc(&payload);
    let grid = match link {
        LinkType::Sidelink => build_pssch_subframe(&tb, &Sci::full_allocation(mcs, 0, num.n_prb), num, table)?,
        LinkType::Downlink => build_pdsch_subframe(&tb, mcs, 0, num, table)?,
    };
    let tx = ofdm_modulate(&grid, num)?;
    let rx = ofdm_demodulate(&apply_awgn(&tx, snr_db, 1.0, rng)?, num)?;
    let decoded = match link {
        LinkType::Sidelink => decode_pssch_subframe(&rx, num, table).map(|d| d.crc_ok && d.tb == tb),
        LinkType::Downlink => decode_pdsch_subframe(&rx, 0, num, table).map(|d| d.crc_ok && d.tb == tb),
    };
    match decoded {
        Ok(ok) => Ok(ok),
        Err(crate::Error::Decode(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Block errors counted over up to `trials` seeded blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlerCount {
    pub errors: usize,
    pub trials: usize,
}

impl BlerCount {
    pub fn bler(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.errors as f64 / self.trials as f64
        }
    }
}

/// Empirical BLER at `snr_db`. With `stop_after` set, counting ends as soon
/// as that many errors have been seen.
#[allow(clippy::too_many_arguments)]
pub fn empirical_bler(
    link: LinkType,
    mcs: u8,
    snr_db: f64,
    trials: usize,
    seed: u64,
    stop_after: Option<usize>,
    num: &Numerology,
    table: &McsTable,
) -> Result<BlerCount> {
    let mut count = BlerCount { errors: 0, trials: 0 };
    for t in 0..trials {
        let mut rng = trial_rng(seed, link, mcs, t as u64);
        count.trials += 1;
        if !bit_true_block(link, mcs, snr_db, num, table, &mut rng)? {
            count.errors += 1;
            if stop_after.is_some_and(|s| count.errors >= s) {
                break;
            }
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Seeded subframes per bisection step.
    pub trials: usize,
    pub seed: u64,
    pub max_steps: usize,
    /// Bracket width at which bisection stops.
    pub tolerance_db: f64,
    pub n_prb: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { trials: 200, seed: 1, max_steps: 20, tolerance_db: 0.05, n_prb: 25 }
    }
}

/// Calibration result for one (MCS, link) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkThreshold {
    pub mcs: u8,
    pub link: LinkType,
    pub threshold_db: f64,
    pub steps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub table: McsTable,
    pub per_link: Vec<LinkThreshold>,
    /// Indices whose bisection did not converge.
    pub flagged: Vec<u8>,
    /// Indices whose measured threshold did not exceed the previous entry's
    /// and was raised just above it.
    pub adjusted: Vec<u8>,
}

/// Lowest SNR (within tolerance) where the BLER is at most 1%, found by
/// bisection from the entry's current threshold.
pub fn calibrate_entry(
    entry: &McsEntry,
    link: LinkType,
    opts: &CalibrationOptions,
    num: &Numerology,
    table: &McsTable,
) -> Result<LinkThreshold> {
    let allowed = (TARGET_BLER * opts.trials as f64).floor() as usize;
    let passes = |snr: f64| -> Result<bool> {
        let c = empirical_bler(link, entry.index, snr, opts.trials, opts.seed, Some(allowed + 1), num, table)?;
        Ok(c.errors <= allowed)
    };
    let mut steps = 0;
    let guess = entry.snr_threshold_db;
    let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
    // Bracket: `hi` passes, `lo` fails.
    let mut hi_ok = false;
    while steps < opts.max_steps {
        steps += 1;
        if passes(hi)? {
            hi_ok = true;
            break;
        }
        lo = hi;
        hi += 2.0;
    }
    let mut lo_fails = false;
    while hi_ok && steps < opts.max_steps {
        steps += 1;
        if !passes(lo)? {
            lo_fails = true;
            break;
        }
        hi = lo;
        lo -= 2.0;
    }
    while hi_ok && lo_fails && hi - lo > opts.tolerance_db && steps < opts.max_steps {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let converged = hi_ok && lo_fails && hi - lo <= opts.tolerance_db;
    Ok(LinkThreshold { mcs: entry.index, link, threshold_db: hi, steps, converged })
}

/// Calibrates every entry of `initial` on every link that may carry it; an
/// entry's threshold is the highest over those links.
pub fn calibrate(initial: &McsTable, opts: &CalibrationOptions) -> Result<CalibrationReport> {
    calibrate_with_progress(initial, opts, |_| {})
}

pub fn calibrate_with_progress(
    initial: &McsTable,
    opts: &CalibrationOptions,
    mut progress: impl FnMut(&LinkThreshold),
) -> Result<CalibrationReport> {
    if opts.trials == 0 || opts.max_steps == 0 || !(opts.tolerance_db > 0.0) {
        return invalid("calibration needs trials, steps and a positive tolerance");
    }
    let num = Numerology::lte(opts.n_prb)?;
    let mut per_link = Vec::new();
    let mut flagged = Vec::new();
    let mut adjusted = Vec::new();
    let mut entries = Vec::with_capacity(initial.len());
    for entry in initial.entries() {
        let mut threshold = f64::NEG_INFINITY;
        let mut ok = true;
        for link in [LinkType::Downlink, LinkType::Sidelink] {
            if !entry.allowed_on(link) {
                continue;
            }
            let r = calibrate_entry(entry, link, opts, &num, initial)?;
            progress(&r);
            ok &= r.converged;
            threshold = threshold.max(r.threshold_db);
            per_link.push(r);
        }
        if !ok {
            flagged.push(entry.index);
        }
        // Thresholds are kept at 0.01 dB resolution.
        let mut rounded = (threshold * 100.0).ceil() / 100.0;
        if let Some(prev) = entries.last().map(|e: &McsEntry| e.snr_threshold_db) {
            if rounded <= prev {
                rounded = ((prev + 0.01) * 100.0).round() / 100.0;
                adjusted.push(entry.index);
            }
        }
        entries.push(McsEntry { snr_threshold_db: rounded, ..*entry });
    }
    Ok(CalibrationReport { table: McsTable::new(entries)?, per_link, flagged, adjusted })
}
