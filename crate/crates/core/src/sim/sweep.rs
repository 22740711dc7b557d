use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::channels::ChannelSet;
use super::config::WorldConfig;
use super::mode::{select_mode, Mode};
use super::stats::{collect_stats, LinkStats};
use crate::error::{invalid, Result};
use crate::link::{LinkType, ThroughputReport};

/// One position of a distance sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub position_cm: f64,
    pub dl: Option<LinkStats>,
    pub sl: Option<LinkStats>,
    pub dl_maxtput: Option<ThroughputReport>,
    pub sl_maxtput: Option<ThroughputReport>,
    /// `None` when neither link has coverage.
    pub selected: Option<Mode>,
}

fn sweep_rng(seed: u64, index: usize, link: LinkType) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let link_bit = match link {
        LinkType::Downlink => 0u64,
        LinkType::Sidelink => 1,
    };
    rng.set_stream((1 << 62) | ((index as u64) << 1) | link_bit);
    rng
}

/// Samples both links at each position. The max throughput of a link is
/// the highest MCS whose threshold lies at or below every sample drawn, so
/// that its observed BLER stays zero. Mode selection is the plain argmax
/// of the mean SNRs.
pub fn sweep_distance(config: &WorldConfig, positions: &[f64]) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if positions.windows(2).any(|w| w[1] < w[0]) {
        return invalid("sweep positions must be sorted");
    }
    if positions.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return invalid("sweep positions must be finite and non-negative");
    }
    let table = config.mcs_table()?;
    let channels = ChannelSet::new(config)?;
    let n = config.samples_per_position;
    positions
        .iter()
        .enumerate()
        .map(|(i, &pos)| {
            let link_row = |link: LinkType| -> Result<(Option<LinkStats>, Option<ThroughputReport>)> {
                let tx = match link {
                    LinkType::Downlink => &config.enodeb,
                    LinkType::Sidelink => &config.relay_sl,
                };
                let Some(src) = channels.source(link, pos, tx) else {
                    return Ok((None, None));
                };
                let samples = src.samples(n, &mut sweep_rng(config.seed, i, link));
                let stats = collect_stats(&samples)?;
                Ok((Some(stats), table.max_throughput(stats.min_db, tx.n_prb, link)))
            };
            let (dl, dl_maxtput) = link_row(LinkType::Downlink)?;
            let (sl, sl_maxtput) = link_row(LinkType::Sidelink)?;
            let selected = select_mode(dl.map(|s| s.mean_db), sl.map(|s| s.mean_db), Mode::Downlink, 0.0);
            Ok(SweepRow { position_cm: pos, dl, sl, dl_maxtput, sl_maxtput, selected })
        })
        .collect()
}

/// First position at which the sweep selects the sidelink after having
/// selected the downlink.
pub fn crossover(rows: &[SweepRow]) -> Option<f64> {
    rows.windows(2)
        .find(|w| w[0].selected == Some(Mode::Downlink) && w[1].selected == Some(Mode::Sidelink))
        .map(|w| w[1].position_cm)
}

/// Parses `a:b:step` into the inclusive list of positions.
pub fn parse_positions(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return invalid(format!("positions '{text}' must look like start:end:step"));
    };
    let parse =
        |s: &str| s.trim().parse::<f64>().map_err(|_| crate::Error::InvalidArgument(format!("bad number '{s}'")));
    let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
    if !(step > 0.0) || b < a || a < 0.0 || !b.is_finite() {
        return invalid(format!("positions '{text}' need 0 <= start <= end and step > 0"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| a + k as f64 * step).collect())
}
