use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::Rng;

use super::config::{ChannelConfig, RadioParams, WorldConfig};
use crate::channel::{
    fit_params_with, model_snr_db, MeasurementTable, PathlossParams, TableId, TruncatedNormal,
    DOWNLINK_COVERAGE_EDGE_CM,
};
use crate::error::Result;
use crate::link::LinkType;

#[derive(Debug, Clone)]
enum LinkChannel {
    /// Candidate tables; the one whose gain is closest to the transmitter's
    /// is used and shifted by the difference.
    Replay(Vec<MeasurementTable>),
    Analytic(PathlossParams),
}

/// SNR at one position for one link: a truncated normal or a fixed value,
/// plus a dB shift for transmitter gain and amplitude.
#[derive(Debug, Clone, Copy)]
pub enum SnrSource {
    Random { dist: TruncatedNormal, shift_db: f64 },
    Fixed(f64),
}

impl SnrSource {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            SnrSource::Random { dist, shift_db } => dist.sample(rng) + shift_db,
            SnrSource::Fixed(v) => *v,
        }
    }

    pub fn samples(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            SnrSource::Random { dist, shift_db } => {
                dist.sample_stratified(n, rng).into_iter().map(|x| x + shift_db).collect()
            }
            SnrSource::Fixed(v) => vec![*v; n],
        }
    }
}

type FitCache = Arc<Mutex<HashMap<(LinkType, usize, u64), TruncatedNormal>>>;

/// Position-to-SNR mapping for both links of a scenario.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    downlink: LinkChannel,
    sidelink: LinkChannel,
    relay_position_cm: f64,
    /// Fitted distributions keyed by (link, table index, query position bits).
    fits: FitCache,
}

fn amplitude_db(amplitude: f64) -> f64 {
    20.0 * amplitude.log10()
}

impl ChannelSet {
    pub fn new(config: &WorldConfig) -> Result<Self> {
        let relay = config.relay_position_cm;
        let (downlink, sidelink) = match &config.channel {
            ChannelConfig::Replay { tables } => {
                let mut dl = Vec::new();
                let mut sl = Vec::new();
                for src in tables {
                    let t = MeasurementTable::load_csv(&src.path, src.link, src.tx_gain_db)?;
                    match src.link {
                        LinkType::Downlink => dl.push(t),
                        LinkType::Sidelink => sl.push(t),
                    }
                }
                if dl.is_empty() {
                    dl.push(MeasurementTable::embedded(TableId::Downlink55));
                }
                if sl.is_empty() {
                    sl.push(MeasurementTable::embedded(TableId::Sidelink30));
                    sl.push(MeasurementTable::embedded(TableId::Sidelink40));
                }
                (LinkChannel::Replay(dl), LinkChannel::Replay(sl))
            }
            ChannelConfig::Analytic { downlink, sidelink } => {
                let fit = |given: &Option<PathlossParams>, id: TableId| -> Result<PathlossParams> {
                    match given {
                        Some(p) => Ok(*p),
                        None => {
                            let base =
                                PathlossParams { relay_position_cm: relay, ..PathlossParams::template(id.link()) };
                            fit_params_with(&MeasurementTable::embedded(id), base)
                        }
                    }
                };
                (
                    LinkChannel::Analytic(fit(downlink, TableId::Downlink55)?),
                    LinkChannel::Analytic(fit(sidelink, TableId::Sidelink40)?),
                )
            }
        };
        Ok(Self { downlink, sidelink, relay_position_cm: relay, fits: Arc::default() })
    }

    /// SNR source for `link` with the receiver at `pos_cm` and the
    /// transmitter configured by `tx`; `None` outside coverage.
    pub fn source(&self, link: LinkType, pos_cm: f64, tx: &RadioParams) -> Option<SnrSource> {
        if link == LinkType::Downlink && pos_cm > DOWNLINK_COVERAGE_EDGE_CM {
            return None;
        }
        let chan = match link {
            LinkType::Downlink => &self.downlink,
            LinkType::Sidelink => &self.sidelink,
        };
        match chan {
            LinkChannel::Replay(tables) => {
                let (index, table) = tables
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        (a.tx_gain_db - tx.tx_gain_db).abs().total_cmp(&(b.tx_gain_db - tx.tx_gain_db).abs())
                    })
                    .expect("at least one table per link");
                let query = match link {
                    LinkType::Downlink => pos_cm,
                    // Sidelink tables are indexed by the remote's position
                    // with the relay at the default spot; keep the same
                    // relative geometry if the relay moves.
                    LinkType::Sidelink => pos_cm - self.relay_position_cm + crate::channel::DEFAULT_RELAY_POSITION_CM,
                };
                let row = table.interpolate(query)?;
                let dist = *self
                    .fits
                    .lock()
                    .expect("fit cache lock")
                    .entry((link, index, query.to_bits()))
                    .or_insert_with(|| TruncatedNormal::for_row(&row));
                Some(SnrSource::Random {
                    dist,
                    shift_db: tx.tx_gain_db - table.tx_gain_db + amplitude_db(tx.amplitude),
                })
            }
            LinkChannel::Analytic(p) => {
                Some(SnrSource::Fixed(model_snr_db(link, tx.tx_gain_db, pos_cm, p) + amplitude_db(tx.amplitude)))
            }
        }
    }

    pub fn sample(&self, link: LinkType, pos_cm: f64, tx: &RadioParams, rng: &mut impl Rng) -> Option<f64> {
        self.source(link, pos_cm, tx).map(|s| s.sample(rng))
    }

    pub fn relay_position_cm(&self) -> f64 {
        self.relay_position_cm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn replay_picks_nearest_gain_and_shifts() {
        let mut cfg = WorldConfig::replay(40.0);
        let set = ChannelSet::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mean = |set: &ChannelSet, tx: &RadioParams, rng: &mut ChaCha8Rng| {
            set.source(LinkType::Sidelink, 200.0, tx).unwrap().samples(n, rng).iter().sum::<f64>() / n as f64
        };
        assert!((mean(&set, &cfg.relay_sl, &mut rng) - 29.2872).abs() < 0.02);
        cfg.relay_sl.tx_gain_db = 43.0;
        assert!((mean(&set, &cfg.relay_sl, &mut rng) - 32.2872).abs() < 0.02);
        cfg.relay_sl.tx_gain_db = 30.0;
        let t1 = MeasurementTable::embedded(TableId::Sidelink30);
        let want = t1.row_at(200.0).unwrap().mean_db;
        assert!((mean(&set, &cfg.relay_sl, &mut rng) - want).abs() < 0.02);
        cfg.relay_sl.amplitude = 0.5;
        assert!((mean(&set, &cfg.relay_sl, &mut rng) - (want - 6.0206)).abs() < 0.02);
    }

    #[test]
    fn coverage_edges() {
        let cfg = WorldConfig::default();
        let set = ChannelSet::new(&cfg).unwrap();
        assert!(set.source(LinkType::Downlink, 240.0, &cfg.enodeb).is_some());
        assert!(set.source(LinkType::Downlink, 260.0, &cfg.enodeb).is_none());
        assert!(set.source(LinkType::Sidelink, 100.0, &cfg.relay_sl).is_none());
        let analytic = ChannelSet::new(&WorldConfig::analytic()).unwrap();
        assert!(analytic.source(LinkType::Downlink, 260.0, &cfg.enodeb).is_none());
        assert!(analytic.source(LinkType::Sidelink, 50.0, &cfg.relay_sl).is_some());
    }
}
