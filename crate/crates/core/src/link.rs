//! MCS semantics: modulation order and code rate per index, transport block
//! sizes, SNR thresholds, the abstract BLER model and the search for the
//! highest throughput that still runs at zero BLER.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// CRC bits carried inside every transport block.
pub const TB_CRC_BITS: usize = 24;

/// Subframes per second (1 ms TTI).
pub const SUBFRAMES_PER_SECOND: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkType {
    Downlink,
    Sidelink,
}

impl LinkType {
    /// Highest modulation order (bits per symbol) the link may carry:
    /// 64-QAM on the downlink, 16-QAM on the sidelink.
    pub fn max_order(self) -> usize {
        match self {
            LinkType::Downlink => 6,
            LinkType::Sidelink => 4,
        }
    }

    /// OFDM symbols per subframe not available for data: control region
    /// plus two reference symbols.
    pub fn overhead_symbols(self) -> usize {
        match self {
            LinkType::Downlink => 1 + 2,
            LinkType::Sidelink => 3 + 2,
        }
    }

    /// Data resource elements in a subframe of `n_prb` resource blocks.
    pub fn data_res(self, n_prb: usize) -> usize {
        n_prb * 12 * (14 - self.overhead_symbols())
    }
}

impl std::fmt::Display for LinkType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LinkType::Downlink => "downlink",
            LinkType::Sidelink => "sidelink",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: u8,
    #[serde(rename = "order")]
    pub modulation_order: usize,
    pub rate_num: u32,
    pub rate_den: u32,
    pub snr_threshold_db: f64,
}

impl McsEntry {
    pub fn code_rate(&self) -> f64 {
        f64::from(self.rate_num) / f64::from(self.rate_den)
    }

    pub fn spectral_efficiency(&self) -> f64 {
        self.modulation_order as f64 * self.code_rate()
    }

    pub fn allowed_on(&self, link: LinkType) -> bool {
        self.modulation_order <= link.max_order()
    }
}

/// Modulation order and code rate of each MCS index: QPSK for 0-10, 16-QAM
/// for 11-18, 64-QAM for 19-28. Rates are picked so that neighbouring
/// entries sit at least ~0.4 dB apart on the bit-true chain.
pub const MCS_LADDER: [(usize, u32, u32); 29] = [
    (2, 1, 14),
    (2, 1, 10),
    (2, 1, 8),
    (2, 1, 6),
    (2, 1, 5),
    (2, 1, 4),
    (2, 1, 3),
    (2, 2, 5),
    (2, 1, 2),
    (2, 3, 5),
    (2, 2, 3),
    (4, 1, 2),
    (4, 11, 20),
    (4, 3, 5),
    (4, 2, 3),
    (4, 7, 10),
    (4, 3, 4),
    (4, 33, 40),
    (4, 22, 25),
    (6, 3, 5),
    (6, 2, 3),
    (6, 7, 10),
    (6, 18, 25),
    (6, 19, 25),
    (6, 4, 5),
    (6, 5, 6),
    (6, 6, 7),
    (6, 9, 10),
    (6, 23, 25),
];

/// Transport block payload size for an explicit order and rate:
/// `floor(N_data_RE * order * rate) - 24`.
pub fn tbs_for(order: usize, rate_num: u32, rate_den: u32, n_prb: usize, link: LinkType) -> Result<usize> {
    if n_prb == 0 {
        return invalid("transport block needs at least one PRB");
    }
    if rate_den == 0 || rate_num == 0 || rate_num >= rate_den {
        return invalid(format!("code rate {rate_num}/{rate_den} outside (0, 1)"));
    }
    let coded = (link.data_res(n_prb) * order) as u64;
    let info = (coded * u64::from(rate_num) / u64::from(rate_den)) as usize;
    if info <= TB_CRC_BITS {
        return invalid("allocation too small for a transport block");
    }
    Ok(info - TB_CRC_BITS)
}

/// Shannon-gap starting point for calibration: capacity-achieving SNR for the
/// entry's spectral efficiency plus a 3 dB margin.
pub fn shannon_threshold_db(order: usize, rate: f64) -> f64 {
    10.0 * (2f64.powf(order as f64 * rate) - 1.0).log10() + 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputReport {
    pub mcs: u8,
    pub bits_per_subframe: usize,
    pub throughput_bps: u64,
    pub bler: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<McsEntry>", into = "Vec<McsEntry>")]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl TryFrom<Vec<McsEntry>> for McsTable {
    type Error = crate::Error;

    fn try_from(entries: Vec<McsEntry>) -> Result<Self> {
        McsTable::new(entries)
    }
}

impl From<McsTable> for Vec<McsEntry> {
    fn from(t: McsTable) -> Self {
        t.entries
    }
}

static STANDARD: OnceLock<McsTable> = OnceLock::new();

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("empty MCS table");
        }
        for (i, e) in entries.iter().enumerate() {
            if usize::from(e.index) != i {
                return invalid(format!("MCS entry {i} carries index {}", e.index));
            }
            if !matches!(e.modulation_order, 2 | 4 | 6) {
                return invalid(format!("MCS {i}: unsupported order {}", e.modulation_order));
            }
            if e.rate_num == 0 || e.rate_num >= e.rate_den {
                return invalid(format!("MCS {i}: code rate outside (0, 1)"));
            }
            if !e.snr_threshold_db.is_finite() {
                return invalid(format!("MCS {i}: threshold is not finite"));
            }
        }
        if let Some(w) = entries.windows(2).find(|w| w[1].snr_threshold_db <= w[0].snr_threshold_db) {
            return invalid(format!("MCS thresholds must strictly increase (index {})", w[1].index));
        }
        Ok(Self { entries })
    }

    /// The ladder with uncalibrated Shannon-gap thresholds.
    pub fn uncalibrated() -> Self {
        let entries = MCS_LADDER
            .iter()
            .enumerate()
            .map(|(i, &(order, num, den))| McsEntry {
                index: i as u8,
                modulation_order: order,
                rate_num: num,
                rate_den: den,
                snr_threshold_db: shannon_threshold_db(order, f64::from(num) / f64::from(den)),
            })
            .collect();
        Self::new(entries).expect("ladder spectral efficiency increases")
    }

    /// Calibrated table shipped with the crate.
    pub fn standard() -> &'static McsTable {
        STANDARD.get_or_init(|| {
            serde_json::from_str(include_str!("../data/mcs_table.json")).expect("embedded MCS table is valid")
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("MCS entries serialize")
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, mcs: u8) -> Result<&McsEntry> {
        match self.entries.get(usize::from(mcs)) {
            Some(e) => Ok(e),
            None => invalid(format!("MCS index {mcs} not in table (0..{})", self.entries.len())),
        }
    }

    /// Entry for `mcs`, rejected if its modulation exceeds the link's cap.
    pub fn for_link(&self, mcs: u8, link: LinkType) -> Result<&McsEntry> {
        let e = self.get(mcs)?;
        if !e.allowed_on(link) {
            return invalid(format!(
                "MCS {mcs} uses order {} which exceeds the {link} cap of {}",
                e.modulation_order,
                link.max_order()
            ));
        }
        Ok(e)
    }

    /// Highest MCS index allowed on `link`.
    pub fn max_index(&self, link: LinkType) -> u8 {
        self.entries.iter().rev().find(|e| e.allowed_on(link)).map_or(0, |e| e.index)
    }

    pub fn transport_block_bits(&self, mcs: u8, n_prb: usize, link: LinkType) -> Result<usize> {
        let e = self.for_link(mcs, link)?;
        tbs_for(e.modulation_order, e.rate_num, e.rate_den, n_prb, link)
    }

    /// Highest-index MCS whose threshold is at or below `snr_db`, with the
    /// throughput it yields. `None` if not even the lowest entry qualifies.
    pub fn max_throughput(&self, snr_db: f64, n_prb: usize, link: LinkType) -> Option<ThroughputReport> {
        let e = self.entries.iter().rev().find(|e| e.allowed_on(link) && e.snr_threshold_db <= snr_db)?;
        let bits = self.transport_block_bits(e.index, n_prb, link).ok()?;
        Some(ThroughputReport {
            mcs: e.index,
            bits_per_subframe: bits,
            throughput_bps: bits as u64 * SUBFRAMES_PER_SECOND,
            bler: 0.0,
        })
    }

    /// Abstract BLER: zero at or above threshold, rising as
    /// `1 - exp(-k * deficit)` below it with `k` chosen so that 3 dB under
    /// threshold gives 0.99.
    pub fn bler_for(&self, snr_db: f64, mcs: u8, link: LinkType) -> Result<f64> {
        let e = self.for_link(mcs, link)?;
        Ok(abstract_bler(e.snr_threshold_db - snr_db))
    }
}

pub(crate) fn abstract_bler(deficit_db: f64) -> f64 {
    if deficit_db <= 0.0 {
        return 0.0;
    }
    let k = 100f64.ln() / 3.0;
    1.0 - (-k * deficit_db).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tbs_formula_examples() {
        assert_eq!(tbs_for(2, 1, 3, 25, LinkType::Sidelink).unwrap(), 1776);
        assert_eq!(tbs_for(6, 3, 4, 25, LinkType::Downlink).unwrap(), 14826);
        assert!(tbs_for(2, 1, 3, 0, LinkType::Sidelink).is_err());
    }

    #[test]
    fn ladder_spectral_efficiency_increases() {
        let se: Vec<f64> = MCS_LADDER.iter().map(|&(o, n, d)| o as f64 * f64::from(n) / f64::from(d)).collect();
        assert!(se.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(MCS_LADDER[22].0, 6);
        assert_eq!(MCS_LADDER[11].0, 4);
    }

    #[test]
    fn caps_per_link() {
        let t = McsTable::standard();
        assert_eq!(t.len(), 29);
        assert!(t.for_link(22, LinkType::Sidelink).is_err());
        assert!(t.for_link(22, LinkType::Downlink).is_ok());
        assert_eq!(t.entries()[usize::from(t.max_index(LinkType::Sidelink))].modulation_order, 4);
        assert!(t.transport_block_bits(0, 0, LinkType::Downlink).is_err());
        assert!(t.get(29).is_err());
    }

    #[test]
    fn max_throughput_edges() {
        let t = McsTable::standard();
        let lowest = t.entries()[0].snr_threshold_db;
        assert!(t.max_throughput(lowest - 0.01, 25, LinkType::Downlink).is_none());
        let dl = t.max_throughput(80.0, 25, LinkType::Downlink).unwrap();
        let sl = t.max_throughput(80.0, 25, LinkType::Sidelink).unwrap();
        assert_eq!(dl.mcs, 28);
        assert_eq!(t.entries()[usize::from(sl.mcs)].modulation_order, 4);
        assert_eq!(sl.mcs, t.max_index(LinkType::Sidelink));
        assert!(dl.throughput_bps > sl.throughput_bps);
        assert_eq!(dl.throughput_bps, dl.bits_per_subframe as u64 * 1000);
    }

    #[test]
    fn max_throughput_is_a_nondecreasing_step() {
        let t = McsTable::standard();
        for link in [LinkType::Downlink, LinkType::Sidelink] {
            let mut prev = 0u64;
            for i in 0..=100 {
                let snr = -10.0 + 0.5 * f64::from(i);
                let tput = t.max_throughput(snr, 25, link).map_or(0, |r| r.throughput_bps);
                assert!(tput >= prev, "{link} at {snr} dB");
                prev = tput;
            }
        }
        // right-continuous: exactly at a threshold the entry already applies
        let e = t.entries()[7];
        assert_eq!(t.max_throughput(e.snr_threshold_db, 25, LinkType::Downlink).unwrap().mcs, 7);
    }

    #[test]
    fn abstract_bler_shape() {
        let t = McsTable::standard();
        let thr = t.entries()[5].snr_threshold_db;
        assert_eq!(t.bler_for(thr, 5, LinkType::Sidelink).unwrap(), 0.0);
        assert!(t.bler_for(thr - 10.0, 5, LinkType::Sidelink).unwrap() >= 0.99);
        assert!((t.bler_for(thr - 3.0, 5, LinkType::Sidelink).unwrap() - 0.99).abs() < 1e-12);
        let mut prev = 1.0;
        for i in 0..200 {
            let b = t.bler_for(thr - 10.0 + 0.1 * f64::from(i), 5, LinkType::Sidelink).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        assert!(t.bler_for(thr, 20, LinkType::Sidelink).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let t = McsTable::uncalibrated();
        let text = t.to_json();
        assert!(text.contains("\"order\""));
        assert!(text.contains("\"rate_num\""));
        assert_eq!(McsTable::from_json(&text).unwrap(), t);
        let broken = text.replacen("\"index\": 1,", "\"index\": 7,", 1);
        assert!(McsTable::from_json(&broken).is_err());
    }
}
