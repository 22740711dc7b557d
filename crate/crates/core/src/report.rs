//! CSV output of sweeps and measurement tables. dB values carry four
//! decimals, so a fixed seed gives byte-identical files.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::channel::MeasurementTable;
use crate::error::Result;
use crate::sim::{LinkStats, Mode, SweepRow};

pub const SWEEP_HEADER: [&str; 18] = [
    "position_cm",
    "dl_mean_db",
    "dl_std_db",
    "dl_ci95_db",
    "dl_min_db",
    "dl_max_db",
    "sl_mean_db",
    "sl_std_db",
    "sl_ci95_db",
    "sl_min_db",
    "sl_max_db",
    "dl_maxtput_bps",
    "sl_maxtput_bps",
    "selected_mode",
    "dl_mcs",
    "sl_mcs",
    "dl_maxtput_mbps",
    "sl_maxtput_mbps",
];

/// One sweep CSV line as read back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub position_cm: f64,
    pub dl_mean_db: Option<f64>,
    pub dl_std_db: Option<f64>,
    pub dl_ci95_db: Option<f64>,
    pub dl_min_db: Option<f64>,
    pub dl_max_db: Option<f64>,
    pub sl_mean_db: Option<f64>,
    pub sl_std_db: Option<f64>,
    pub sl_ci95_db: Option<f64>,
    pub sl_min_db: Option<f64>,
    pub sl_max_db: Option<f64>,
    pub dl_maxtput_bps: Option<u64>,
    pub sl_maxtput_bps: Option<u64>,
    pub selected_mode: Option<Mode>,
    pub dl_mcs: Option<u8>,
    pub sl_mcs: Option<u8>,
    pub dl_maxtput_mbps: Option<f64>,
    pub sl_maxtput_mbps: Option<f64>,
}

fn round4(x: f64) -> f64 {
    format!("{x:.4}").parse().expect("formatted float parses")
}

impl From<&SweepRow> for SweepRecord {
    fn from(r: &SweepRow) -> Self {
        let f = |s: Option<LinkStats>, g: fn(&LinkStats) -> f64| s.as_ref().map(|s| round4(g(s)));
        let mbps = |bps: Option<u64>| bps.map(|b| round4(b as f64 / 1e6));
        let dl_bps = r.dl_maxtput.as_ref().map(|t| t.throughput_bps);
        let sl_bps = r.sl_maxtput.as_ref().map(|t| t.throughput_bps);
        Self {
            position_cm: r.position_cm,
            dl_mean_db: f(r.dl, |s| s.mean_db),
            dl_std_db: f(r.dl, |s| s.std_db),
            dl_ci95_db: f(r.dl, |s| s.ci95_db),
            dl_min_db: f(r.dl, |s| s.min_db),
            dl_max_db: f(r.dl, |s| s.max_db),
            sl_mean_db: f(r.sl, |s| s.mean_db),
            sl_std_db: f(r.sl, |s| s.std_db),
            sl_ci95_db: f(r.sl, |s| s.ci95_db),
            sl_min_db: f(r.sl, |s| s.min_db),
            sl_max_db: f(r.sl, |s| s.max_db),
            dl_maxtput_bps: dl_bps,
            sl_maxtput_bps: sl_bps,
            selected_mode: r.selected,
            dl_mcs: r.dl_maxtput.as_ref().map(|t| t.mcs),
            sl_mcs: r.sl_maxtput.as_ref().map(|t| t.mcs),
            dl_maxtput_mbps: mbps(dl_bps),
            sl_maxtput_mbps: mbps(sl_bps),
        }
    }
}

fn db(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.4}"))
}

fn int<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let records: Vec<SweepRecord> = rows.iter().map(SweepRecord::from).collect();
    write_sweep_records(&records, out)
}

pub fn write_sweep_records(records: &[SweepRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in records {
        w.write_record([
            r.position_cm.to_string(),
            db(r.dl_mean_db),
            db(r.dl_std_db),
            db(r.dl_ci95_db),
            db(r.dl_min_db),
            db(r.dl_max_db),
            db(r.sl_mean_db),
            db(r.sl_std_db),
            db(r.sl_ci95_db),
            db(r.sl_min_db),
            db(r.sl_max_db),
            int(r.dl_maxtput_bps),
            int(r.sl_maxtput_bps),
            int(r.selected_mode),
            int(r.dl_mcs),
            int(r.sl_mcs),
            db(r.dl_maxtput_mbps),
            db(r.sl_maxtput_mbps),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(input: impl Read) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes a measurement table in the schema it is loaded from.
pub fn write_table_csv(table: &MeasurementTable, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["distance_cm", "mean_db", "std_db", "ci95_db", "max_db", "min_db"])?;
    for row in table.rows() {
        w.write_record([
            row.distance_cm.to_string(),
            format!("{:.4}", row.mean_db),
            format!("{:.4}", row.std_db),
            format!("{:.4}", row.ci95_db),
            format!("{:.4}", row.max_db),
            format!("{:.4}", row.min_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TableId;
    use crate::sim::{parse_positions, sweep_distance, WorldConfig};

    #[test]
    fn sweep_csv_round_trips() {
        let rows = sweep_distance(&WorldConfig::replay(40.0), &parse_positions("100:280:30").unwrap()).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let back = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows.iter().map(SweepRecord::from).collect::<Vec<_>>());
        let mut again = Vec::new();
        write_sweep_records(&back, &mut again).unwrap();
        assert_eq!(buf, again);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("position_cm,dl_mean_db,"));
        // 280 cm: no downlink, sidelink selected.
        assert!(text.lines().last().unwrap().starts_with("280,,,,,,"));
        assert!(text.lines().last().unwrap().contains(",Sidelink,"));
    }

    #[test]
    fn table_csv_round_trips() {
        for id in TableId::ALL {
            let t = MeasurementTable::embedded(id);
            let mut buf = Vec::new();
            write_table_csv(&t, &mut buf).unwrap();
            let back = MeasurementTable::from_csv_reader(buf.as_slice(), id.link(), id.tx_gain_db()).unwrap();
            assert_eq!(back, t);
        }
    }
}
