use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::link::LinkType;

/// Every row of the shipped tables averages this many measurements.
pub const SAMPLES_PER_ROW: usize = 1000;
/// Allowed gap between a row's published CI width and 1.96·std/√n.
pub const CI_TOLERANCE_DB: f64 = 0.0002;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub distance_cm: f64,
    pub mean_db: f64,
    pub std_db: f64,
    pub ci95_db: f64,
    pub max_db: f64,
    pub min_db: f64,
}

impl MeasurementRow {
    /// Gap between the published CI width and the one implied by `std_db`.
    pub fn ci_deviation(&self, n: usize) -> f64 {
        (self.ci95_db - 1.96 * self.std_db / (n as f64).sqrt()).abs()
    }
}

/// The three embedded measurement campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableId {
    Sidelink30,
    Sidelink40,
    Downlink55,
}

impl TableId {
    pub const ALL: [TableId; 3] = [TableId::Sidelink30, TableId::Sidelink40, TableId::Downlink55];

    pub fn number(self) -> usize {
        match self {
            TableId::Sidelink30 => 1,
            TableId::Sidelink40 => 2,
            TableId::Downlink55 => 3,
        }
    }

    pub fn from_number(n: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.number() == n)
    }

    fn csv(self) -> &'static str {
        match self {
            TableId::Sidelink30 => include_str!("../../data/table1_sidelink_30db.csv"),
            TableId::Sidelink40 => include_str!("../../data/table2_sidelink_40db.csv"),
            TableId::Downlink55 => include_str!("../../data/table3_downlink_55db.csv"),
        }
    }

    pub fn link(self) -> LinkType {
        match self {
            TableId::Downlink55 => LinkType::Downlink,
            _ => LinkType::Sidelink,
        }
    }

    pub fn tx_gain_db(self) -> f64 {
        match self {
            TableId::Sidelink30 => 30.0,
            TableId::Sidelink40 => 40.0,
            TableId::Downlink55 => 55.0,
        }
    }
}

/// Distance-indexed SNR statistics measured at one transmitter gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementTable {
    pub link: LinkType,
    pub tx_gain_db: f64,
    rows: Vec<MeasurementRow>,
}

impl MeasurementTable {
    /// Validates ordering and per-row bounds.
    pub fn new(link: LinkType, tx_gain_db: f64, rows: Vec<MeasurementRow>) -> Result<Self> {
        if rows.is_empty() {
            return invalid("measurement table has no rows");
        }
        for pair in rows.windows(2) {
            if pair[1].distance_cm <= pair[0].distance_cm {
                return invalid(format!(
                    "distances must be strictly increasing ({} then {})",
                    pair[0].distance_cm, pair[1].distance_cm
                ));
            }
        }
        for r in &rows {
            let finite =
                [r.distance_cm, r.mean_db, r.std_db, r.ci95_db, r.max_db, r.min_db].iter().all(|v| v.is_finite());
            if !finite || r.std_db < 0.0 || r.distance_cm < 0.0 {
                return invalid(format!("row at {} cm has invalid values", r.distance_cm));
            }
            if !(r.min_db <= r.mean_db && r.mean_db <= r.max_db) {
                return invalid(format!("row at {} cm violates min <= mean <= max", r.distance_cm));
            }
        }
        Ok(Self { link, tx_gain_db, rows })
    }

    pub fn embedded(id: TableId) -> Self {
        Self::from_csv_reader(id.csv().as_bytes(), id.link(), id.tx_gain_db()).expect("embedded table is valid")
    }

    /// Reads the `distance_cm,mean_db,std_db,ci95_db,max_db,min_db` schema.
    pub fn from_csv_reader(reader: impl Read, link: LinkType, tx_gain_db: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<MeasurementRow>, _>>()?;
        Self::new(link, tx_gain_db, rows)
    }

    pub fn load_csv(path: impl AsRef<Path>, link: LinkType, tx_gain_db: f64) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?, link, tx_gain_db)
    }

    pub fn rows(&self) -> &[MeasurementRow] {
        &self.rows
    }

    pub fn first_distance(&self) -> f64 {
        self.rows[0].distance_cm
    }

    pub fn last_distance(&self) -> f64 {
        self.rows[self.rows.len() - 1].distance_cm
    }

    pub fn row_at(&self, distance_cm: f64) -> Option<&MeasurementRow> {
        self.rows.iter().find(|r| r.distance_cm == distance_cm)
    }

    /// Linear interpolation of every column at `distance_cm`; `None`
    /// outside the measured range.
    pub fn interpolate(&self, distance_cm: f64) -> Option<MeasurementRow> {
        if !(self.first_distance()..=self.last_distance()).contains(&distance_cm) {
            return None;
        }
        let hi = self.rows.partition_point(|r| r.distance_cm < distance_cm);
        let b = self.rows[hi];
        if b.distance_cm == distance_cm || hi == 0 {
            return Some(b);
        }
        let a = self.rows[hi - 1];
        let t = (distance_cm - a.distance_cm) / (b.distance_cm - a.distance_cm);
        let lerp = |x: f64, y: f64| x + t * (y - x);
        Some(MeasurementRow {
            distance_cm,
            mean_db: lerp(a.mean_db, b.mean_db),
            std_db: lerp(a.std_db, b.std_db),
            ci95_db: lerp(a.ci95_db, b.ci95_db),
            max_db: lerp(a.max_db, b.max_db),
            min_db: lerp(a.min_db, b.min_db),
        })
    }

    /// Rows whose CI width disagrees with 1.96·std/√n by more than
    /// [`CI_TOLERANCE_DB`].
    pub fn ci_violations(&self, n: usize) -> Vec<MeasurementRow> {
        self.rows.iter().copied().filter(|r| r.ci_deviation(n) > CI_TOLERANCE_DB).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_tables_load() {
        let sizes: Vec<usize> = TableId::ALL.iter().map(|&t| MeasurementTable::embedded(t).rows().len()).collect();
        assert_eq!(sizes, vec![9, 9, 13]);
        let t3 = MeasurementTable::embedded(TableId::Downlink55);
        assert_eq!(t3.row_at(140.0).unwrap().mean_db, 13.1189);
        assert_eq!(t3.link, LinkType::Downlink);
    }

    #[test]
    fn ci_anchor_rows() {
        let t1 = MeasurementTable::embedded(TableId::Sidelink30);
        assert!((1.96 * t1.row_at(120.0).unwrap().std_db / 1000f64.sqrt() - 0.005033).abs() < 1e-6);
        for id in TableId::ALL {
            assert!(MeasurementTable::embedded(id).ci_violations(SAMPLES_PER_ROW).is_empty());
        }
    }

    #[test]
    fn interpolation() {
        let t = MeasurementTable::embedded(TableId::Sidelink40);
        let mid = t.interpolate(190.0).unwrap();
        assert!((mid.mean_db - (23.6827 + 29.2872) / 2.0).abs() < 1e-12);
        assert_eq!(t.interpolate(200.0).unwrap(), *t.row_at(200.0).unwrap());
        assert!(t.interpolate(119.9).is_none());
        assert!(t.interpolate(280.1).is_none());
    }

    #[test]
    fn rejects_bad_tables() {
        let header = "distance_cm,mean_db,std_db,ci95_db,max_db,min_db\n";
        assert!(MeasurementTable::from_csv_reader(header.as_bytes(), LinkType::Sidelink, 30.0).is_err());
        let unsorted = format!("{header}20,1,0.1,0.0062,2,0\n10,1,0.1,0.0062,2,0\n");
        assert!(MeasurementTable::from_csv_reader(unsorted.as_bytes(), LinkType::Sidelink, 30.0).is_err());
        let bounds = format!("{header}10,3,0.1,0.0062,2,0\n");
        assert!(MeasurementTable::from_csv_reader(bounds.as_bytes(), LinkType::Sidelink, 30.0).is_err());
        assert!(MeasurementTable::from_csv_reader("garbage".as_bytes(), LinkType::Sidelink, 30.0).is_err());
    }
}
