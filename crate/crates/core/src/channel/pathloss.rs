use serde::{Deserialize, Serialize};

use super::tables::MeasurementTable;
use super::DEFAULT_RELAY_POSITION_CM;
use crate::error::{invalid, Result};
use crate::link::LinkType;

/// Log-distance path-loss model. The remote UE moves along a line from the
/// eNodeB (position 0) through the fixed relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossParams {
    /// Loss at `ref_distance_cm`.
    pub pl0_db: f64,
    pub exponent: f64,
    pub ref_distance_cm: f64,
    pub relay_position_cm: f64,
    pub noise_floor_db: f64,
    pub gain_to_power_offset_db: f64,
}

impl PathlossParams {
    /// Unfitted starting point for `link`: only the geometry is meaningful.
    pub fn template(link: LinkType) -> Self {
        let ref_distance_cm = match link {
            LinkType::Downlink => 20.0,
            LinkType::Sidelink => 10.0,
        };
        Self {
            pl0_db: 0.0,
            exponent: 2.0,
            ref_distance_cm,
            relay_position_cm: DEFAULT_RELAY_POSITION_CM,
            noise_floor_db: 0.0,
            gain_to_power_offset_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0) || !(self.ref_distance_cm > 0.0) || self.relay_position_cm < 0.0 {
            return invalid("path-loss exponent and reference distance must be positive");
        }
        Ok(())
    }
}

pub fn effective_distance(link: LinkType, remote_pos_cm: f64, params: &PathlossParams) -> f64 {
    let d = match link {
        LinkType::Downlink => remote_pos_cm,
        LinkType::Sidelink => (remote_pos_cm - params.relay_position_cm).abs(),
    };
    d.max(params.ref_distance_cm)
}

pub fn model_snr_db(link: LinkType, tx_gain_db: f64, remote_pos_cm: f64, params: &PathlossParams) -> f64 {
    let d = effective_distance(link, remote_pos_cm, params);
    let loss = params.pl0_db + 10.0 * params.exponent * (d / params.ref_distance_cm).log10();
    tx_gain_db + params.gain_to_power_offset_db - loss - params.noise_floor_db
}

/// Least-squares fit of `pl0_db` and `exponent` to the table means, with
/// the geometry of [`PathlossParams::template`].
pub fn fit_params(table: &MeasurementTable) -> Result<PathlossParams> {
    fit_params_with(table, PathlossParams::template(table.link))
}

/// As [`fit_params`], keeping every field of `base` except the two fitted.
pub fn fit_params_with(table: &MeasurementTable, base: PathlossParams) -> Result<PathlossParams> {
    base.validate()?;
    if table.rows().len() < 3 {
        return invalid("need at least 3 rows to fit a path-loss model");
    }
    // snr = c - exponent * x with x = 10 log10(d / d0) and
    // c = tx + offset - noise_floor - pl0.
    let pts: Vec<(f64, f64)> = table
        .rows()
        .iter()
        .map(|r| {
            let d = effective_distance(table.link, r.distance_cm, &base);
            (10.0 * (d / base.ref_distance_cm).log10(), r.mean_db)
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return invalid("all rows sit at the same effective distance");
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = -sxy / sxx;
    let c = my + exponent * mx;
    let fitted = PathlossParams {
        pl0_db: table.tx_gain_db + base.gain_to_power_offset_db - base.noise_floor_db - c,
        exponent,
        ..base
    };
    if fitted.exponent <= 0.0 {
        return invalid(format!("fit produced a non-positive exponent ({exponent:.4})"));
    }
    Ok(fitted)
}

/// Root-mean-square error of the model against the table means.
pub fn fit_rms_db(table: &MeasurementTable, params: &PathlossParams) -> f64 {
    let sq: f64 = table
        .rows()
        .iter()
        .map(|r| (model_snr_db(table.link, table.tx_gain_db, r.distance_cm, params) - r.mean_db).powi(2))
        .sum();
    (sq / table.rows().len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{MeasurementRow, TableId};

    #[test]
    fn geometry() {
        let p = PathlossParams::template(LinkType::Sidelink);
        assert_eq!(effective_distance(LinkType::Sidelink, 200.0, &p), p.ref_distance_cm);
        assert_eq!(effective_distance(LinkType::Downlink, 200.0, &p), 200.0);
        assert_eq!(
            effective_distance(LinkType::Sidelink, 160.0, &p),
            effective_distance(LinkType::Sidelink, 240.0, &p)
        );
    }

    #[test]
    fn gain_shift_is_exact() {
        let p = fit_params(&MeasurementTable::embedded(TableId::Downlink55)).unwrap();
        for pos in [0.0, 50.0, 130.0, 250.0] {
            let a = model_snr_db(LinkType::Downlink, 55.0, pos, &p);
            let b = model_snr_db(LinkType::Downlink, 65.0, pos, &p);
            assert!((b - a - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_synthetic_params() {
        let truth = PathlossParams { pl0_db: 21.5, exponent: 2.7, ..PathlossParams::template(LinkType::Downlink) };
        let rows = (1..=8)
            .map(|i| {
                let d = 30.0 * f64::from(i);
                let m = model_snr_db(LinkType::Downlink, 55.0, d, &truth);
                MeasurementRow { distance_cm: d, mean_db: m, std_db: 0.0, ci95_db: 0.0, max_db: m, min_db: m }
            })
            .collect();
        let table = MeasurementTable::new(LinkType::Downlink, 55.0, rows).unwrap();
        let fit = fit_params(&table).unwrap();
        assert!((fit.exponent - truth.exponent).abs() < 1e-6);
        assert!((fit.pl0_db - truth.pl0_db).abs() < 1e-6);
        assert!(fit_rms_db(&table, &fit) < 1e-9);
    }

    #[test]
    fn degenerate_tables_rejected() {
        let row =
            |d| MeasurementRow { distance_cm: d, mean_db: 1.0, std_db: 0.0, ci95_db: 0.0, max_db: 1.0, min_db: 1.0 };
        // All three rows clamp to the reference distance.
        let table = MeasurementTable::new(LinkType::Downlink, 55.0, vec![row(0.0), row(5.0), row(10.0)]).unwrap();
        assert!(fit_params(&table).is_err());
        let short = MeasurementTable::new(LinkType::Downlink, 55.0, vec![row(30.0), row(60.0)]).unwrap();
        assert!(fit_params(&short).is_err());
    }
}
