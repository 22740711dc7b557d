use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sidelink_core::channel::{fit_params, fit_rms_db, replay_sample, MeasurementTable, TableId, TruncatedNormal};
use sidelink_core::link::{LinkType, McsTable};
use sidelink_core::sim::{ChannelSet, WorldConfig};

#[test]
fn analytic_fit_stays_close_to_the_tables() {
    let limits = [(TableId::Downlink55, 2.0), (TableId::Sidelink40, 3.0), (TableId::Sidelink30, 3.0)];
    for (id, limit) in limits {
        let t = MeasurementTable::embedded(id);
        let rms = fit_rms_db(&t, &fit_params(&t).unwrap());
        println!("table {}: fit rms {rms:.3} dB", id.number());
        assert!(rms <= limit, "table {}: rms {rms:.3} dB", id.number());
    }
}

#[test]
fn analytic_world_channels_follow_distance() {
    let cfg = WorldConfig::analytic();
    let ch = ChannelSet::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let near = ch.sample(LinkType::Downlink, 40.0, &cfg.enodeb, &mut rng).unwrap();
    let far = ch.sample(LinkType::Downlink, 240.0, &cfg.enodeb, &mut rng).unwrap();
    assert!(near > far);
    assert!(ch.sample(LinkType::Downlink, 270.0, &cfg.enodeb, &mut rng).is_none());
}

proptest! {
    #[test]
    fn replay_never_leaves_the_row_bounds(table in 1usize..=3, pos in 0.0f64..300.0, seed in any::<u64>()) {
        let t = MeasurementTable::embedded(TableId::from_number(table).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match (replay_sample(&t, pos, &mut rng), t.interpolate(pos)) {
            (Some(x), Some(row)) => prop_assert!(x >= row.min_db && x <= row.max_db),
            (None, None) => {}
            (a, b) => prop_assert!(false, "sample {:?} for row {:?}", a, b),
        }
    }

    #[test]
    fn truncated_quantile_is_monotone_and_bounded(u in 0.0f64..1.0, v in 0.0f64..1.0, row in 0usize..13) {
        let t = MeasurementTable::embedded(TableId::Downlink55);
        let r = &t.rows()[row];
        let d = TruncatedNormal::for_row(r);
        let (a, b) = (d.quantile(u.min(v)), d.quantile(u.max(v)));
        prop_assert!(a <= b);
        prop_assert!(a >= r.min_db && b <= r.max_db);
    }

    #[test]
    fn gain_shifts_the_replayed_snr(extra in 0.0f64..20.0, pos in 120.0f64..280.0) {
        let cfg = WorldConfig::replay(40.0);
        let ch = ChannelSet::new(&cfg).unwrap();
        let base = ch.source(LinkType::Sidelink, pos, &cfg.relay_sl).unwrap();
        let mut louder = cfg.relay_sl;
        louder.tx_gain_db += extra;
        let up = ch.source(LinkType::Sidelink, pos, &louder).unwrap();
        let a = base.sample(&mut ChaCha8Rng::seed_from_u64(9));
        let b = up.sample(&mut ChaCha8Rng::seed_from_u64(9));
        prop_assert!((b - a - extra).abs() < 1e-9);
    }

    #[test]
    fn throughput_is_monotone_in_snr(a in -20.0f64..40.0, b in -20.0f64..40.0, prb in prop::sample::select(vec![6usize, 15, 25, 50, 75, 100])) {
        let t = McsTable::standard();
        for link in [LinkType::Downlink, LinkType::Sidelink] {
            let tp = |s: f64| t.max_throughput(s, prb, link).map_or(0, |r| r.throughput_bps);
            prop_assert!(tp(a.min(b)) <= tp(a.max(b)));
        }
    }
}
