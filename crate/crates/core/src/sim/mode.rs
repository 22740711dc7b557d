use serde::{Deserialize, Serialize};

use crate::link::LinkType;

/// Which link the remote UE receives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(alias = "downlink")]
    Downlink,
    #[serde(alias = "sidelink")]
    Sidelink,
}

impl Mode {
    pub fn link(self) -> LinkType {
        match self {
            Mode::Downlink => LinkType::Downlink,
            Mode::Sidelink => LinkType::Sidelink,
        }
    }

    pub fn other(self) -> Mode {
        match self {
            Mode::Downlink => Mode::Sidelink,
            Mode::Sidelink => Mode::Downlink,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Downlink => "Downlink",
            Mode::Sidelink => "Sidelink",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "downlink" => Ok(Mode::Downlink),
            "sidelink" => Ok(Mode::Sidelink),
            _ => Err(format!("unknown mode '{s}'")),
        }
    }
}

/// Picks the link to receive on. `None` SNR means out of coverage. Leaves
/// `current` only when the other link is better by more than
/// `hysteresis_db`. Returns `None` when neither link has coverage.
pub fn select_mode(dl: Option<f64>, sl: Option<f64>, current: Mode, hysteresis_db: f64) -> Option<Mode> {
    match (dl, sl) {
        (None, None) => None,
        (Some(_), None) => Some(Mode::Downlink),
        (None, Some(_)) => Some(Mode::Sidelink),
        (Some(d), Some(s)) => {
            let (cur, other) = match current {
                Mode::Downlink => (d, s),
                Mode::Sidelink => (s, d),
            };
            if other - cur > hysteresis_db.max(0.0) {
                Some(current.other())
            } else {
                Some(current)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        assert_eq!(select_mode(Some(14.8763), Some(12.3448), Mode::Downlink, 0.0), Some(Mode::Downlink));
        assert_eq!(select_mode(Some(14.8763), Some(12.3448), Mode::Sidelink, 0.0), Some(Mode::Downlink));
        assert_eq!(select_mode(Some(11.6577), Some(29.2872), Mode::Downlink, 0.0), Some(Mode::Sidelink));
        assert_eq!(select_mode(None, Some(-3.0), Mode::Downlink, 3.0), Some(Mode::Sidelink));
        assert_eq!(select_mode(Some(-30.0), None, Mode::Sidelink, 3.0), Some(Mode::Downlink));
        assert_eq!(select_mode(None, None, Mode::Downlink, 0.0), None);
    }

    #[test]
    fn hysteresis_holds_current_mode() {
        assert_eq!(select_mode(Some(10.0), Some(12.0), Mode::Downlink, 3.0), Some(Mode::Downlink));
        assert_eq!(select_mode(Some(10.0), Some(13.5), Mode::Downlink, 3.0), Some(Mode::Sidelink));
    }

    proptest::proptest! {
        #[test]
        fn zero_hysteresis_is_argmax(d in -20.0f64..40.0, s in -20.0f64..40.0, h in 0.0f64..10.0) {
            proptest::prop_assume!(d != s);
            let best = if d > s { Mode::Downlink } else { Mode::Sidelink };
            for cur in [Mode::Downlink, Mode::Sidelink] {
                proptest::prop_assert_eq!(select_mode(Some(d), Some(s), cur, 0.0), Some(best));
                if (d - s).abs() > h {
                    proptest::prop_assert_eq!(select_mode(Some(d), Some(s), cur, h), Some(best));
                }
            }
        }
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("sidelink".parse::<Mode>().unwrap(), Mode::Sidelink);
        assert_eq!(Mode::Downlink.to_string(), "Downlink");
        assert!("uplink".parse::<Mode>().is_err());
    }
}
