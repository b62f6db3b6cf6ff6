use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimation::{
    AlwaysDetect, BernoulliDetector, MarginDetector, PreambleDetector, TAG_GENIE, TAG_GROUND_TRUTH,
    TAG_PREAMBLE,
};

/// Default AR order of the Kalman fallback in the combined technique.
pub const COMBINED_KALMAN_ORDER: usize = 20;

/// A channel estimation technique the harness can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    /// No equalization; scored on decoding only.
    Standard,
    GroundTruth,
    Preamble,
    Genie,
    Previous { age_ms: i64 },
    Kalman { order: usize },
    /// Estimates read from a `.vvdest` file per test set.
    Vvd,
    PreambleVvd,
    PreambleKalman { order: usize },
}

impl Technique {
    pub fn tag(&self) -> String {
        match self {
            Technique::Standard => "standard".into(),
            Technique::GroundTruth => TAG_GROUND_TRUTH.into(),
            Technique::Preamble => TAG_PREAMBLE.into(),
            Technique::Genie => TAG_GENIE.into(),
            Technique::Previous { age_ms } => crate::estimation::previous_tag(*age_ms),
            Technique::Kalman { order } => crate::estimation::kalman_tag(*order),
            Technique::Vvd => "vvd".into(),
            Technique::PreambleVvd => "preamble-vvd".into(),
            Technique::PreambleKalman { order } if *order == COMBINED_KALMAN_ORDER => {
                "preamble-kalman".into()
            }
            Technique::PreambleKalman { order } => format!("preamble-kalman-ar{order}"),
        }
    }

    /// AR order this technique needs fitted, if any.
    pub fn kalman_order(&self) -> Option<usize> {
        match self {
            Technique::Kalman { order } | Technique::PreambleKalman { order } => Some(*order),
            _ => None,
        }
    }

    pub fn needs_vvd(&self) -> bool {
        matches!(self, Technique::Vvd | Technique::PreambleVvd)
    }

    /// The default comparison set without file-fed estimates.
    pub fn defaults() -> Vec<Technique> {
        vec![
            Technique::Standard,
            Technique::GroundTruth,
            Technique::Preamble,
            Technique::Genie,
            Technique::Previous { age_ms: 100 },
            Technique::Previous { age_ms: 500 },
            Technique::Kalman { order: 1 },
            Technique::Kalman { order: 3 },
            Technique::PreambleKalman {
                order: COMBINED_KALMAN_ORDER,
            },
        ]
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

fn parse_suffix<T: FromStr>(s: &str, prefix: &str, suffix: &str) -> Option<T> {
    s.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = match s {
            "standard" => Technique::Standard,
            "ground-truth" => Technique::GroundTruth,
            "preamble" => Technique::Preamble,
            "genie" => Technique::Genie,
            "vvd" => Technique::Vvd,
            "preamble-vvd" => Technique::PreambleVvd,
            "preamble-kalman" => Technique::PreambleKalman {
                order: COMBINED_KALMAN_ORDER,
            },
            _ => {
                if let Some(age_ms) = parse_suffix::<i64>(s, "prev-", "ms").filter(|a| *a > 0) {
                    Technique::Previous { age_ms }
                } else if let Some(order) = parse_suffix::<usize>(s, "kalman-ar", "").filter(|p| *p > 0) {
                    Technique::Kalman { order }
                } else if let Some(order) =
                    parse_suffix::<usize>(s, "preamble-kalman-ar", "").filter(|p| *p > 0)
                {
                    Technique::PreambleKalman { order }
                } else {
                    return Err(Error::arg(format!("unknown technique `{s}`")));
                }
            }
        };
        Ok(t)
    }
}

/// Preamble detector used by the preamble-based and combined techniques.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorKind {
    Always,
    Margin { threshold: i32 },
    Bernoulli { failure_prob: f64, seed: u64 },
}

impl Default for DetectorKind {
    fn default() -> Self {
        DetectorKind::Margin {
            threshold: MarginDetector::default().threshold,
        }
    }
}

impl DetectorKind {
    pub fn build(&self) -> Result<Box<dyn PreambleDetector + Send + Sync>> {
        Ok(match *self {
            DetectorKind::Always => Box::new(AlwaysDetect),
            DetectorKind::Margin { threshold } => Box::new(MarginDetector { threshold }),
            DetectorKind::Bernoulli { failure_prob, seed } => {
                Box::new(BernoulliDetector::new(failure_prob, seed)?)
            }
        })
    }
}
