//! Packet, chip and bit error rates, estimation MSE and aging sweeps.
//!
//! A packet without an estimate counts as erroneous with all 8128 chips
//! wrong and is left out of the MSE. MSE uses the squared modulus of the
//! complex tap error, averaged over packets and taps.

use serde::Serialize;

use crate::equalization::EqualizerConfig;
use crate::error::{Error, Result};
use crate::estimation::EstimateHistory;
use crate::modem::{PSDU_CHIPS, PSDU_LEN};
use crate::receiver::{decode_with_estimate, PacketOutcome};
use crate::trace::{Cir, TraceRecord};

/// Pairwise (cascade) summation; the result depends only on the order of
/// `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn check_counts(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::arg("no packets to score"));
    }
    if a != b {
        return Err(Error::arg(format!("{a} decoded packets against {b} references")));
    }
    Ok(())
}

/// Fraction of packets whose decoded PSDU differs from the truth. `None`
/// marks a packet that could not be decoded.
pub fn packet_error_rate(decoded: &[Option<Vec<u8>>], truth: &[Vec<u8>]) -> Result<f64> {
    check_counts(decoded.len(), truth.len())?;
    let errors = decoded
        .iter()
        .zip(truth)
        .filter(|(d, t)| d.as_deref() != Some(t.as_slice()))
        .count();
    Ok(errors as f64 / decoded.len() as f64)
}

/// Fraction of wrong PSDU chips over `8128` chips per packet. `None`
/// charges a whole packet of errors.
pub fn chip_error_rate(decided: &[Option<Vec<u8>>], truth: &[Vec<u8>]) -> Result<f64> {
    check_counts(decided.len(), truth.len())?;
    let mut errors = 0usize;
    for (d, t) in decided.iter().zip(truth) {
        if t.len() != PSDU_CHIPS {
            return Err(Error::arg(format!("reference packet has {} chips", t.len())));
        }
        match d {
            None => errors += PSDU_CHIPS,
            Some(d) if d.len() != PSDU_CHIPS => {
                return Err(Error::arg(format!("decided packet has {} chips", d.len())))
            }
            Some(d) => errors += d.iter().zip(t).filter(|(a, b)| (**a != 0) != (**b != 0)).count(),
        }
    }
    Ok(errors as f64 / (PSDU_CHIPS * decided.len()) as f64)
}

/// Fraction of wrong PSDU bits over `1016` bits per packet.
pub fn bit_error_rate(decoded: &[Option<Vec<u8>>], truth: &[Vec<u8>]) -> Result<f64> {
    check_counts(decoded.len(), truth.len())?;
    let bits = PSDU_LEN * 8;
    let mut errors = 0usize;
    for (d, t) in decoded.iter().zip(truth) {
        if t.len() != PSDU_LEN {
            return Err(Error::arg(format!("reference PSDU has {} bytes", t.len())));
        }
        errors += match d {
            None => bits,
            Some(d) if d.len() != PSDU_LEN => {
                return Err(Error::arg(format!("decoded PSDU has {} bytes", d.len())))
            }
            Some(d) => d.iter().zip(t).map(|(a, b)| (a ^ b).count_ones() as usize).sum(),
        };
    }
    Ok(errors as f64 / (bits * decoded.len()) as f64)
}

/// `sum_k sum_l |h_l^k - est_l^k|^2 / (z n)` over `z` packets of `n` taps.
pub fn mse(estimates: &[Cir], truths: &[Cir]) -> Result<f64> {
    check_counts(estimates.len(), truths.len())?;
    let n = truths[0].len();
    let mut per_packet = Vec::with_capacity(estimates.len());
    for (e, t) in estimates.iter().zip(truths) {
        if e.len() != n || t.len() != n {
            return Err(Error::arg("estimates and truths must share one tap count"));
        }
        per_packet.push(e.squared_distance(t));
    }
    Ok(pairwise_sum(&per_packet) / (estimates.len() * n) as f64)
}

/// Scores of one technique on one test set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub technique_tag: String,
    pub set_id: i64,
    pub n_packets: usize,
    pub packet_errors: usize,
    pub chip_errors: usize,
    pub bit_errors: usize,
    pub unavailable: usize,
    pub per: f64,
    pub cer: f64,
    pub ber: f64,
    /// `None` when no packet had an estimate.
    pub mse: Option<f64>,
}

/// Streaming collector behind [`MetricsReport`].
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    n_packets: usize,
    packet_errors: usize,
    chip_errors: usize,
    bit_errors: usize,
    unavailable: usize,
    squared_errors: Vec<f64>,
    n_taps: Option<usize>,
}

impl MetricsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one packet. `estimate` and `truth` feed the MSE when both
    /// are present; a missing estimate is counted as unavailable.
    pub fn push(&mut self, outcome: PacketOutcome, estimate: Option<&Cir>, truth: Option<&Cir>) -> Result<()> {
        self.n_packets += 1;
        self.packet_errors += usize::from(!outcome.psdu_ok);
        self.chip_errors += outcome.chip_errors;
        self.bit_errors += outcome.bit_errors;
        match (estimate, truth) {
            (None, _) => self.unavailable += 1,
            (Some(e), Some(t)) => {
                if e.len() != t.len() || self.n_taps.is_some_and(|n| n != t.len()) {
                    return Err(Error::arg("tap count changed within one report"));
                }
                self.n_taps = Some(t.len());
                self.squared_errors.push(e.squared_distance(t));
            }
            (Some(_), None) => {}
        }
        Ok(())
    }

    /// Records a packet from a technique that never forms an estimate.
    pub fn push_decode_only(&mut self, outcome: PacketOutcome) {
        self.n_packets += 1;
        self.packet_errors += usize::from(!outcome.psdu_ok);
        self.chip_errors += outcome.chip_errors;
        self.bit_errors += outcome.bit_errors;
    }

    pub fn n_packets(&self) -> usize {
        self.n_packets
    }

    pub fn finish(&self, technique_tag: impl Into<String>, set_id: i64) -> Result<MetricsReport> {
        if self.n_packets == 0 {
            return Err(Error::arg("no packets to score"));
        }
        let z = self.n_packets as f64;
        let mse = self
            .n_taps
            .map(|n| pairwise_sum(&self.squared_errors) / (self.squared_errors.len() * n) as f64);
        Ok(MetricsReport {
            technique_tag: technique_tag.into(),
            set_id,
            n_packets: self.n_packets,
            packet_errors: self.packet_errors,
            chip_errors: self.chip_errors,
            bit_errors: self.bit_errors,
            unavailable: self.unavailable,
            per: self.packet_errors as f64 / z,
            cer: self.chip_errors as f64 / (z * PSDU_CHIPS as f64),
            ber: self.bit_errors as f64 / (z * (PSDU_LEN * 8) as f64),
            mse,
        })
    }
}

/// Default aging grid, 0.1 s to 20 s.
pub const DEFAULT_AGES_MS: [i64; 10] = [100, 200, 500, 1000, 2000, 5000, 8000, 10_000, 15_000, 20_000];

/// One point of an aging curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgingPoint {
    pub age_ms: i64,
    pub n_packets: usize,
    pub mse: Option<f64>,
    /// `None` when decoding was not requested.
    pub per: Option<f64>,
}

/// Streaming aging sweep. Each packet is scored with the estimate made
/// `age` earlier, for every age. Only packets at least the largest age
/// after the first packet are scored, so all ages share one packet subset.
#[derive(Debug, Clone)]
pub struct AgingSweep {
    ages_ms: Vec<i64>,
    max_age: i64,
    history: EstimateHistory,
    first_ts: Option<i64>,
    per_age: Vec<MetricsAccumulator>,
    decode: Option<EqualizerConfig>,
}

impl AgingSweep {
    pub fn new(ages_ms: &[i64], decode: Option<EqualizerConfig>) -> Result<Self> {
        if ages_ms.is_empty() || ages_ms.iter().any(|&a| a < 0) {
            return Err(Error::arg("ages must be a nonempty list of nonnegative values"));
        }
        let max_age = *ages_ms.iter().max().expect("nonempty");
        Ok(AgingSweep {
            ages_ms: ages_ms.to_vec(),
            max_age,
            history: EstimateHistory::with_horizon(max_age),
            first_ts: None,
            per_age: vec![MetricsAccumulator::new(); ages_ms.len()],
            decode,
        })
    }

    /// Adds a packet with the estimator's current output and the packet's
    /// ground truth.
    pub fn push(&mut self, rec: &TraceRecord, estimate: Option<Cir>, ground_truth: &Cir) -> Result<()> {
        let ts = rec.timestamp_ms;
        let first = *self.first_ts.get_or_insert(ts);
        if let Some(e) = estimate {
            self.history.insert(ts, e);
        }
        if ts - self.max_age < first {
            return Ok(());
        }
        for (age, acc) in self.ages_ms.iter().zip(self.per_age.iter_mut()) {
            let aged = self.history.get(ts - age);
            let outcome = match &self.decode {
                Some(cfg) => decode_with_estimate(rec, aged, cfg)?,
                None => PacketOutcome {
                    psdu_ok: aged.is_some(),
                    chip_errors: 0,
                    bit_errors: 0,
                },
            };
            acc.push(outcome, aged, Some(ground_truth))?;
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<Vec<AgingPoint>> {
        let mut out = Vec::with_capacity(self.ages_ms.len());
        for (&age, acc) in self.ages_ms.iter().zip(&self.per_age) {
            if acc.n_packets() == 0 {
                return Err(Error::arg(format!(
                    "trace too short for a {}-ms aging sweep",
                    self.max_age
                )));
            }
            let r = acc.finish("", 0)?;
            out.push(AgingPoint {
                age_ms: age,
                n_packets: r.n_packets,
                mse: r.mse,
                per: self.decode.map(|_| r.per),
            });
        }
        Ok(out)
    }
}

/// Runs an aging sweep over a record stream. `estimator` maps a record and
/// its ground truth to the estimate available at that time.
pub fn aging_sweep<I, F>(
    records: I,
    mut estimator: F,
    ages_ms: &[i64],
    decode: Option<EqualizerConfig>,
) -> Result<Vec<AgingPoint>>
where
    I: IntoIterator<Item = Result<TraceRecord>>,
    F: FnMut(&TraceRecord, &Cir) -> Result<Option<Cir>>,
{
    let mut sweep = AgingSweep::new(ages_ms, decode)?;
    for rec in records {
        let rec = rec?;
        let gt = crate::estimation::ground_truth_estimate(&rec)?;
        let est = estimator(&rec, &gt)?;
        sweep.push(&rec, est, &gt)?;
    }
    sweep.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn per_counts() {
        let truth: Vec<Vec<u8>> = (0..100).map(|i| vec![i as u8; 3]).collect();
        let mut dec: Vec<Option<Vec<u8>>> = truth.iter().cloned().map(Some).collect();
        assert_eq!(packet_error_rate(&dec, &truth).unwrap(), 0.0);
        dec[3] = None;
        dec[10] = Some(vec![0; 3]);
        dec[50].as_mut().unwrap()[0] ^= 1;
        assert!((packet_error_rate(&dec, &truth).unwrap() - 0.03).abs() < 1e-15);
        assert!(packet_error_rate(&[], &[]).is_err());
    }

    #[test]
    fn cer_single_flip_and_complement() {
        let truth = vec![vec![1u8; PSDU_CHIPS]];
        let mut one = truth[0].clone();
        one[17] = 0;
        assert_eq!(chip_error_rate(&[Some(one)], &truth).unwrap(), 1.0 / 8128.0);
        assert_eq!(chip_error_rate(&[Some(vec![0; PSDU_CHIPS])], &truth).unwrap(), 1.0);
        assert_eq!(chip_error_rate(&[None], &truth).unwrap(), 1.0);
    }

    #[test]
    fn mse_unit_error() {
        let t = Cir::new(vec![Complex64::new(0.0, 0.0)], 0).unwrap();
        let e = Cir::new(vec![Complex64::new(1.0, 0.0)], 0).unwrap();
        assert_eq!(mse(&[e], &[t.clone()]).unwrap(), 1.0);
        assert_eq!(mse(&[t.clone()], &[t]).unwrap(), 0.0);
    }

    #[test]
    fn pairwise_matches_plain_on_integers() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn report_denominators() {
        let mut acc = MetricsAccumulator::new();
        acc.push(PacketOutcome::lost(), None, None).unwrap();
        acc.push(
            PacketOutcome {
                psdu_ok: true,
                chip_errors: 0,
                bit_errors: 0,
            },
            None,
            None,
        )
        .unwrap();
        let r = acc.finish("x", 1).unwrap();
        assert_eq!(r.per, 0.5);
        assert_eq!(r.cer, 0.5);
        assert_eq!(r.unavailable, 2);
        assert_eq!(r.mse, None);
    }

    #[test]
    fn aging_rejects_bad_ages() {
        assert!(AgingSweep::new(&[], None).is_err());
        assert!(AgingSweep::new(&[-1], None).is_err());
    }
}
