//! Channel estimators.
//!
//! Every estimator consumes a [`TraceRecord`] and produces a [`Cir`] or an
//! [`EstimateRecord`]. Ground truth is the least-squares fit over the whole
//! frame; the preamble estimators see only the synchronization header.
//! Aged and Kalman estimators work from the ground-truth history.

mod kalman;
mod ls;
mod phase;
mod yule_walker;

use std::collections::BTreeMap;

pub use kalman::{
    companion, kalman_step, min_eigenvalue, scalar_riccati_steady_state, KalmanState,
    DEFAULT_OBSERVATION_VAR, PSD_TOLERANCE,
};
pub use ls::{ls_estimate, ConvolutionMatrix};
pub use phase::{phase_correct, PhaseCorrection};
pub use yule_walker::{fit_ar, solve_yule_walker, ArFit, AutocorrSeq, DIAGONAL_LOADING};

use rand::Rng;

use crate::channel::generator_rng;
use crate::error::{Error, Result};
use crate::modem::{despread, PnTable, CHIPS_PER_SYMBOL, SYNC_CHIPS};
use crate::receiver::{standard_chips, sync_known_len, sync_waveform};
use crate::trace::{Cir, EstimateRecord, TraceRecord};

pub const TAG_GROUND_TRUTH: &str = "ground-truth";
pub const TAG_PREAMBLE: &str = "preamble";
pub const TAG_GENIE: &str = "genie";

/// Least squares over the full transmitted frame.
pub fn ground_truth_estimate(rec: &TraceRecord) -> Result<Cir> {
    let n = rec.true_cir.len();
    let x = ConvolutionMatrix::build(rec.tx_waveform.samples(), n)?;
    ls_estimate(&x, rec.rx_waveform.samples(), rec.true_cir.pre_cursor())
}

/// Least squares over the synchronization header only. Uses the leading
/// received samples, which depend on nothing but header samples.
pub fn sync_ls_estimate(rec: &TraceRecord) -> Result<Cir> {
    let n = rec.true_cir.len();
    let spc = rec.rx_waveform.samples_per_chip();
    let known = sync_waveform(spc)?;
    let m = sync_known_len(spc);
    if rec.rx_waveform.len() < m {
        return Err(Error::arg("received waveform shorter than the sync header"));
    }
    let x = ConvolutionMatrix::prefix(&known, n)?;
    ls_estimate(&x, &rec.rx_waveform.samples()[..m], rec.true_cir.pre_cursor())
}

/// Decides whether the receiver found the synchronization header.
pub trait PreambleDetector {
    fn detect(&self, rec: &TraceRecord) -> Result<bool>;
}

/// Never misses.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysDetect;

impl PreambleDetector for AlwaysDetect {
    fn detect(&self, _rec: &TraceRecord) -> Result<bool> {
        Ok(true)
    }
}

/// Always misses.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverDetect;

impl PreambleDetector for NeverDetect {
    fn detect(&self, _rec: &TraceRecord) -> Result<bool> {
        Ok(false)
    }
}

/// Standard-decodes the ten header symbols; detection succeeds when every
/// symbol is the expected one and the weakest correlation margin exceeds
/// `threshold`. Margins are in correlation units (`32 - 2 * distance`).
#[derive(Debug, Clone, Copy)]
pub struct MarginDetector {
    pub threshold: i32,
}

impl Default for MarginDetector {
    fn default() -> Self {
        MarginDetector { threshold: 8 }
    }
}

impl MarginDetector {
    /// Smallest margin of the expected symbols, or `None` if any header
    /// symbol decodes wrongly.
    pub fn min_margin(rec: &TraceRecord) -> Result<Option<i32>> {
        let chips = standard_chips(rec)?;
        let expected = crate::modem::sync_symbols();
        let table = PnTable::ieee_802_15_4();
        let mut worst = i32::MAX;
        for (group, &want) in chips[..SYNC_CHIPS].chunks_exact(CHIPS_PER_SYMBOL).zip(&expected) {
            let d = despread(group, table)?;
            if d.symbol != want {
                return Ok(None);
            }
            worst = worst.min(d.margin);
        }
        Ok(Some(worst))
    }
}

impl PreambleDetector for MarginDetector {
    fn detect(&self, rec: &TraceRecord) -> Result<bool> {
        Ok(Self::min_margin(rec)?.is_some_and(|m| m > self.threshold))
    }
}

/// Misses with a fixed probability, drawn deterministically from the seed
/// and sequence number.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliDetector {
    pub failure_prob: f64,
    pub seed: u64,
}

impl BernoulliDetector {
    pub fn new(failure_prob: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&failure_prob) {
            return Err(Error::arg("failure probability must lie in [0, 1]"));
        }
        Ok(BernoulliDetector { failure_prob, seed })
    }
}

impl PreambleDetector for BernoulliDetector {
    fn detect(&self, rec: &TraceRecord) -> Result<bool> {
        let mut rng = generator_rng(self.seed, rec.seq_no as u64);
        Ok(rng.random::<f64>() >= self.failure_prob)
    }
}

/// Preamble-based estimate; unavailable when the detector misses.
pub fn preamble_estimate(rec: &TraceRecord, detector: &dyn PreambleDetector) -> Result<EstimateRecord> {
    if detector.detect(rec)? {
        Ok(EstimateRecord::available(rec.seq_no, TAG_PREAMBLE, sync_ls_estimate(rec)?))
    } else {
        Ok(EstimateRecord::unavailable(rec.seq_no, TAG_PREAMBLE))
    }
}

/// Preamble estimate with detection forced to succeed.
pub fn genie_estimate(rec: &TraceRecord) -> Result<Cir> {
    sync_ls_estimate(rec)
}

/// Ground-truth estimates indexed by timestamp.
#[derive(Debug, Clone, Default)]
pub struct EstimateHistory {
    by_time: BTreeMap<i64, Cir>,
    /// Entries older than this, relative to the newest, are dropped.
    horizon_ms: Option<i64>,
}

impl EstimateHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keeps only estimates at most `horizon_ms` older than the newest.
    pub fn with_horizon(horizon_ms: i64) -> Self {
        EstimateHistory {
            by_time: BTreeMap::new(),
            horizon_ms: Some(horizon_ms),
        }
    }

    pub fn insert(&mut self, timestamp_ms: i64, cir: Cir) {
        self.by_time.insert(timestamp_ms, cir);
        if let Some(h) = self.horizon_ms {
            let newest = *self.by_time.keys().next_back().expect("just inserted");
            let cutoff = newest - h;
            self.by_time = self.by_time.split_off(&cutoff);
        }
    }

    pub fn get(&self, timestamp_ms: i64) -> Option<&Cir> {
        self.by_time.get(&timestamp_ms)
    }

    pub fn len(&self) -> usize {
        self.by_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_time.is_empty()
    }
}

/// The estimate recorded exactly `age_ms` before `now_ms`, unchanged.
pub fn previous_estimate(history: &EstimateHistory, now_ms: i64, age_ms: i64) -> Option<Cir> {
    history.get(now_ms - age_ms).cloned()
}

/// Tag of the aged estimator at a given age.
pub fn previous_tag(age_ms: i64) -> String {
    format!("prev-{age_ms}ms")
}

/// Kalman one-step predictor fed with ground-truth estimates.
///
/// Call [`KalmanTracker::predict`] before the current packet's ground truth
/// is known, then [`KalmanTracker::observe`] with it.
#[derive(Debug, Clone)]
pub struct KalmanTracker {
    state: Option<KalmanState>,
    prediction: Cir,
}

impl KalmanTracker {
    pub fn new(fit: &ArFit, pre_cursor: usize) -> Result<Self> {
        let initial_var = fit
            .tap_variances
            .iter()
            .copied()
            .fold(0.0, f64::max)
            .max(DEFAULT_OBSERVATION_VAR);
        let state = KalmanState::new(
            &fit.model,
            fit.tap_means.clone(),
            pre_cursor,
            initial_var,
            DEFAULT_OBSERVATION_VAR,
        )?;
        let prediction = state.prediction()?;
        Ok(KalmanTracker {
            state: Some(state),
            prediction,
        })
    }

    pub fn predict(&self) -> &Cir {
        &self.prediction
    }

    pub fn observe(&mut self, ground_truth: &Cir) -> Result<()> {
        let state = self
            .state
            .take()
            .ok_or_else(|| Error::arg("tracker was poisoned by an earlier failure"))?;
        let (next, pred) = kalman_step(state, ground_truth)?;
        self.state = Some(next);
        self.prediction = pred;
        Ok(())
    }

    pub fn state(&self) -> Option<&KalmanState> {
        self.state.as_ref()
    }
}

/// Tag of the Kalman estimator of a given order.
pub fn kalman_tag(order: usize) -> String {
    format!("kalman-ar{order}")
}

/// Which branch of the combined policy produced an estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum CombinedSource {
    Preamble,
    /// Blind estimate rotated by `theta` onto the header-based reference.
    Blind { theta: f64, degenerate: bool },
}

/// Preamble estimate when the header is detected; otherwise the blind
/// estimate, phase-aligned onto a least-squares fit over the known header
/// samples.
pub fn combined_estimate(
    rec: &TraceRecord,
    detector: &dyn PreambleDetector,
    blind: &Cir,
    tag: &str,
) -> Result<(EstimateRecord, CombinedSource)> {
    let reference = sync_ls_estimate(rec)?;
    if detector.detect(rec)? {
        return Ok((
            EstimateRecord::available(rec.seq_no, tag, reference),
            CombinedSource::Preamble,
        ));
    }
    let pc = phase_correct(blind, &reference)?;
    Ok((
        EstimateRecord::available(rec.seq_no, tag, pc.rotated),
        CombinedSource::Blind {
            theta: pc.theta,
            degenerate: pc.degenerate,
        },
    ))
}
