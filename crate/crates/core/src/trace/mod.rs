//! Core domain types shared by every stage of the lab, plus the binary
//! trace (`.vvdtrace`) and estimate (`.vvdest`) file formats.
//!
//! A [`Cir`] is the currency between modules: the channel simulator emits
//! one per block, the estimators produce one per packet and the metrics
//! compare them. Everything is an immutable value after construction.

pub(crate) mod codec;
mod format;

pub use format::{
    read_estimates, read_trace, write_estimates, write_trace, TraceWriter, ESTIMATE_MAGIC, FORMAT_VERSION,
    TRACE_MAGIC,
};


use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex baseband coefficient (tap or sample).
pub type ComplexCoeff = Complex64;

/// Default number of FIR taps used for every channel estimate.
pub const DEFAULT_TAPS: usize = 11;

/// Default index of the nominal main tap (taps before it are pre-cursor taps).
pub const DEFAULT_PRE_CURSOR: usize = 5;

pub(crate) fn all_finite(values: &[Complex64]) -> bool {
    values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Channel impulse response as a complex FIR tap vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Cir {
    taps: Vec<Complex64>,
    pre_cursor: usize,
}

impl Cir {
    pub fn new(taps: Vec<Complex64>, pre_cursor: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("taps", "a CIR needs at least one tap"));
        }
        if pre_cursor >= taps.len() {
            return Err(Error::invalid(
                "pre_cursor_count",
                format!("{} is not below the tap count {}", pre_cursor, taps.len()),
            ));
        }
        if !all_finite(&taps) {
            return Err(Error::invalid("taps", "non-finite tap coefficient"));
        }
        Ok(Cir { taps, pre_cursor })
    }

    /// All-zero CIR of `n` taps.
    pub fn zeros(n: usize, pre_cursor: usize) -> Result<Self> {
        Cir::new(vec![Complex64::new(0.0, 0.0); n], pre_cursor)
    }

    /// Unit impulse at the main tap.
    pub fn impulse(n: usize, pre_cursor: usize) -> Result<Self> {
        let mut taps = vec![Complex64::new(0.0, 0.0); n];
        if pre_cursor < n {
            taps[pre_cursor] = Complex64::new(1.0, 0.0);
        }
        Cir::new(taps, pre_cursor)
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn pre_cursor(&self) -> usize {
        self.pre_cursor
    }

    pub fn main_tap(&self) -> Complex64 {
        self.taps[self.pre_cursor]
    }

    /// Same taps multiplied by a complex scalar.
    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Cir::new(self.taps.iter().map(|t| t * factor).collect(), self.pre_cursor)
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// Sum over taps of `|self - other|^2`.
    pub fn squared_distance(&self, other: &Cir) -> f64 {
        self.taps
            .iter()
            .zip(&other.taps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }

    pub fn into_taps(self) -> Vec<Complex64> {
        self.taps
    }
}

/// Sampled complex baseband waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<Complex64>,
    samples_per_chip: usize,
}

impl Waveform {
    pub fn new(samples: Vec<Complex64>, samples_per_chip: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "waveform is empty"));
        }
        if samples_per_chip == 0 {
            return Err(Error::invalid("samples_per_chip", "must be at least 1"));
        }
        if !all_finite(&samples) {
            return Err(Error::invalid("samples", "non-finite sample"));
        }
        Ok(Waveform {
            samples,
            samples_per_chip,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_per_chip(&self) -> usize {
        self.samples_per_chip
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }
}

/// One transmission through the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub seq_no: i64,
    pub timestamp_ms: i64,
    /// PSDU chips (8128 for a full 127-byte packet). The preamble and SFD
    /// chips are fixed and can be regenerated from the modem.
    pub tx_chips: Vec<u8>,
    /// Full frame waveform: preamble, SFD and PSDU.
    pub tx_waveform: Waveform,
    pub rx_waveform: Waveform,
    pub true_cir: Cir,
    pub phase_offset_rad: f64,
    /// `f64::INFINITY` marks a noiseless record.
    pub snr_db: f64,
    pub scene_id: Option<i64>,
}

impl TraceRecord {
    /// Checks the per-record invariants.
    pub fn validate(&self) -> Result<()> {
        if !all_finite(self.true_cir.taps()) {
            return Err(Error::invalid("true_cir", "non-finite tap"));
        }
        if !all_finite(self.tx_waveform.samples()) {
            return Err(Error::invalid("tx_waveform", "non-finite sample"));
        }
        if !all_finite(self.rx_waveform.samples()) {
            return Err(Error::invalid("rx_waveform", "non-finite sample"));
        }
        let expected = self.tx_waveform.len() + self.true_cir.len() - 1;
        if self.rx_waveform.len() != expected {
            return Err(Error::invalid(
                "rx_waveform",
                format!(
                    "length {} != tx length {} + N - 1 = {}",
                    self.rx_waveform.len(),
                    self.tx_waveform.len(),
                    expected
                ),
            ));
        }
        if self.tx_waveform.samples_per_chip() != self.rx_waveform.samples_per_chip() {
            return Err(Error::invalid(
                "samples_per_chip",
                "tx and rx waveforms disagree",
            ));
        }
        if self.tx_chips.iter().any(|&c| c > 1) {
            return Err(Error::invalid("tx_chips", "chip values must be 0 or 1"));
        }
        if !self.phase_offset_rad.is_finite() {
            return Err(Error::invalid("phase_offset_rad", "not finite"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid("snr_db", "must be finite or +inf"));
        }
        Ok(())
    }
}

/// Set-level metadata stored in the trace header.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetadata {
    pub sample_rate_hz: f64,
    pub n_taps: usize,
    pub samples_per_chip: usize,
    pub seed: u64,
}

/// All records of one measurement take.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub set_id: i64,
    pub metadata: TraceMetadata,
    pub records: Vec<TraceRecord>,
}

impl TraceSet {
    pub fn new(set_id: i64, metadata: TraceMetadata) -> Self {
        TraceSet {
            set_id,
            metadata,
            records: Vec::new(),
        }
    }

    /// Checks every record invariant plus the set-level ones.
    pub fn validate(&self) -> Result<()> {
        if self.metadata.n_taps == 0 {
            return Err(Error::invalid("n_taps", "must be at least 1"));
        }
        if self.metadata.samples_per_chip == 0 {
            return Err(Error::invalid("samples_per_chip", "must be at least 1"));
        }
        if !(self.metadata.sample_rate_hz.is_finite() && self.metadata.sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample_rate_hz", "must be positive and finite"));
        }
        let mut last_ts: Option<i64> = None;
        for rec in &self.records {
            rec.validate()?;
            if rec.true_cir.len() != self.metadata.n_taps {
                return Err(Error::invalid(
                    "true_cir",
                    format!(
                        "record {} has {} taps, set declares {}",
                        rec.seq_no,
                        rec.true_cir.len(),
                        self.metadata.n_taps
                    ),
                ));
            }
            if rec.tx_waveform.samples_per_chip() != self.metadata.samples_per_chip {
                return Err(Error::invalid(
                    "samples_per_chip",
                    format!("record {} disagrees with the set header", rec.seq_no),
                ));
            }
            if let Some(prev) = last_ts {
                if rec.timestamp_ms <= prev {
                    return Err(Error::invalid(
                        "timestamp_ms",
                        format!("record {} is not strictly after {}", rec.seq_no, prev),
                    ));
                }
            }
            last_ts = Some(rec.timestamp_ms);
        }
        Ok(())
    }
}

/// One channel estimate for one packet, as produced by any technique.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub seq_no: i64,
    pub technique_tag: String,
    /// `None` when the technique could not produce an estimate.
    pub cir: Option<Cir>,
}

impl EstimateRecord {
    pub fn available(seq_no: i64, tag: impl Into<String>, cir: Cir) -> Self {
        EstimateRecord {
            seq_no,
            technique_tag: tag.into(),
            cir: Some(cir),
        }
    }

    pub fn unavailable(seq_no: i64, tag: impl Into<String>) -> Self {
        EstimateRecord {
            seq_no,
            technique_tag: tag.into(),
            cir: None,
        }
    }

    pub fn is_available(&self) -> bool {
        self.cir.is_some()
    }
}
