//! Receive chains: standard hard-decision decoding and ZF-equalized decoding
//! driven by a CIR estimate.
//!
//! Both chains take frame timing from the nominal main-tap position of the
//! record's CIR. The standard chain removes the carrier phase measured on
//! the known synchronization header before deciding chips.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::dsp::inner;
use crate::equalization::{design_zf, equalize, EqualizerConfig};
use crate::error::{Error, Result};
use crate::modem::{
    decode_frame, demodulate_chips, modulate, sync_chips, PnTable, PSDU_CHIPS, PSDU_LEN, SYNC_CHIPS,
};
use crate::trace::{Cir, TraceRecord};

/// Number of known leading samples: the synchronization header up to the
/// first sample that overlaps PSDU pulses.
pub fn sync_known_len(samples_per_chip: usize) -> usize {
    (SYNC_CHIPS / 2) * samples_per_chip
}

/// Transmitted samples of the synchronization header that do not depend on
/// the payload.
pub fn sync_waveform(samples_per_chip: usize) -> Result<Vec<Complex64>> {
    static SPC4: OnceLock<Vec<Complex64>> = OnceLock::new();
    let build = |spc: usize| -> Result<Vec<Complex64>> {
        let w = modulate(&sync_chips(PnTable::ieee_802_15_4()), spc)?;
        let mut s = w.into_samples();
        s.truncate(sync_known_len(spc));
        Ok(s)
    };
    if samples_per_chip == 4 {
        if let Some(v) = SPC4.get() {
            return Ok(v.clone());
        }
        let v = build(4)?;
        return Ok(SPC4.get_or_init(|| v).clone());
    }
    build(samples_per_chip)
}

/// Carrier phase seen on the synchronization header at the given timing
/// offset.
pub fn sync_phase(rx: &[Complex64], offset: usize, samples_per_chip: usize) -> Result<f64> {
    let known = sync_waveform(samples_per_chip)?;
    let end = (offset + known.len()).min(rx.len());
    if offset >= end {
        return Ok(0.0);
    }
    let ip = inner(&rx[offset..end], &known[..end - offset]);
    Ok(if ip.norm() == 0.0 { 0.0 } else { ip.arg() })
}

/// Chip decisions for synchronization header plus PSDU.
pub fn frame_chip_count() -> usize {
    SYNC_CHIPS + PSDU_CHIPS
}

/// Hard decisions without equalization: phase-align on the sync header,
/// sample at the nominal main-tap delay.
pub fn standard_chips(rec: &TraceRecord) -> Result<Vec<u8>> {
    let rx = rec.rx_waveform.samples();
    let spc = rec.rx_waveform.samples_per_chip();
    let offset = rec.true_cir.pre_cursor();
    let theta = sync_phase(rx, offset, spc)?;
    let rot = Complex64::from_polar(1.0, -theta);
    let aligned: Vec<Complex64> = rx.iter().skip(offset).map(|s| s * rot).collect();
    Ok(demodulate_chips(&aligned, spc, frame_chip_count()))
}

/// Hard decisions after zero-forcing with the given CIR estimate.
pub fn equalized_chips(rec: &TraceRecord, cir: &Cir, cfg: &EqualizerConfig) -> Result<Vec<u8>> {
    let eq = design_zf(cir, cfg.taps, cfg.u_index_for(cir.len()))?;
    let z = equalize(&rec.rx_waveform, &eq);
    Ok(demodulate_chips(
        z.samples(),
        z.samples_per_chip(),
        frame_chip_count(),
    ))
}

/// Scoring of one decoded packet against the transmitted PSDU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketOutcome {
    pub psdu_ok: bool,
    /// Erroneous PSDU chips, out of 8128.
    pub chip_errors: usize,
    /// Erroneous PSDU bits, out of 1016.
    pub bit_errors: usize,
}

impl PacketOutcome {
    /// Outcome charged when no estimate exists: every chip and bit wrong.
    pub fn lost() -> Self {
        PacketOutcome {
            psdu_ok: false,
            chip_errors: PSDU_CHIPS,
            bit_errors: PSDU_LEN * 8,
        }
    }
}

/// Payload bytes carried by a record, recovered from its transmitted chips.
pub fn transmitted_psdu(rec: &TraceRecord) -> Result<Vec<u8>> {
    Ok(decode_frame(&rec.tx_chips, None, PnTable::ieee_802_15_4())?.psdu)
}

/// Scores frame chip decisions (sync header included) against the record.
pub fn score_chips(rec: &TraceRecord, frame_chips: &[u8]) -> Result<PacketOutcome> {
    if frame_chips.len() != frame_chip_count() {
        return Err(Error::arg(format!(
            "expected {} frame chips, got {}",
            frame_chip_count(),
            frame_chips.len()
        )));
    }
    let table = PnTable::ieee_802_15_4();
    let truth = transmitted_psdu(rec)?;
    let decoded = decode_frame(&frame_chips[SYNC_CHIPS..], Some(&rec.tx_chips), table)?;
    let bit_errors = decoded
        .psdu
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a ^ b).count_ones() as usize)
        .sum();
    Ok(PacketOutcome {
        psdu_ok: decoded.psdu == truth,
        chip_errors: decoded.chip_error_count().unwrap_or(0),
        bit_errors,
    })
}

/// Standard (unequalized) receive chain, scored.
pub fn decode_standard(rec: &TraceRecord) -> Result<PacketOutcome> {
    score_chips(rec, &standard_chips(rec)?)
}

/// Equalized receive chain, scored. `None` charges a lost packet.
pub fn decode_with_estimate(
    rec: &TraceRecord,
    cir: Option<&Cir>,
    cfg: &EqualizerConfig,
) -> Result<PacketOutcome> {
    match cir {
        Some(h) => score_chips(rec, &equalized_chips(rec, h, cfg)?),
        None => Ok(PacketOutcome::lost()),
    }
}
