//! IEEE 802.15.4-style 2450 MHz O-QPSK/DSSS transmit and receive chain.
//!
//! Bytes are split into 4-bit symbols (low nibble first), each symbol is
//! spread to a 32-chip PN sequence, and the chips are shaped with half-sine
//! pulses on offset I/Q rails. Receive is the mirror image: matched
//! filtering, hard chip decisions and correlation despreading.

mod oqpsk;
mod pn;

pub use oqpsk::{demodulate, demodulate_chips, half_sine_pulse, modulate, waveform_len};
pub use pn::{PnTable, CHIPS_PER_SYMBOL, NUM_SYMBOLS};

use crate::error::{Error, Result};

/// PSDU length in bytes.
pub const PSDU_LEN: usize = 127;
/// Chips carrying the PSDU: 127 bytes x 2 symbols x 32 chips.
pub const PSDU_CHIPS: usize = PSDU_LEN * 2 * CHIPS_PER_SYMBOL;
/// Start-of-frame delimiter byte.
pub const SFD_BYTE: u8 = 0xA7;
/// Preamble length in bytes (all zero).
pub const PREAMBLE_LEN: usize = 4;
/// Chips in the preamble plus SFD.
pub const SYNC_CHIPS: usize = (PREAMBLE_LEN + 1) * 2 * CHIPS_PER_SYMBOL;
/// Chip rate of the 2450 MHz PHY.
pub const CHIP_RATE_HZ: f64 = 2.0e6;

fn bytes_to_symbols(bytes: &[u8]) -> impl Iterator<Item = usize> + '_ {
    bytes
        .iter()
        .flat_map(|&b| [(b & 0x0F) as usize, (b >> 4) as usize])
}

fn spread_bytes(bytes: &[u8], table: &PnTable) -> Vec<u8> {
    let mut chips = Vec::with_capacity(bytes.len() * 2 * CHIPS_PER_SYMBOL);
    for sym in bytes_to_symbols(bytes) {
        chips.extend_from_slice(table.sequence(sym));
    }
    chips
}

/// Spreads a 127-byte PSDU into 8128 chips.
pub fn spread(psdu: &[u8], table: &PnTable) -> Result<Vec<u8>> {
    if psdu.len() != PSDU_LEN {
        return Err(Error::arg(format!(
            "PSDU must be {PSDU_LEN} bytes, got {}",
            psdu.len()
        )));
    }
    Ok(spread_bytes(psdu, table))
}

/// Result of correlating one 32-chip group against the PN table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Despread {
    pub symbol: u8,
    /// Best correlation minus second best; 0 on a tie.
    pub margin: i32,
    pub correlation: i32,
}

/// Maps a hard-decision chip group to the most correlated symbol. Ties go to
/// the lowest symbol index.
pub fn despread(chips: &[u8], table: &PnTable) -> Result<Despread> {
    if chips.len() != CHIPS_PER_SYMBOL {
        return Err(Error::arg(format!(
            "despread needs {CHIPS_PER_SYMBOL} chips, got {}",
            chips.len()
        )));
    }
    let scores = table.correlations(chips);
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    let second = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &s)| s)
        .max()
        .unwrap_or(i32::MIN);
    Ok(Despread {
        symbol: best as u8,
        margin: scores[best] - second,
        correlation: scores[best],
    })
}

/// A complete frame: synchronization header followed by the PSDU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub preamble_chips: Vec<u8>,
    pub sfd_chips: Vec<u8>,
    pub psdu: Vec<u8>,
    pub psdu_chips: Vec<u8>,
}

impl Frame {
    pub fn new(psdu: &[u8], table: &PnTable) -> Result<Self> {
        let psdu_chips = spread(psdu, table)?;
        Ok(Frame {
            preamble_chips: spread_bytes(&[0u8; PREAMBLE_LEN], table),
            sfd_chips: spread_bytes(&[SFD_BYTE], table),
            psdu: psdu.to_vec(),
            psdu_chips,
        })
    }

    /// Preamble, SFD and PSDU chips in transmission order.
    pub fn all_chips(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SYNC_CHIPS + self.psdu_chips.len());
        out.extend_from_slice(&self.preamble_chips);
        out.extend_from_slice(&self.sfd_chips);
        out.extend_from_slice(&self.psdu_chips);
        out
    }
}

/// Preamble and SFD chips, identical for every frame.
pub fn sync_chips(table: &PnTable) -> Vec<u8> {
    let mut bytes = [0u8; PREAMBLE_LEN + 1];
    bytes[PREAMBLE_LEN] = SFD_BYTE;
    spread_bytes(&bytes, table)
}

/// Symbols of the synchronization header, in order.
pub fn sync_symbols() -> Vec<u8> {
    let mut bytes = [0u8; PREAMBLE_LEN + 1];
    bytes[PREAMBLE_LEN] = SFD_BYTE;
    bytes_to_symbols(&bytes).map(|s| s as u8).collect()
}

/// Despread PSDU and, when a reference is given, the per-chip error mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedFrame {
    pub psdu: Vec<u8>,
    pub chip_errors: Option<Vec<bool>>,
}

impl DecodedFrame {
    pub fn chip_error_count(&self) -> Option<usize> {
        self.chip_errors
            .as_ref()
            .map(|m| m.iter().filter(|&&e| e).count())
    }
}

/// Despreads 8128 PSDU chip decisions back into 127 bytes.
pub fn decode_frame(
    chips: &[u8],
    reference: Option<&[u8]>,
    table: &PnTable,
) -> Result<DecodedFrame> {
    if chips.len() != PSDU_CHIPS {
        return Err(Error::arg(format!(
            "decode_frame needs {PSDU_CHIPS} chips, got {}",
            chips.len()
        )));
    }
    if let Some(r) = reference {
        if r.len() != PSDU_CHIPS {
            return Err(Error::arg(format!(
                "reference must be {PSDU_CHIPS} chips, got {}",
                r.len()
            )));
        }
    }
    let mut psdu = Vec::with_capacity(PSDU_LEN);
    for pair in chips.chunks_exact(2 * CHIPS_PER_SYMBOL) {
        let lo = despread(&pair[..CHIPS_PER_SYMBOL], table)?.symbol;
        let hi = despread(&pair[CHIPS_PER_SYMBOL..], table)?.symbol;
        psdu.push(lo | (hi << 4));
    }
    let chip_errors = reference.map(|r| {
        chips
            .iter()
            .zip(r)
            .map(|(a, b)| (*a != 0) != (*b != 0))
            .collect()
    });
    Ok(DecodedFrame { psdu, chip_errors })
}
