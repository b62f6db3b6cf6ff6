use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const CHIPS_PER_SYMBOL: usize = 32;
pub const NUM_SYMBOLS: usize = 16;

// Symbol-to-chip mapping of the IEEE 802.15.4 2450 MHz O-QPSK PHY, chips
// c0..c31 left to right. Symbols 1-7 are 4-chip cyclic rotations of symbol
// 0; symbols 8-15 invert the odd-indexed chips of symbols 0-7.
const IEEE_2450_CHIPS: [&str; NUM_SYMBOLS] = [
    "11011001110000110101001000101110",
    "11101101100111000011010100100010",
    "00101110110110011100001101010010",
    "00100010111011011001110000110101",
    "01010010001011101101100111000011",
    "00110101001000101110110110011100",
    "11000011010100100010111011011001",
    "10011100001101010010001011101101",
    "10001100100101100000011101111011",
    "10111000110010010110000001110111",
    "01111011100011001001011000000111",
    "01110111101110001100100101100000",
    "00000111011110111000110010010110",
    "01100000011101111011100011001001",
    "10010110000001110111101110001100",
    "11001001011000000111011110111000",
];

/// The 16 spreading sequences, one per 4-bit symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnTable {
    sequences: [[u8; CHIPS_PER_SYMBOL]; NUM_SYMBOLS],
}

impl PnTable {
    /// Builds a table from explicit sequences, checking that they are binary
    /// and pairwise distinct.
    pub fn new(sequences: [[u8; CHIPS_PER_SYMBOL]; NUM_SYMBOLS]) -> Result<Self> {
        if sequences.iter().flatten().any(|&c| c > 1) {
            return Err(Error::invalid("sequences", "chips must be 0 or 1"));
        }
        for i in 0..NUM_SYMBOLS {
            for j in i + 1..NUM_SYMBOLS {
                if sequences[i] == sequences[j] {
                    return Err(Error::invalid(
                        "sequences",
                        format!("symbols {i} and {j} share a sequence"),
                    ));
                }
            }
        }
        Ok(PnTable { sequences })
    }

    /// The standard 2450 MHz table (shared instance).
    pub fn ieee_802_15_4() -> &'static PnTable {
        static TABLE: OnceLock<PnTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let mut seqs = [[0u8; CHIPS_PER_SYMBOL]; NUM_SYMBOLS];
            for (row, text) in seqs.iter_mut().zip(IEEE_2450_CHIPS) {
                for (chip, ch) in row.iter_mut().zip(text.bytes()) {
                    *chip = ch - b'0';
                }
            }
            PnTable::new(seqs).expect("built-in table is valid")
        })
    }

    pub fn sequence(&self, symbol: usize) -> &[u8; CHIPS_PER_SYMBOL] {
        &self.sequences[symbol]
    }

    pub fn sequences(&self) -> &[[u8; CHIPS_PER_SYMBOL]; NUM_SYMBOLS] {
        &self.sequences
    }

    /// Smallest Hamming distance between two distinct sequences.
    pub fn min_distance(&self) -> usize {
        let mut best = usize::MAX;
        for i in 0..NUM_SYMBOLS {
            for j in i + 1..NUM_SYMBOLS {
                let d = self.sequences[i]
                    .iter()
                    .zip(&self.sequences[j])
                    .filter(|(a, b)| a != b)
                    .count();
                best = best.min(d);
            }
        }
        best
    }

    /// Bipolar correlation (`+1` per agreeing chip, `-1` per disagreeing
    /// chip) of a hard chip group against every sequence.
    pub fn correlations(&self, chips: &[u8]) -> [i32; NUM_SYMBOLS] {
        let mut out = [0i32; NUM_SYMBOLS];
        for (score, seq) in out.iter_mut().zip(&self.sequences) {
            let disagree = seq
                .iter()
                .zip(chips)
                .filter(|(a, b)| (**a != 0) != (**b != 0))
                .count() as i32;
            *score = CHIPS_PER_SYMBOL as i32 - 2 * disagree;
        }
        out
    }
}
