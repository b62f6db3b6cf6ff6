use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::trace::Waveform;

/// Half-sine pulse sampled at the centres of `samples_per_chip` bins, so
/// every sample is nonzero and the pulse never exceeds 1.
pub fn half_sine_pulse(samples_per_chip: usize) -> Vec<f64> {
    (0..samples_per_chip)
        .map(|n| (PI * (n as f64 + 0.5) / samples_per_chip as f64).sin())
        .collect()
}

/// Sample count of a modulated burst of `n_chips` chips.
pub fn waveform_len(n_chips: usize, samples_per_chip: usize) -> usize {
    (n_chips / 2) * samples_per_chip + samples_per_chip / 2
}

fn bipolar(chip: u8) -> f64 {
    if chip != 0 {
        1.0
    } else {
        -1.0
    }
}

/// O-QPSK modulation: even chips on I, odd chips on Q delayed by half a
/// pulse, one half-sine pulse per chip on each rail.
pub fn modulate(chips: &[u8], samples_per_chip: usize) -> Result<Waveform> {
    if samples_per_chip == 0 {
        return Err(Error::arg("samples_per_chip must be at least 1"));
    }
    if chips.is_empty() || chips.len() % 2 != 0 {
        return Err(Error::arg(format!(
            "O-QPSK needs a nonzero even chip count, got {}",
            chips.len()
        )));
    }
    let spc = samples_per_chip;
    let offset = spc / 2;
    let pulse = half_sine_pulse(spc);
    let mut samples = vec![Complex64::new(0.0, 0.0); waveform_len(chips.len(), spc)];
    for (k, pair) in chips.chunks_exact(2).enumerate() {
        let (i_amp, q_amp) = (bipolar(pair[0]), bipolar(pair[1]));
        let start = k * spc;
        for (n, &p) in pulse.iter().enumerate() {
            samples[start + n].re += i_amp * p;
            samples[start + offset + n].im += q_amp * p;
        }
    }
    Waveform::new(samples, spc)
}

/// Matched-filter hard decisions for the first `n_chips` chips of a
/// frame-aligned waveform. Missing samples read as zero.
pub fn demodulate_chips(samples: &[Complex64], samples_per_chip: usize, n_chips: usize) -> Vec<u8> {
    let spc = samples_per_chip;
    let offset = spc / 2;
    let pulse = half_sine_pulse(spc);
    let at = |i: usize| samples.get(i).copied().unwrap_or_default();
    let mut chips = Vec::with_capacity(n_chips);
    for k in 0..n_chips.div_ceil(2) {
        let start = k * spc;
        let (mut i_acc, mut q_acc) = (0.0, 0.0);
        for (n, &p) in pulse.iter().enumerate() {
            i_acc += at(start + n).re * p;
            q_acc += at(start + offset + n).im * p;
        }
        chips.push(u8::from(i_acc > 0.0));
        if chips.len() < n_chips {
            chips.push(u8::from(q_acc > 0.0));
        }
    }
    chips
}

/// Demodulates every complete chip pair in a frame-aligned waveform. A zero
/// matched-filter output decides chip 0.
pub fn demodulate(w: &Waveform) -> Result<Vec<u8>> {
    let spc = w.samples_per_chip();
    if w.len() < spc {
        return Err(Error::arg(format!(
            "waveform of {} samples is shorter than one chip ({spc})",
            w.len()
        )));
    }
    let pairs = (w.len() - spc / 2) / spc;
    Ok(demodulate_chips(w.samples(), spc, pairs * 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_chip_placement() {
        let w = modulate(&[1, 1], 4).unwrap();
        assert_eq!(w.len(), 6);
        let pulse = half_sine_pulse(4);
        for n in 0..6 {
            let expect_i = if n < 4 { pulse[n] } else { 0.0 };
            let expect_q = if (2..6).contains(&n) { pulse[n - 2] } else { 0.0 };
            assert!((w.samples()[n].re - expect_i).abs() < 1e-15);
            assert!((w.samples()[n].im - expect_q).abs() < 1e-15);
        }
    }

    #[test]
    fn odd_chip_count_rejected() {
        assert!(modulate(&[1, 0, 1], 4).is_err());
        assert!(modulate(&[1, 0], 0).is_err());
    }

    #[test]
    fn zero_waveform_decides_zero() {
        let w = Waveform::new(vec![Complex64::new(0.0, 0.0); 42], 4).unwrap();
        let chips = demodulate(&w).unwrap();
        assert_eq!(chips.len(), 20);
        assert!(chips.iter().all(|&c| c == 0));
    }

    #[test]
    fn too_short_waveform_rejected() {
        let w = Waveform::new(vec![Complex64::new(1.0, 0.0); 3], 4).unwrap();
        assert!(demodulate(&w).is_err());
    }

    #[test]
    fn single_sample_per_chip_loops_back() {
        let chips = [1, 0, 0, 1, 1, 1, 0, 0];
        let w = modulate(&chips, 1).unwrap();
        assert_eq!(demodulate(&w).unwrap(), chips);
    }
}
