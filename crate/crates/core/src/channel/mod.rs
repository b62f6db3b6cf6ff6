//! Block-fading tapped-delay-line channel: convolution with a CIR, carrier
//! phase offset, AWGN, and AR evolution of the CIR between packets.

mod ar;
mod generator;

pub use ar::{evolve_cir, is_stationary, ArModel};
pub(crate) use ar::complex_gaussian;
pub(crate) use generator::stream_rng as generator_rng;
pub use generator::{default_mean_cir, generate_trace, PacketSynth, PsduSource, TraceGenerator};

use num_complex::Complex64;
use rand::Rng;

use crate::dsp::convolve;
use crate::error::{Error, Result};
use crate::trace::{Cir, Waveform, DEFAULT_PRE_CURSOR, DEFAULT_TAPS};

/// Parameters of the synthetic link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub n_taps: usize,
    pub pre_cursor: usize,
    pub samples_per_chip: usize,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    /// Standard deviation of the per-block carrier phase random walk.
    pub phase_drift_std_rad: f64,
    pub block_interval_ms: i64,
    pub rng_seed: u64,
    /// Static (specular) part of the channel. The AR process evolves the
    /// deviation from it; `None` means a zero-mean channel.
    pub mean_cir: Option<Cir>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            n_taps: DEFAULT_TAPS,
            pre_cursor: DEFAULT_PRE_CURSOR,
            samples_per_chip: 4,
            snr_db: 15.0,
            phase_drift_std_rad: 0.05,
            block_interval_ms: 100,
            rng_seed: 0,
            mean_cir: None,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::invalid("n_taps", "must be at least 1"));
        }
        if self.pre_cursor >= self.n_taps {
            return Err(Error::invalid("pre_cursor", "must be below n_taps"));
        }
        if self.samples_per_chip == 0 {
            return Err(Error::invalid("samples_per_chip", "must be at least 1"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid("snr_db", "must be finite or +inf"));
        }
        if !(self.phase_drift_std_rad.is_finite() && self.phase_drift_std_rad >= 0.0) {
            return Err(Error::invalid(
                "phase_drift_std_rad",
                "must be finite and nonnegative",
            ));
        }
        if self.block_interval_ms <= 0 {
            return Err(Error::invalid("block_interval_ms", "must be positive"));
        }
        if let Some(m) = &self.mean_cir {
            if m.len() != self.n_taps || m.pre_cursor() != self.pre_cursor {
                return Err(Error::invalid(
                    "mean_cir",
                    "tap count or pre-cursor disagrees with the config",
                ));
            }
        }
        Ok(())
    }

    /// Receiver sample rate implied by the chip rate and oversampling.
    pub fn sample_rate_hz(&self) -> f64 {
        crate::modem::CHIP_RATE_HZ * self.samples_per_chip as f64
    }
}

/// Full linear convolution of the waveform with a block-constant CIR.
pub fn apply_channel(tx: &Waveform, h: &Cir) -> Waveform {
    let out = convolve(tx.samples(), h.taps());
    Waveform::new(out, tx.samples_per_chip()).expect("convolution of finite inputs")
}

/// Adds circular complex Gaussian noise so that measured signal power over
/// noise variance equals `10^(snr_db/10)`. `+inf` returns the input.
pub fn add_awgn<R: Rng + ?Sized>(w: &Waveform, snr_db: f64, rng: &mut R) -> Result<Waveform> {
    if snr_db == f64::INFINITY {
        return Ok(w.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::arg(format!("snr_db {snr_db} is not usable")));
    }
    let power = w.mean_power();
    if power <= 0.0 {
        return Err(Error::arg("cannot set a finite SNR on a zero-power waveform"));
    }
    let noise_var = power / 10f64.powf(snr_db / 10.0);
    let samples = w
        .samples()
        .iter()
        .map(|&s| s + complex_gaussian(rng, noise_var))
        .collect();
    Waveform::new(samples, w.samples_per_chip())
}

/// Rotates every sample by `e^{j theta}`.
pub fn apply_phase_offset(w: &Waveform, theta: f64) -> Result<Waveform> {
    if !theta.is_finite() {
        return Err(Error::arg("phase offset must be finite"));
    }
    let rot = Complex64::from_polar(1.0, theta);
    Waveform::new(
        w.samples().iter().map(|s| s * rot).collect(),
        w.samples_per_chip(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn impulse_channel_delays_by_pre_cursor() {
        let tx = Waveform::new(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)], 1).unwrap();
        let h = Cir::impulse(5, 2).unwrap();
        let y = apply_channel(&tx, &h);
        assert_eq!(y.len(), 3 + 5 - 1);
        assert_eq!(&y.samples()[2..5], tx.samples());
        assert!(y.samples()[..2].iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn scalar_channel_scales() {
        let tx = Waveform::new(vec![c(1.0, -1.0), c(2.0, 0.5)], 1).unwrap();
        let h = Cir::new(vec![c(0.5, 0.0)], 0).unwrap();
        let y = apply_channel(&tx, &h);
        for (a, b) in y.samples().iter().zip(tx.samples()) {
            assert_eq!(*a, b * 0.5);
        }
    }

    #[test]
    fn infinite_snr_is_identity_and_seed_repeats() {
        let tx = Waveform::new(vec![c(1.0, 0.0); 16], 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(add_awgn(&tx, f64::INFINITY, &mut rng).unwrap(), tx);
        let a = add_awgn(&tx, 3.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = add_awgn(&tx, 3.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_power_with_finite_snr_fails() {
        let tx = Waveform::new(vec![c(0.0, 0.0); 8], 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(add_awgn(&tx, 10.0, &mut rng).is_err());
    }

    #[test]
    fn phase_offset_cases() {
        let w = Waveform::new(vec![c(1.0, 0.0)], 1).unwrap();
        assert_eq!(apply_phase_offset(&w, 0.0).unwrap(), w);
        let r = apply_phase_offset(&w, std::f64::consts::PI).unwrap();
        assert!((r.samples()[0] - c(-1.0, 0.0)).norm() < 1e-15);
        let w2 = Waveform::new(vec![c(0.3, -2.0), c(1.5, 0.7)], 1).unwrap();
        let back = apply_phase_offset(&apply_phase_offset(&w2, 1.234).unwrap(), -1.234).unwrap();
        for (a, b) in back.samples().iter().zip(w2.samples()) {
            assert!((a - b).norm() <= 1e-12);
        }
        assert!(apply_phase_offset(&w, f64::NAN).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ChannelConfig::default().validate().is_ok());
        let bad = ChannelConfig {
            pre_cursor: 11,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
