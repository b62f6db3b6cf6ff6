//! Least-squares zero-forcing equalization.
//!
//! For a channel `h` of `N` taps and an equalizer of `L` taps, `H` is the
//! `(L + N - 1) x L` convolution matrix of `h` and `u` the unit vector with
//! its one at `u_index`. The equalizer minimizes `|u - H c|`, so `h * c`
//! approximates a pure delay of `u_index` samples.

use num_complex::Complex64;

use crate::dsp::convolve;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, toeplitz};
use crate::trace::{Cir, Waveform};

pub const DEFAULT_EQUALIZER_TAPS: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub struct Equalizer {
    taps: Vec<Complex64>,
    u_index: usize,
    residual: f64,
}

impl Equalizer {
    /// An equalizer with explicit taps, for tests and pass-through use.
    pub fn new(taps: Vec<Complex64>, u_index: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("taps", "need at least one tap"));
        }
        if taps.iter().any(|t| !(t.re.is_finite() && t.im.is_finite())) {
            return Err(Error::invalid("taps", "taps must be finite"));
        }
        Ok(Equalizer {
            taps,
            u_index,
            residual: 0.0,
        })
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

    pub fn u_index(&self) -> usize {
        self.u_index
    }

    /// `|u - H c|` at design time.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn norm(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Equalizer length and target delay used by the receive chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EqualizerConfig {
    pub taps: usize,
    /// `None` centres the target in the `L + N - 1` output span.
    pub u_index: Option<usize>,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        EqualizerConfig {
            taps: DEFAULT_EQUALIZER_TAPS,
            u_index: None,
        }
    }
}

impl EqualizerConfig {
    pub fn u_index_for(&self, n_channel_taps: usize) -> usize {
        self.u_index
            .unwrap_or((self.taps + n_channel_taps - 1) / 2)
    }
}

/// `(L + N - 1) x L` convolution matrix of the channel.
pub fn channel_matrix(h: &Cir, l: usize) -> nalgebra::DMatrix<Complex64> {
    toeplitz(h.taps(), l, l + h.len() - 1)
}

/// Solves for the `L`-tap equalizer that best turns `h` into a delay of
/// `u_index` samples.
pub fn design_zf(h: &Cir, l: usize, u_index: usize) -> Result<Equalizer> {
    if l == 0 {
        return Err(Error::arg("equalizer needs at least one tap"));
    }
    let rows = l + h.len() - 1;
    if u_index >= rows {
        return Err(Error::arg(format!(
            "u_index {u_index} outside the {rows}-sample output span"
        )));
    }
    let hm = channel_matrix(h, l);
    let mut u = vec![Complex64::new(0.0, 0.0); rows];
    u[u_index] = Complex64::new(1.0, 0.0);
    let taps = lstsq(hm.clone(), &u)?;
    let hc = &hm * nalgebra::DVector::from_column_slice(&taps);
    let residual = hc
        .iter()
        .zip(&u)
        .map(|(a, b)| (b - a).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(Equalizer {
        taps,
        u_index,
        residual,
    })
}

/// Convolves with the equalizer and drops the first `u_index` samples so
/// the output lines up with the transmitted frame. The output keeps the
/// input length; samples past the end of the convolution read as zero.
pub fn equalize(w: &Waveform, e: &Equalizer) -> Waveform {
    let z = convolve(w.samples(), e.taps());
    let zero = Complex64::new(0.0, 0.0);
    let out = (0..w.len())
        .map(|i| z.get(e.u_index + i).copied().unwrap_or(zero))
        .collect();
    Waveform::new(out, w.samples_per_chip()).expect("equalizer output is finite and nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn delay_inverts_to_delay() {
        let h = Cir::impulse(3, 1).unwrap();
        let e = design_zf(&h, 5, 3).unwrap();
        assert!(e.residual() < 1e-12);
        // h delays by 1, so c must delay by 2
        for (i, t) in e.taps().iter().enumerate() {
            let want = if i == 2 { 1.0 } else { 0.0 };
            assert!((t - c(want)).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_equalizer_passes_through() {
        let w = Waveform::new(vec![c(1.0), Complex64::new(0.5, -2.0), c(3.0)], 1).unwrap();
        let e = Equalizer::new(vec![c(1.0)], 0).unwrap();
        assert_eq!(equalize(&w, &e), w);
        let shifted = Equalizer::new(vec![c(0.0), c(1.0)], 1).unwrap();
        assert_eq!(equalize(&w, &shifted), w);
    }

    #[test]
    fn scaling_channel_scales_inverse() {
        let h = Cir::new(vec![c(1.0), Complex64::new(0.5, 0.2)], 0).unwrap();
        let alpha = Complex64::new(0.3, -1.1);
        let e1 = design_zf(&h, 8, 4).unwrap();
        let e2 = design_zf(&h.scaled(alpha).unwrap(), 8, 4).unwrap();
        for (a, b) in e1.taps().iter().zip(e2.taps()) {
            assert!((a / alpha - b).norm() < 1e-10);
        }
    }

    #[test]
    fn bad_u_index_rejected() {
        let h = Cir::impulse(3, 1).unwrap();
        assert!(design_zf(&h, 4, 6).is_err());
        assert!(design_zf(&h, 0, 0).is_err());
    }

    #[test]
    fn zero_channel_is_singular() {
        let h = Cir::zeros(3, 1).unwrap();
        assert!(matches!(design_zf(&h, 4, 2), Err(Error::Singular(_))));
    }

    #[test]
    fn default_centre() {
        assert_eq!(EqualizerConfig::default().u_index_for(11), 15);
    }
}
