use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::trace::Cir;

/// Autoregressive model of per-tap channel evolution:
/// `h[k] = sum_i phi[i] * h[k-1-i] + w[k]`, with `w` circular complex
/// Gaussian of variance `process_noise_var`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    phi: Vec<Complex64>,
    process_noise_var: f64,
}

impl ArModel {
    /// Rejects empty or non-stationary coefficient sets.
    pub fn new(phi: Vec<Complex64>, process_noise_var: f64) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::invalid("phi", "AR order must be at least 1"));
        }
        if phi.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("phi", "non-finite coefficient"));
        }
        if !(process_noise_var.is_finite() && process_noise_var >= 0.0) {
            return Err(Error::invalid(
                "process_noise_var",
                "must be finite and nonnegative",
            ));
        }
        if !is_stationary(&phi) {
            return Err(Error::invalid(
                "phi",
                "companion matrix spectral radius is not below 1",
            ));
        }
        Ok(ArModel {
            phi,
            process_noise_var,
        })
    }

    pub fn real(phi: &[f64], process_noise_var: f64) -> Result<Self> {
        ArModel::new(
            phi.iter().map(|&p| Complex64::new(p, 0.0)).collect(),
            process_noise_var,
        )
    }

    /// `phi = [1]` with no innovation: the channel never changes. This is
    /// the one unit-root model accepted, since it is a constant process.
    pub fn frozen() -> Self {
        ArModel {
            phi: vec![Complex64::new(1.0, 0.0)],
            process_noise_var: 0.0,
        }
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    pub fn process_noise_var(&self) -> f64 {
        self.process_noise_var
    }
}

/// Schur-Cohn step-down test on `1 - phi_1 z^-1 - ... - phi_p z^-p`: every
/// root lies strictly inside the unit circle iff every reflection
/// coefficient has modulus below one.
pub fn is_stationary(phi: &[Complex64]) -> bool {
    let mut a: Vec<Complex64> = phi.iter().map(|p| -p).collect();
    while let Some(&k) = a.last() {
        let mag = k.norm_sqr();
        if mag >= 1.0 {
            return false;
        }
        let m = a.len();
        let scale = 1.0 / (1.0 - mag);
        let next: Vec<Complex64> = (0..m - 1)
            .map(|i| (a[i] - k * a[m - 2 - i].conj()) * scale)
            .collect();
        a = next;
    }
    true
}

/// Circular complex Gaussian sample with `E|z|^2 = var`.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws the next CIR. `history[0]` is the most recent CIR, `history[i]` the
/// one `i + 1` blocks back. Every tap evolves independently under the
/// shared coefficients.
pub fn evolve_cir<R: Rng + ?Sized>(history: &[Cir], model: &ArModel, rng: &mut R) -> Result<Cir> {
    if history.len() != model.order() {
        return Err(Error::arg(format!(
            "AR({}) needs {} past CIRs, got {}",
            model.order(),
            model.order(),
            history.len()
        )));
    }
    let n = history[0].len();
    let pre = history[0].pre_cursor();
    if history.iter().any(|h| h.len() != n) {
        return Err(Error::arg("history CIRs differ in tap count"));
    }
    let taps = (0..n)
        .map(|l| {
            let det: Complex64 = model
                .phi
                .iter()
                .zip(history)
                .map(|(p, h)| p * h.taps()[l])
                .sum();
            if model.process_noise_var > 0.0 {
                det + complex_gaussian(rng, model.process_noise_var)
            } else {
                det
            }
        })
        .collect();
    Cir::new(taps, pre)
}
