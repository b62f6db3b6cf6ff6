use num_complex::Complex64;

use crate::dsp::inner;
use crate::error::{Error, Result};
use crate::trace::Cir;

/// Mean phase alignment of one CIR onto a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCorrection {
    /// `arg(sum h_new[l] * conj(h_ref[l]))`.
    pub theta: f64,
    /// `h_new * e^{-j theta}`.
    pub rotated: Cir,
    /// The inner product was zero, so `theta` was set to 0.
    pub degenerate: bool,
}

/// Estimates the common phase rotation between two CIRs from their inner
/// product and removes it from `h_new`.
pub fn phase_correct(h_new: &Cir, h_ref: &Cir) -> Result<PhaseCorrection> {
    if h_new.len() != h_ref.len() {
        return Err(Error::arg(format!(
            "CIR lengths differ: {} vs {}",
            h_new.len(),
            h_ref.len()
        )));
    }
    let ip = inner(h_new.taps(), h_ref.taps());
    let degenerate = ip.norm() == 0.0;
    let theta = if degenerate { 0.0 } else { ip.arg() };
    let rotated = h_new.scaled(Complex64::from_polar(1.0, -theta))?;
    Ok(PhaseCorrection {
        theta,
        rotated,
        degenerate,
    })
}
