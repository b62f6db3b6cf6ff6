use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ArModel;
use crate::error::{Error, Result};
use crate::trace::Cir;

/// Diagonal loading applied when the Yule-Walker matrix is singular.
pub const DIAGONAL_LOADING: f64 = 1e-9;

/// Normalized autocorrelation `r[0..=p]` (with `r[0] = 1`) of one tap and
/// the tap variance it was normalized by.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrSeq {
    r: Vec<f64>,
    variance: f64,
}

impl AutocorrSeq {
    pub fn new(r: Vec<f64>, variance: f64) -> Result<Self> {
        if r.len() < 2 {
            return Err(Error::invalid("r", "need r[0] and at least one lag"));
        }
        if r[0] != 1.0 {
            return Err(Error::invalid("r", "r[0] must be 1"));
        }
        if r.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::invalid("r", "coefficients must be finite with |r| <= 1"));
        }
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::invalid("variance", "must be finite and nonnegative"));
        }
        Ok(AutocorrSeq { r, variance })
    }

    /// Sample estimate from mean-removed sequences, pooled across
    /// sequences. Uses the biased (divide by total length) estimator, which
    /// keeps the Toeplitz matrix positive semidefinite.
    pub fn from_sequences(seqs: &[Vec<Complex64>], order: usize) -> Result<Self> {
        let total: usize = seqs.iter().map(Vec::len).sum();
        if total <= order {
            return Err(Error::arg(format!(
                "{total} samples are too few for AR({order})"
            )));
        }
        let mut lags = vec![0.0; order + 1];
        for s in seqs {
            for (tau, acc) in lags.iter_mut().enumerate() {
                for k in tau..s.len() {
                    *acc += (s[k] * s[k - tau].conj()).re;
                }
            }
        }
        let r0 = lags[0] / total as f64;
        if r0 <= 0.0 {
            // constant tap: no correlation structure to speak of
            let mut r = vec![0.0; order + 1];
            r[0] = 1.0;
            return AutocorrSeq::new(r, 0.0);
        }
        let r = lags
            .iter()
            .map(|v| (v / total as f64 / r0).clamp(-1.0, 1.0))
            .collect();
        AutocorrSeq::new(r, r0)
    }

    pub fn order(&self) -> usize {
        self.r.len() - 1
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// The `p x p` Toeplitz matrix `R[i][j] = r[|i - j|]`.
    pub fn toeplitz(&self) -> DMatrix<f64> {
        let p = self.order();
        DMatrix::from_fn(p, p, |i, j| self.r[i.abs_diff(j)])
    }
}

/// Solves `R phi = r` for the AR coefficients. Returns the coefficients and
/// whether diagonal loading was needed.
pub fn solve_yule_walker(ac: &AutocorrSeq) -> Result<(Vec<f64>, bool)> {
    let p = ac.order();
    let rhs = DVector::from_column_slice(&ac.r[1..]);
    let mat = ac.toeplitz();
    if let Some(ch) = mat.clone().cholesky() {
        let phi = ch.solve(&rhs);
        if phi.iter().all(|v| v.is_finite()) {
            return Ok((phi.iter().copied().collect(), false));
        }
    }
    let loaded = mat + DMatrix::identity(p, p) * DIAGONAL_LOADING;
    let ch = loaded
        .cholesky()
        .ok_or_else(|| Error::Singular("Yule-Walker matrix is not positive definite".into()))?;
    Ok((ch.solve(&rhs).iter().copied().collect(), true))
}

/// Residual power of `d[k] - sum phi_i d[k-i]` for a process with the given
/// autocorrelation.
fn residual_power(ac: &AutocorrSeq, phi: &[f64]) -> f64 {
    let r = ac.r();
    let mut acc = 1.0;
    for (i, &a) in phi.iter().enumerate() {
        acc -= 2.0 * a * r[i + 1];
        for (j, &b) in phi.iter().enumerate() {
            acc += a * b * r[i.abs_diff(j)];
        }
    }
    (ac.variance * acc).max(0.0)
}

/// Output of [`fit_ar`].
#[derive(Debug, Clone)]
pub struct ArFit {
    /// Shared model: tap-averaged coefficients, tap-averaged residual power.
    pub model: ArModel,
    pub per_tap_phi: Vec<Vec<f64>>,
    pub per_tap_noise_var: Vec<f64>,
    pub tap_means: Vec<Complex64>,
    pub tap_variances: Vec<f64>,
    /// True when any tap needed diagonal loading.
    pub regularized: bool,
    /// False when the tap average was not stationary and the strongest
    /// tap's coefficients were used instead.
    pub averaged: bool,
}

/// Fits one real AR(p) model shared by every tap from training CIR
/// sequences (one sequence per trace set).
pub fn fit_ar(training: &[Vec<Cir>], order: usize) -> Result<ArFit> {
    if order == 0 {
        return Err(Error::arg("AR order must be at least 1"));
    }
    let first = training
        .iter()
        .flat_map(|s| s.first())
        .next()
        .ok_or_else(|| Error::arg("no training CIRs"))?;
    let n_taps = first.len();
    if training.iter().flatten().any(|h| h.len() != n_taps) {
        return Err(Error::arg("training CIRs differ in tap count"));
    }
    let total: usize = training.iter().map(Vec::len).sum();

    let mut tap_means = Vec::with_capacity(n_taps);
    let mut per_tap = Vec::with_capacity(n_taps);
    for l in 0..n_taps {
        let mean: Complex64 =
            training.iter().flatten().map(|h| h.taps()[l]).sum::<Complex64>() / total as f64;
        let seqs: Vec<Vec<Complex64>> = training
            .iter()
            .map(|s| s.iter().map(|h| h.taps()[l] - mean).collect())
            .collect();
        tap_means.push(mean);
        per_tap.push(AutocorrSeq::from_sequences(&seqs, order)?);
    }

    let mut regularized = false;
    let mut per_tap_phi = Vec::with_capacity(n_taps);
    for ac in &per_tap {
        let (phi, loaded) = if ac.variance() > 0.0 {
            solve_yule_walker(ac)?
        } else {
            (vec![0.0; order], false)
        };
        regularized |= loaded;
        per_tap_phi.push(phi);
    }

    let active: Vec<usize> = (0..n_taps).filter(|&l| per_tap[l].variance() > 0.0).collect();
    let mut shared = vec![0.0; order];
    for &l in &active {
        for (s, v) in shared.iter_mut().zip(&per_tap_phi[l]) {
            *s += v / active.len() as f64;
        }
    }
    let per_tap_noise_var: Vec<f64> = per_tap
        .iter()
        .zip(&per_tap_phi)
        .map(|(ac, phi)| residual_power(ac, phi))
        .collect();
    let shared_noise =
        per_tap.iter().map(|ac| residual_power(ac, &shared)).sum::<f64>() / n_taps as f64;
    // Averaging stationary per-tap models can leave the stationary region
    // for p >= 3; fall back to the strongest tap's own solution.
    let (model, averaged) = match ArModel::real(&shared, shared_noise) {
        Ok(m) => (m, true),
        Err(_) => {
            let strongest = (0..n_taps)
                .max_by(|&a, &b| per_tap[a].variance().total_cmp(&per_tap[b].variance()))
                .expect("at least one tap");
            let phi = &per_tap_phi[strongest];
            let var = per_tap.iter().map(|ac| residual_power(ac, phi)).sum::<f64>() / n_taps as f64;
            (ArModel::real(phi, var)?, false)
        }
    };
    Ok(ArFit {
        model,
        per_tap_phi,
        per_tap_noise_var,
        tap_means,
        tap_variances: per_tap.iter().map(AutocorrSeq::variance).collect(),
        regularized,
        averaged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_identity() {
        for phi in [0.9, -0.3, 0.0, 0.55] {
            let ac = AutocorrSeq::new(vec![1.0, phi], 2.0).unwrap();
            let (est, loaded) = solve_yule_walker(&ac).unwrap();
            assert_eq!(est, vec![phi]);
            assert!(!loaded);
        }
    }

    #[test]
    fn ar2_closed_form() {
        // AR(2) with phi = (0.5, 0.3): r1 = phi1 / (1 - phi2), r2 = phi1 r1 + phi2
        let r1 = 0.5 / 0.7;
        let r2 = 0.5 * r1 + 0.3;
        let ac = AutocorrSeq::new(vec![1.0, r1, r2], 1.0).unwrap();
        let (phi, _) = solve_yule_walker(&ac).unwrap();
        assert!((phi[0] - 0.5).abs() < 1e-12);
        assert!((phi[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_gets_loaded() {
        // perfectly correlated: R is all ones
        let ac = AutocorrSeq::new(vec![1.0, 1.0, 1.0], 1.0).unwrap();
        let (phi, loaded) = solve_yule_walker(&ac).unwrap();
        assert!(loaded);
        assert!(phi.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn invalid_autocorrelation_rejected() {
        assert!(AutocorrSeq::new(vec![1.0], 1.0).is_err());
        assert!(AutocorrSeq::new(vec![0.5, 0.2], 1.0).is_err());
        assert!(AutocorrSeq::new(vec![1.0, 1.5], 1.0).is_err());
    }

    #[test]
    fn constant_taps_fit_to_zero() {
        let h = Cir::impulse(3, 1).unwrap();
        let fit = fit_ar(&[vec![h; 50]], 2).unwrap();
        assert!(fit.model.phi().iter().all(|p| p.norm() == 0.0));
        assert_eq!(fit.model.process_noise_var(), 0.0);
    }
}
