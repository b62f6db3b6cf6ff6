//! Per-tap Kalman tracking of an AR(p) channel.
//!
//! Each tap keeps a state vector `[h[k], h[k-1], ..., h[k-p+1]]` evolving
//! with the companion matrix of the AR coefficients. The observation is
//! the same stacked vector built from past perfect estimates, so the
//! observation matrix is the identity:
//!
//! ```text
//! K      = P (P + U)^-1
//! s_curr = s + K (z - s)
//! P_curr = (I - K) P
//! s_next = Phi s_curr
//! P_next = Phi P_curr Phi^H + Q
//! ```
//!
//! `U = u I` and `Q = diag(sigma_w^2, 0, ..., 0)` are shared by all taps.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ArModel;
use crate::error::{Error, Result};
use crate::trace::Cir;

/// Observation noise variance used with perfect-estimate observations.
pub const DEFAULT_OBSERVATION_VAR: f64 = 1e-8;

/// Smallest eigenvalue tolerated in a covariance matrix.
pub const PSD_TOLERANCE: f64 = 1e-10;

type CMat = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Companion matrix with `phi` in the first row and ones on the
/// sub-diagonal.
pub fn companion(phi: &[Complex64]) -> CMat {
    let p = phi.len();
    CMat::from_fn(p, p, |i, j| {
        if i == 0 {
            phi[j]
        } else if i == j + 1 {
            c(1.0)
        } else {
            c(0.0)
        }
    })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn hermitize(m: &mut CMat) {
    let h = (&*m + m.adjoint()) * c(0.5);
    *m = h;
}

/// Filter state for every tap, plus the shared model matrices.
#[derive(Debug, Clone)]
pub struct KalmanState {
    /// Prior state mean per tap, deviation from `means`.
    states: Vec<DVector<Complex64>>,
    /// Prior covariance per tap.
    covariances: Vec<CMat>,
    transition: CMat,
    observation_cov: CMat,
    process_cov: CMat,
    means: Vec<Complex64>,
    pre_cursor: usize,
    /// Most recent observations (deviation taps), newest first.
    recent: VecDeque<Vec<Complex64>>,
}

impl KalmanState {
    /// Starts every tap at its mean with prior covariance `initial_var * I`.
    pub fn new(
        model: &ArModel,
        means: Vec<Complex64>,
        pre_cursor: usize,
        initial_var: f64,
        observation_var: f64,
    ) -> Result<Self> {
        let p = model.order();
        let n = means.len();
        if n == 0 || pre_cursor >= n {
            return Err(Error::arg("tap means must cover the pre-cursor index"));
        }
        if !(initial_var >= 0.0 && observation_var > 0.0) {
            return Err(Error::arg("variances must be nonnegative, U positive"));
        }
        let mut process_cov = CMat::zeros(p, p);
        process_cov[(0, 0)] = c(model.process_noise_var());
        Ok(KalmanState {
            states: vec![DVector::zeros(p); n],
            covariances: vec![CMat::identity(p, p) * c(initial_var); n],
            transition: companion(model.phi()),
            observation_cov: CMat::identity(p, p) * c(observation_var),
            process_cov,
            means,
            pre_cursor,
            recent: VecDeque::with_capacity(p),
        })
    }

    pub fn order(&self) -> usize {
        self.transition.nrows()
    }

    pub fn covariance(&self, tap: usize) -> &CMat {
        &self.covariances[tap]
    }

    pub fn transition(&self) -> &CMat {
        &self.transition
    }

    /// Current one-step prediction (prior mean of the newest state entry).
    pub fn prediction(&self) -> Result<Cir> {
        Cir::new(
            self.states
                .iter()
                .zip(&self.means)
                .map(|(s, m)| s[0] + m)
                .collect(),
            self.pre_cursor,
        )
    }
}

/// Folds one perfect estimate into the filter and returns the updated state
/// together with the predicted CIR of the next block.
pub fn kalman_step(mut state: KalmanState, observation: &Cir) -> Result<(KalmanState, Cir)> {
    let n = state.means.len();
    if observation.len() != n {
        return Err(Error::arg(format!(
            "observation has {} taps, filter tracks {n}",
            observation.len()
        )));
    }
    let p = state.order();
    let deviation: Vec<Complex64> = observation
        .taps()
        .iter()
        .zip(&state.means)
        .map(|(h, m)| h - m)
        .collect();
    state.recent.push_front(deviation);
    state.recent.truncate(p);

    let identity = CMat::identity(p, p);
    for l in 0..n {
        // stacked observation; slots without history fall back to the prior
        let z = DVector::from_fn(p, |i, _| match state.recent.get(i) {
            Some(obs) => obs[l],
            None => state.states[l][i],
        });
        let prior = &state.covariances[l];
        let innovation_cov = prior + &state.observation_cov;
        // K = P S^-1, computed as (S^-H P^H)^H = (S^-1 P)^H for Hermitian S, P
        let lu = innovation_cov.clone().lu();
        let gain = lu
            .solve(prior)
            .ok_or_else(|| Error::Singular("innovation covariance".into()))?
            .adjoint();
        let current = &state.states[l] + &gain * (z - &state.states[l]);
        let mut post = (&identity - &gain) * prior;
        hermitize(&mut post);

        let next_state = &state.transition * current;
        let mut next_cov = &state.transition * post * state.transition.adjoint() + &state.process_cov;
        hermitize(&mut next_cov);
        let min_eig = min_eigenvalue(&next_cov);
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::NotPsd(format!(
                "tap {l}: minimum eigenvalue {min_eig:e}"
            )));
        }
        state.states[l] = next_state;
        state.covariances[l] = next_cov;
    }
    let predicted = state.prediction()?;
    Ok((state, predicted))
}

/// Scalar steady-state prior variance of an AR(1) tap observed directly
/// with noise variance `u`, by fixed-point iteration of the Riccati map.
pub fn scalar_riccati_steady_state(phi: f64, q: f64, u: f64) -> f64 {
    let mut p = q;
    for _ in 0..100_000 {
        let next = phi * phi * (p * u / (p + u)) + q;
        if (next - p).abs() <= 1e-15 * p.max(1e-300) {
            return next;
        }
        p = next;
    }
    p
}
