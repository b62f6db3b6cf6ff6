//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use chanlab::channel::{evolve_cir, ArModel};
use chanlab::estimation::ConvolutionMatrix;
use chanlab::Cir;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type C = Complex64;

pub fn gauss(rng: &mut ChaCha8Rng) -> C {
    C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n).map(|_| gauss(rng)).collect()
}

/// Normal-equations solve `(X^H X) h = X^H y` by Gaussian elimination with
/// partial pivoting.
pub fn normal_equations(x: &ConvolutionMatrix, y: &[C]) -> Vec<C> {
    let (m, n) = (x.rows(), x.cols());
    let mut a = vec![vec![C::new(0.0, 0.0); n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = (0..m).map(|r| x.get(r, i).conj() * x.get(r, j)).sum();
        }
        a[i][n] = (0..m).map(|r| x.get(r, i).conj() * y[r]).sum();
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| a[p][col].norm().total_cmp(&a[q][col].norm())).unwrap();
        a.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..=n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
        }
    }
    let mut h = vec![C::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let s: C = (i + 1..n).map(|k| a[i][k] * h[k]).sum();
        h[i] = (a[i][n] - s) / a[i][i];
    }
    h
}

/// Positive root of `p^2 + p (u - phi^2 u - q) - q u = 0`: steady-state
/// prior variance of a scalar AR(1) tap observed with noise `u`.
pub fn riccati_oracle(phi: f64, q: f64, u: f64) -> f64 {
    let b = u - phi * phi * u - q;
    (-b + (b * b + 4.0 * q * u).sqrt()) / 2.0
}

/// `blocks` consecutive AR CIRs after a 500-block burn-in.
pub fn ar_sequence(model: &ArModel, n_taps: usize, blocks: usize, seed: u64) -> Vec<Cir> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = vec![Cir::zeros(n_taps, 0).unwrap(); model.order()];
    let mut out = Vec::with_capacity(blocks);
    for k in 0..blocks + 500 {
        let next = evolve_cir(&hist, model, &mut rng).unwrap();
        hist.pop();
        hist.insert(0, next.clone());
        if k >= 500 {
            out.push(next);
        }
    }
    out
}

/// Brute-force minimizer of `|h_ref - h_new e^{-j theta}|^2` over a uniform
/// grid on `[-pi, pi)`. Returns the angle and the grid step.
pub fn grid_phase(h_new: &Cir, h_ref: &Cir, steps: usize) -> (f64, f64) {
    let cost = |theta: f64| {
        let r = C::from_polar(1.0, -theta);
        h_new.taps().iter().zip(h_ref.taps()).map(|(a, b)| (a * r - b).norm_sqr()).sum::<f64>()
    };
    let step = 2.0 * std::f64::consts::PI / steps as f64;
    let best = (0..steps)
        .map(|k| -std::f64::consts::PI + k as f64 * step)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .unwrap();
    (best, step)
}

pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

/// Main tap plus an inverted echo one chip later and slightly stronger;
/// the despreading margin cannot absorb that much interference.
pub fn dispersive_channel() -> Cir {
    let mut taps = vec![C::new(0.0, 0.0); 11];
    taps[5] = C::new(1.0, 0.0);
    taps[9] = C::from_polar(1.1, std::f64::consts::PI);
    Cir::new(taps, 5).unwrap()
}
