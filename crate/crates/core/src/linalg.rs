// Dense complex least squares on top of nalgebra's Householder QR.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative size below which an R diagonal entry counts as zero.
const RANK_TOL: f64 = 1e-12;

/// `(rows x cols)` convolution matrix of `x`: entry `(i, j)` is `x[i - j]`
/// when that index exists, else zero.
pub(crate) fn toeplitz(x: &[Complex64], cols: usize, rows: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |i, j| {
        if i >= j && i - j < x.len() {
            x[i - j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Minimizes `|b - A x|` through a QR factorization of `A`.
pub(crate) fn lstsq(a: DMatrix<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::arg(format!(
            "right-hand side has {} rows, matrix has {m}",
            b.len()
        )));
    }
    if m < n {
        return Err(Error::Singular(format!("{m}x{n} system is underdetermined")));
    }
    let qr = a.qr();
    let r = qr.r();
    let max_diag = (0..n).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..n).any(|i| r[(i, i)].norm() <= RANK_TOL * max_diag) {
        return Err(Error::Singular(format!(
            "{m}x{n} matrix is not of full column rank"
        )));
    }
    let mut qtb = DVector::from_column_slice(b);
    qr.q_tr_mul(&mut qtb);
    let head = qtb.rows(0, n).into_owned();
    let x = r
        .solve_upper_triangular(&head)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    Ok(x.iter().copied().collect())
}
