use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{lstsq, toeplitz};
use crate::trace::Cir;

/// Convolution matrix of known transmit samples.
///
/// The full form has `M + N - 1` rows: row `i`, column `j` holds `x[i - j]`
/// (zero outside `0..M`), so `X h` is the full linear convolution of `x`
/// and `h`. The prefix form keeps only the first `M` rows, which involve
/// no sample after `x[M-1]`; it is what a receiver can use when the known
/// samples are followed by unknown data.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionMatrix {
    matrix: DMatrix<Complex64>,
}

impl ConvolutionMatrix {
    pub fn build(x: &[Complex64], n_taps: usize) -> Result<Self> {
        Self::check(x, n_taps)?;
        Ok(ConvolutionMatrix {
            matrix: toeplitz(x, n_taps, x.len() + n_taps - 1),
        })
    }

    pub fn prefix(x: &[Complex64], n_taps: usize) -> Result<Self> {
        Self::check(x, n_taps)?;
        Ok(ConvolutionMatrix {
            matrix: toeplitz(x, n_taps, x.len()),
        })
    }

    fn check(x: &[Complex64], n_taps: usize) -> Result<()> {
        if n_taps == 0 {
            return Err(Error::arg("need at least one tap"));
        }
        if x.len() < n_taps {
            return Err(Error::arg(format!(
                "{} known samples cannot determine {} taps",
                x.len(),
                n_taps
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `X h`.
    pub fn apply(&self, h: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(h);
        (&self.matrix * v).iter().copied().collect()
    }
}

/// Least-squares FIR estimate `argmin |y - X h|^2`, solved by QR.
pub fn ls_estimate(x: &ConvolutionMatrix, y: &[Complex64], pre_cursor: usize) -> Result<Cir> {
    if y.len() != x.rows() {
        return Err(Error::arg(format!(
            "received block has {} samples, matrix has {} rows",
            y.len(),
            x.rows()
        )));
    }
    let taps = lstsq(x.matrix.clone(), y)?;
    Cir::new(taps, pre_cursor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn three_sample_layout() {
        let x = [c(1.0), c(2.0), c(3.0)];
        let m = ConvolutionMatrix::build(&x, 3).unwrap();
        assert_eq!((m.rows(), m.cols()), (5, 3));
        #[rustfmt::skip]
        let expect = [
            [1.0, 0.0, 0.0],
            [2.0, 1.0, 0.0],
            [3.0, 2.0, 1.0],
            [0.0, 3.0, 2.0],
            [0.0, 0.0, 3.0],
        ];
        for (i, row) in expect.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(m.get(i, j), c(v), "({i},{j})");
            }
        }
    }

    #[test]
    fn single_tap_is_column() {
        let x = [c(1.0), c(-2.0), Complex64::new(0.5, 0.5)];
        let m = ConvolutionMatrix::build(&x, 1).unwrap();
        assert_eq!(m.rows(), 3);
        for (i, v) in x.iter().enumerate() {
            assert_eq!(m.get(i, 0), *v);
        }
    }

    #[test]
    fn underdetermined_rejected() {
        assert!(ConvolutionMatrix::build(&[c(1.0), c(2.0)], 3).is_err());
    }

    #[test]
    fn zero_observation_gives_zero_estimate() {
        let x: Vec<_> = (0..20).map(|i| c((i as f64 * 0.7).sin())).collect();
        let m = ConvolutionMatrix::build(&x, 4).unwrap();
        let h = ls_estimate(&m, &vec![c(0.0); m.rows()], 0).unwrap();
        assert!(h.taps().iter().all(|t| t.norm() == 0.0));
    }

    #[test]
    fn rank_deficient_is_singular() {
        let x = vec![c(0.0); 10];
        let m = ConvolutionMatrix::build(&x, 3).unwrap();
        let err = ls_estimate(&m, &vec![c(1.0); m.rows()], 0).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
    }
}
