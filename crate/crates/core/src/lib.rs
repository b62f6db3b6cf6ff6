//! Channel-estimation laboratory for an IEEE 802.15.4-style O-QPSK/DSSS
//! link.
//!
//! The crate simulates block-fading multipath channels, runs the usual
//! family of channel estimators (full-packet least squares, preamble based,
//! aged, Kalman-tracked AR(p), and a combined preamble/blind fallback),
//! equalizes with zero-forcing filters, and scores everything with packet,
//! chip and mean-squared-error metrics.
//!
//! Module map:
//! - [`trace`]: domain types and the `.vvdtrace` / `.vvdest` formats
//! - [`modem`]: spreading, O-QPSK modulation and despreading
//! - [`channel`]: tapped-delay-line channel, noise and AR evolution
//! - [`scene`]: geometric blocker scenes and depth tensors
//! - [`estimation`]: LS, Kalman, Yule-Walker, phase correction, policies
//! - [`equalization`]: zero-forcing equalizer design and application
//! - [`metrics`]: PER, CER, MSE and aging sweeps
//! - [`harness`]: set combinations, comparison and aging runs

pub mod channel;
mod dsp;
mod linalg;
pub mod equalization;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod metrics;
pub mod modem;
pub mod receiver;
pub mod scene;
pub mod trace;

pub use dsp::{convolve, inner};
pub use error::{Error, Result};
pub use trace::{Cir, ComplexCoeff, EstimateRecord, TraceRecord, TraceSet, Waveform};
