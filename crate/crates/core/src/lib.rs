//! Spiral scattering transform.
//!
//! A cascade of analytic wavelet convolutions and modulus nonlinearities
//! over time, log-frequency and octave index, together with a warped
//! source-filter signal model whose scattering maxima lie on a plane set by
//! the pitch and spectral-envelope velocities.
//!
//! The layers build on each other:
//!
//! - [`filterbank`]: mother wavelet, constant-Q and α/β/γ banks, audits.
//! - [`scalogram`]: `x1`, `S1`, octave/chroma split.
//! - [`scattering`]: time, joint and spiral second-order transforms.
//! - [`sourcefilter`]: synthesis, assumption checks, ridge-plane prediction
//!   and fitting.
//! - [`validation`]: end-to-end scenarios tying the above together.
//! - [`export`]: raw tensor files and JSON sidecars.

pub mod conv;
mod error;
pub mod export;
pub mod filterbank;
pub mod scalogram;
pub mod scattering;
pub mod sourcefilter;
pub mod validation;

pub use error::{Result, SpiralError};
